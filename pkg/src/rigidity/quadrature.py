"""Quadrature primitives: vectorised adaptive Gauss-Kronrod, dyadic shells,
sphere direction sets and the shell-ladder divergence fit.

Everything here is deterministic: panels are kept sorted by their left end
and all reductions are done in that order, so results do not depend on the
order in which panels were refined.
"""
from dataclasses import dataclass, field
import math

import numpy as np

# 15-point Kronrod nodes on [0, 1] (the rule is symmetric) with the embedded
# 7-point Gauss weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, 5, 7 from the outside).
GAUSS_WEIGHTS_ON_KRONROD = np.zeros(15)
GAUSS_WEIGHTS_ON_KRONROD[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS_ON_KRONROD[[13, 11, 9]] = _WG[:3]
GAUSS_WEIGHTS_ON_KRONROD[7] = _WG[3]


@dataclass
class QuadResult:
    value: np.ndarray
    error: np.ndarray
    converged: bool
    panels: np.ndarray = field(repr=False)   # (n, 2) final panel edges

    def rule(self):
        """Return the (nodes, weights) of the final Kronrod rule."""
        return kronrod_rule(self.panels)


def kronrod_rule(panels):
    """Nodes and weights of the composite 15-point Kronrod rule on ``panels``."""
    panels = np.asarray(panels, dtype=float)
    mid = 0.5 * (panels[:, 0] + panels[:, 1])
    half = 0.5 * (panels[:, 1] - panels[:, 0])
    nodes = mid[:, None] + half[:, None] * KRONROD_NODES[None, :]
    weights = half[:, None] * KRONROD_WEIGHTS[None, :]
    return nodes.ravel(), weights.ravel()


def _panel_estimates(f, lo, hi):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * KRONROD_NODES[None, :]
    vals = np.asarray(f(x.ravel()), dtype=float)
    vals = vals.reshape(x.shape + vals.shape[1:])
    # vals: (panels, 15, *out)
    k = np.einsum("pn...,n->p...", vals, KRONROD_WEIGHTS)
    g = np.einsum("pn...,n->p...", vals, GAUSS_WEIGHTS_ON_KRONROD)
    scale = half.reshape((-1,) + (1,) * (k.ndim - 1))
    return k * scale, np.abs(k - g) * scale


def adaptive_gauss_kronrod(f, edges, *, rtol=1e-10, atol=0.0,
                           max_panels=4000, componentwise=False):
    """Integrate a vector-valued function with adaptive G7-K15 bisection.

    Parameters
    ----------
    f : callable
        ``f(x)`` receives a 1-D array of abscissae and returns an array whose
        leading axis matches ``x``; trailing axes are integrated componentwise.
    edges : sequence of float
        Initial panel boundaries (sorted). Singular points should be edges.
    rtol, atol : float
        Stopping rule. With ``componentwise`` each output component must meet
        ``err <= max(atol, rtol*|value|)``; otherwise the sup-norm of the
        error is compared against ``rtol`` times the sup-norm of the value.
    max_panels : int
        Refinement budget. Exhausting it returns ``converged=False``.

    Returns
    -------
    QuadResult
    """
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1].copy(), edges[1:].copy()
    val, err = _panel_estimates(f, lo, hi)
    converged = False
    while True:
        total = val.sum(axis=0)
        total_err = err.sum(axis=0)
        if not (np.all(np.isfinite(total)) and np.all(np.isfinite(total_err))):
            break
        if componentwise:
            tol = np.maximum(atol, rtol * np.abs(total))
            ok = np.all(total_err <= tol)
        else:
            tol = max(atol, rtol * float(np.max(np.abs(total), initial=0.0)))
            ok = float(np.max(total_err, initial=0.0)) <= tol
        if ok:
            converged = True
            break
        if len(lo) >= max_panels:
            break
        # Relative badness of each panel, reduced to one number per panel.
        if componentwise:
            badness = (err / np.maximum(tol, 1e-300)).reshape(len(lo), -1).max(axis=1)
        else:
            badness = err.reshape(len(lo), -1).max(axis=1) / max(tol, 1e-300)
        # split every panel above its fair share of the tolerance
        n_split = int(np.count_nonzero(badness * len(lo) > 1.0))
        n_split = max(1, min(n_split, max_panels - len(lo)))
        order = np.argsort(-badness, kind="stable")[:n_split]
        split = np.zeros(len(lo), dtype=bool)
        split[order] = True
        mids = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mids])
        new_hi = np.concatenate([mids, hi[split]])
        nval, nerr = _panel_estimates(f, new_lo, new_hi)
        lo = np.concatenate([lo[~split], new_lo])
        hi = np.concatenate([hi[~split], new_hi])
        val = np.concatenate([val[~split], nval])
        err = np.concatenate([err[~split], nerr])
        perm = np.argsort(lo, kind="stable")
        lo, hi, val, err = lo[perm], hi[perm], val[perm], err[perm]
    return QuadResult(value=pairwise_sum(val), error=err.sum(axis=0),
                      converged=converged, panels=np.column_stack([lo, hi]))


def pairwise_sum(values):
    """Fixed-order pairwise reduction along axis 0."""
    values = np.asarray(values)
    while values.shape[0] > 1:
        if values.shape[0] % 2:
            values = np.concatenate([values, np.zeros_like(values[:1])])
        values = values[0::2] + values[1::2]
    return values[0] if values.shape[0] else np.zeros(values.shape[1:])


def gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


def dyadic_edges(eps, n_shells):
    """Radii eps, eps/2, ..., eps/2**n_shells (decreasing)."""
    return eps * 2.0 ** -np.arange(n_shells + 1, dtype=float)


def shell_rule(eps, n_shells, order=16):
    """Gauss-Legendre nodes on each dyadic shell [eps 2^-(j+1), eps 2^-j].

    Returns ``(rho, w, shell_index)``, flat arrays of equal length.
    """
    x, w = gauss_legendre(order)
    outer = dyadic_edges(eps, n_shells)
    a, b = outer[1:], outer[:-1]
    rho = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * x[None, :]
    wt = 0.5 * (b - a)[:, None] * w[None, :]
    idx = np.repeat(np.arange(n_shells), order)
    return rho.ravel(), wt.ravel(), idx


def sphere_area(d):
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def sphere_directions(d, n=512):
    """Deterministic quasi-uniform unit vectors in R^d (d <= 3)."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        theta = (np.arange(n) + 0.5) * (2.0 * math.pi / n)
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if d == 3:
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        r = np.sqrt(1.0 - z * z)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise ValueError(f"direction sets are only provided for d <= 3, got d={d}")


def sphere_product_rule(n_polar=48, n_azimuth=96):
    """Gauss-Legendre in cos(polar) times trapezoid in azimuth on S^2."""
    x, w = gauss_legendre(n_polar)
    phi = (np.arange(n_azimuth) + 0.5) * (2.0 * math.pi / n_azimuth)
    st = np.sqrt(1.0 - x * x)
    dirs = np.stack([
        (st[:, None] * np.cos(phi)[None, :]).ravel(),
        (st[:, None] * np.sin(phi)[None, :]).ravel(),
        np.repeat(x, n_azimuth),
    ], axis=1)
    weights = np.repeat(w, n_azimuth) * (2.0 * math.pi / n_azimuth)
    return dirs, weights


@dataclass(frozen=True)
class LadderFit:
    ratio: float        # fitted geometric ratio between consecutive terms
    slope: float        # least-squares slope of log(term) per index
    verdict: str        # "divergent" | "convergent" | "undetermined"


def fit_ladder(terms, window=20, tau=0.05, flat_tol=0.01):
    """Fit log(terms) against index over the last ``window`` entries.

    A ratio of at least ``1 - flat_tol`` means the terms do not decay, so the
    series diverges; a ratio at most ``1 - tau`` means geometric decay.
    Infinite or NaN-free overflowed terms count as divergence.
    """
    terms = np.asarray(terms, dtype=float)
    if np.any(np.isinf(terms)):
        return LadderFit(math.inf, math.inf, "divergent")
    tail = terms[-window:]
    if np.all(tail == 0.0):
        return LadderFit(0.0, -math.inf, "convergent")
    if np.any(tail <= 0.0):
        # zeros interleaved with positive terms: fall back on the raw trend
        floor = max(float(np.min(tail[tail > 0.0])) * 1e-30, np.finfo(float).tiny)
        tail = np.maximum(tail, floor)
    j = np.arange(len(tail), dtype=float)
    slope = float(np.polyfit(j, np.log(tail), 1)[0])
    ratio = math.exp(slope)
    if ratio >= 1.0 - flat_tol:
        verdict = "divergent"
    elif ratio <= 1.0 - tau:
        verdict = "convergent"
    else:
        verdict = "undetermined"
    return LadderFit(ratio, slope, verdict)
