"""Decide whether 1/s has a pole of order k at a point, and classify rigidity.

Two independent tests are provided:

* :func:`radial_pole_test` integrates ``|u|^{2|k|} / sup_{|v|=|u|} s(v)`` over
  dyadic shells shrinking to 0 and reads divergence off the geometric ratio of
  consecutive shell contributions.
* :func:`gram_pole_test` works from the definition: it computes the smallest
  regularised norm ``int_B |Q|^2 / (s + delta)`` over polynomials ``Q`` of
  degree at most ``D`` whose coefficient at ``u^k`` is one, and checks whether
  that minimum stays bounded as ``delta -> 0``. A bounded minimum comes with
  its minimiser, a finite-norm witness polynomial.

Divergence of an improper integral cannot be decided from finitely many
evaluations; both tests therefore return ``Undetermined`` when the ladder is
neither clearly flat nor clearly geometric.
"""
from dataclasses import dataclass, field
import itertools
import math
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import EvaluationFailure, IllConditioned, MissingAnnotations
from .quadrature import (adaptive_gauss_kronrod, fit_ladder,
                         shell_rule, sphere_area, sphere_directions,
                         sphere_product_rule)

POLE, NO_POLE, UNDETERMINED = "Pole", "NoPole", "Undetermined"
K_RIGID, NOT_K_RIGID, SUFFICIENT_ONLY = "KRigid", "NotKRigid", "SufficientOnly"

DEFAULT_DELTAS = (1e-2, 1e-4, 1e-6, 1e-8, 1e-10)


@dataclass(frozen=True, order=True)
class MultiIndex:
    k: tuple

    def __post_init__(self):
        k = tuple(int(x) for x in self.k)
        if any(x < 0 for x in k):
            raise ValueError("multi-index entries must be nonnegative")
        object.__setattr__(self, "k", k)

    @classmethod
    def of(cls, k, d):
        """Coerce an int (only for d == 1, or 0) or a sequence into a MultiIndex."""
        if isinstance(k, MultiIndex):
            return k
        if np.isscalar(k):
            if d == 1 or k == 0:
                return cls((int(k),) + (0,) * (d - 1))
            raise ValueError(f"an integer multi-index is ambiguous in dimension {d}")
        if len(k) != d:
            raise ValueError(f"multi-index {tuple(k)} does not have dimension {d}")
        return cls(tuple(k))

    @property
    def order(self):
        return sum(self.k)

    @property
    def d(self):
        return len(self.k)

    def precedes(self, other):
        """k' <= k componentwise."""
        return all(a <= b for a, b in zip(self.k, other.k))

    def __str__(self):
        return "(" + ",".join(map(str, self.k)) + ")"


def multi_indices(d, max_degree):
    """All multi-indices with |m| <= max_degree, ordered by degree then lexicographically."""
    out = [m for m in itertools.product(range(max_degree + 1), repeat=d) if sum(m) <= max_degree]
    return sorted(out, key=lambda m: (sum(m), tuple(-x for x in m)))


@dataclass
class PoleVerdict:
    target: MultiIndex
    verdict: str
    method: str                      # "RadialLadder" | "GramNullspace" | "AnnotatedExact"
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"target": list(self.target.k), "verdict": self.verdict,
                "method": self.method, "diagnostics": _jsonable(self.diagnostics)}

    def ladder_csv(self):
        lines = ["shell_index,partial_sum"]
        total = 0.0
        for j, term in enumerate(self.diagnostics.get("ladder", [])):
            total += term
            lines.append(f"{j},{total!r}")
        return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, MultiIndex):
        return list(obj.k)
    return obj


def _evaluate_checked(s, pts):
    if s.domain.is_torus:
        pts = (np.asarray(pts, dtype=float) + math.pi) % (2.0 * math.pi) - math.pi
    with np.errstate(over="ignore", under="ignore"):
        vals = s.evaluate(pts)
    if np.any(np.isnan(vals)) or np.any(vals < 0.0):
        raise EvaluationFailure(f"{s.name or 'density'} returned NaN or a negative value")
    return vals


def _inverse(vals):
    with np.errstate(divide="ignore"):
        return np.where(vals > 0.0, 1.0 / np.where(vals > 0.0, vals, 1.0), np.inf)


# ----------------------------------------------------------------------------
# Radial shell ladder


def radial_pole_test(s, k, eps=0.5, *, n_shells=40, fit_window=20, tau=0.05,
                     flat_tol=0.01, n_sphere=512, order=16, center=None):
    """Shell ladder for ``int_{B(0,eps)} |u|^{2|k|} / s~(u) du``, ``s~`` the sphere supremum.

    Shell ``j`` covers ``eps 2^{-j-1} <= |u| <= eps 2^{-j}`` for ``j = 0..n_shells``.
    The log of the shell sums is fitted linearly over the last ``fit_window``
    shells; the implied ratio ``r`` between consecutive shells decides:
    ``Pole`` if ``r >= 1 - flat_tol`` (contributions do not decay, the
    integral diverges), ``NoPole`` if ``r <= 1 - tau``, else ``Undetermined``.
    """
    d = s.d
    if d > 3:
        raise ValueError("radial pole test supports d <= 3")
    k = MultiIndex.of(k, d)
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    rho, w, idx = shell_rule(eps, n_shells + 1, order)
    if s.flags.isotropic:
        dirs = np.eye(d)[:1]
    else:
        dirs = sphere_directions(d, n_sphere)
    pts = center[None, None, :] + rho[:, None, None] * dirs[None, :, :]
    vals = _evaluate_checked(s, pts.reshape(-1, d)).reshape(len(rho), len(dirs))
    s_sup = vals.max(axis=1)
    with np.errstate(over="ignore", invalid="ignore"):
        integrand = sphere_area(d) * rho ** (2 * k.order + d - 1) * _inverse(s_sup)
        terms = np.bincount(idx, weights=w * integrand, minlength=n_shells + 1)
    terms = np.where(np.isnan(terms), np.inf, terms)
    fit = fit_ladder(terms, window=fit_window, tau=tau, flat_tol=flat_tol)
    verdict = {"divergent": POLE, "convergent": NO_POLE}.get(fit.verdict, UNDETERMINED)
    alpha = 2 * k.order + d + fit.slope / math.log(2.0) if math.isfinite(fit.slope) else math.inf
    return PoleVerdict(k, verdict, "RadialLadder", {
        "fitted_exponent": alpha, "ratio": fit.ratio, "ladder": terms.tolist(),
        "eps": eps, "tau": tau, "flat_tol": flat_tol, "fit_window": fit_window,
    })


# ----------------------------------------------------------------------------
# Local directional integrals around an arbitrary point


def _local_shell_terms(s, center, eps, weights_fn, n_weights, n_shells=40, order=16,
                       n_directions=512, angular_rtol=1e-6, max_panels=3000):
    """Shell integrals ``int_shell_j w_q(|v|) / s(center + v) dv`` for q < n_weights.

    Returns an array (n_weights, n_shells + 1) and a flag telling whether the
    angular integral failed to converge (treated as divergence: the zero set
    of ``s`` is not a point).
    """
    d = s.d
    center = np.asarray(center, dtype=float)
    rho, w, idx = shell_rule(eps, n_shells + 1, order)
    radial = weights_fn(rho) * rho[None, :] ** (d - 1) * w[None, :]    # (q, nodes)

    def shell_sums(inv):                      # inv: (..., nodes)
        out = np.zeros(inv.shape[:-1] + (n_weights, n_shells + 1))
        contrib = inv[..., None, :] * radial
        for j in range(n_shells + 1):
            out[..., j] = contrib[..., idx == j].sum(axis=-1)
        return out

    if d == 1:
        total = np.zeros((n_weights, n_shells + 1))
        for sign in (1.0, -1.0):
            vals = _evaluate_checked(s, (center + sign * rho)[:, None])
            with np.errstate(over="ignore", invalid="ignore"):
                total = total + shell_sums(_inverse(vals))
        return total, False
    if d == 2:
        def g(theta):
            dirs = np.column_stack([np.cos(theta), np.sin(theta)])
            pts = center[None, None, :] + dirs[:, None, :] * rho[None, :, None]
            vals = _evaluate_checked(s, pts.reshape(-1, 2)).reshape(len(theta), len(rho))
            with np.errstate(over="ignore", invalid="ignore"):
                return shell_sums(_inverse(vals)).reshape(len(theta), -1)

        res = adaptive_gauss_kronrod(g, np.linspace(0.0, 2.0 * math.pi, 65),
                                     rtol=angular_rtol, max_panels=max_panels,
                                     componentwise=True)
        if not res.converged:
            return np.full((n_weights, n_shells + 1), np.inf), True
        return res.value.reshape(n_weights, n_shells + 1), False
    if d == 3:
        dirs = sphere_directions(3, n_directions)
        pts = center[None, None, :] + dirs[:, None, :] * rho[None, :, None]
        vals = _evaluate_checked(s, pts.reshape(-1, 3)).reshape(len(dirs), len(rho))
        with np.errstate(over="ignore", invalid="ignore"):
            sums = shell_sums(_inverse(vals)).mean(axis=0) * sphere_area(3)
        return sums, False
    raise ValueError("local pole analysis supports d <= 3")


def _default_local_eps(s, u0):
    eps = 0.25
    for z in s.zeros or ():
        diff = np.asarray(u0) - np.asarray(z.location)
        if s.domain.is_torus:
            diff = (diff + math.pi) % (2 * math.pi) - math.pi
        dist = float(np.linalg.norm(diff))
        if dist > 1e-12:
            eps = min(eps, 0.5 * dist)
    return eps


@dataclass
class PoleOrderReport:
    location: tuple
    order: Optional[int]
    ladders: list               # one list of shell terms per q
    ratios: list
    verdicts: list
    angular_divergence: bool

    def to_dict(self):
        return _jsonable({"location": self.location, "order": self.order,
                          "ratios": self.ratios, "verdicts": self.verdicts,
                          "angular_divergence": self.angular_divergence,
                          "ladders": self.ladders})


def pole_order_report(s, u0, q_cap=10, eps=None, *, n_shells=40, fit_window=20,
                      tau=0.05, flat_tol=0.01):
    """Ladders of ``int_{B(u0,eps)} |u-u0|^{2q} / s(u) du`` for q = 0..q_cap."""
    u0 = tuple(float(x) for x in np.atleast_1d(u0))
    if len(u0) != s.d:
        raise ValueError("pole location has the wrong dimension")
    eps = _default_local_eps(s, u0) if eps is None else eps
    qs = np.arange(q_cap + 1)
    terms, angular = _local_shell_terms(
        s, u0, eps, lambda rho: rho[None, :] ** (2.0 * qs[:, None]), len(qs), n_shells)
    ladders, ratios, verdicts = [], [], []
    order = None
    for q in qs:
        fit = fit_ladder(terms[q], window=fit_window, tau=tau, flat_tol=flat_tol)
        ladders.append(terms[q].tolist())
        ratios.append(fit.ratio)
        verdicts.append(fit.verdict)
        if order is None and fit.verdict == "convergent":
            order = int(q)
    return PoleOrderReport(u0, order, ladders, ratios, verdicts, angular)


def finite_pole_order(s, u0, q_cap=10, eps=None, **kwargs):
    """Least q <= q_cap with ``int_{B(u0,eps)} |u-u0|^{2q}/s < inf``, or None."""
    return pole_order_report(s, u0, q_cap, eps, **kwargs).order


# ----------------------------------------------------------------------------
# Simplicity


@dataclass
class SimpleReport:
    is_simple: bool
    poles: list                  # [(location, q or None)]
    lower_bound: tuple           # (c, p) with s >= c (1+|u|)^-p away from poles
    annotation_mismatches: list
    reasons: list

    def to_dict(self):
        return _jsonable({"is_simple": self.is_simple,
                          "poles": [{"location": loc, "order": q} for loc, q in self.poles],
                          "lower_bound": {"c": self.lower_bound[0], "p": self.lower_bound[1]},
                          "annotation_mismatches": self.annotation_mismatches,
                          "reasons": self.reasons})


def _lower_bound_samples(s, eps, radius):
    d = s.d
    if s.domain.is_torus:
        axis = np.linspace(-math.pi, math.pi, 257 if d == 1 else 65 if d == 2 else 17)
        return np.stack([m.ravel() for m in np.meshgrid(*([axis] * d), indexing="ij")], axis=1)
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif d == 2:
        theta = np.arange(256) * (2.0 * math.pi / 256)      # includes the axes
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    else:
        dirs = np.concatenate([sphere_directions(d, 512), np.eye(d), -np.eye(d)])
    radii = np.concatenate([np.linspace(0.0, 1.0, 33)[1:], np.geomspace(1.0, radius, 64)[1:]])
    pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    return np.concatenate([np.zeros((1, d)), pts])


def classify_simple(s, q_cap=10, eps=None, *, lower_bound_radius=32.0, p_cap=12):
    """Check that 1/s has finitely many finite-order poles and a polynomial lower bound.

    The zero set is an input: every annotated zero is checked with
    :func:`finite_pole_order`, and ``s >= c (1+|u|)^{-p}`` is checked on a
    deterministic sample (radius ``lower_bound_radius`` on Euclidean domains)
    at distance at least ``eps`` from the annotated zeros.
    """
    if s.zeros is None:
        raise MissingAnnotations(f"{s.name or 'density'} has no zero annotations")
    reasons, poles, mismatches = [], [], []
    for z in s.zeros:
        q = finite_pole_order(s, z.location, q_cap, eps)
        poles.append((z.location, q))
        if q is None:
            reasons.append(f"pole at {list(z.location)} has no finite order <= {q_cap}")
        elif q != z.order:
            mismatches.append({"location": list(z.location), "claimed": z.order, "found": q})
    sep = 0.25 if eps is None else eps
    pts = _lower_bound_samples(s, sep, lower_bound_radius)
    for z in s.zeros:
        diff = pts - np.asarray(z.location)
        if s.domain.is_torus:
            diff = (diff + math.pi) % (2 * math.pi) - math.pi
        pts = pts[np.linalg.norm(diff, axis=1) >= sep]
    vals = _evaluate_checked(s, pts)
    norms = np.linalg.norm(pts, axis=1)
    near = norms <= 1.0
    c = float(vals[near].min()) if np.any(near) else float(vals.min())
    p = None
    if c > 0.0 and vals.min() > 0.0:
        away = norms > 0.0
        need = np.log(c / vals[away]) / np.log1p(norms[away])
        p = max(0, int(math.ceil(float(np.max(need, initial=0.0)) - 1e-12)))
    if p is None:
        reasons.append("density vanishes away from the annotated zeros")
    elif p > p_cap:
        reasons.append(f"no polynomial lower bound with p <= {p_cap} (needs p = {p})")
    is_simple = not reasons
    return SimpleReport(is_simple, poles, (c, p), mismatches, reasons)


# ----------------------------------------------------------------------------
# Gram / regularised-norm test


@dataclass
class BallRule:
    """Quadrature rule on the unit ball in the rescaled variable v = u / eps."""
    nodes: np.ndarray
    weights: np.ndarray
    eps: float
    converged: bool


def _driver(s, eps, deltas, center):
    def inv(points):
        vals = _evaluate_checked(s, center + eps * points)
        return 1.0 / (vals[:, None] + deltas[None, :])
    return inv


def ball_rule(s, eps, deltas, *, center=None, n_shells=50, radial_order=8,
              rtol=1e-8, max_panels=3000):
    """Shared rule on B(0,1) (variable v = (u - center)/eps) resolving 1/(s + delta).

    The rule is refined until every ``int 1/(s(eps v) + delta_j) dv`` is
    accurate; all Gram entries are then computed with the same nodes, which
    keeps the quadratic form of each polynomial exactly nonnegative.
    """
    d = s.d
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    f = _driver(s, eps, deltas, center)
    rho, w_rho, _ = shell_rule(1.0, n_shells, radial_order)
    if d == 1:
        edges = np.concatenate([-2.0 ** -np.arange(n_shells + 1), [0.0],
                                2.0 ** -np.arange(n_shells + 1)[::-1]])
        res = adaptive_gauss_kronrod(lambda x: f(x[:, None]), edges, rtol=rtol,
                                     max_panels=max_panels, componentwise=True)
        x, w = res.rule()
        return BallRule(x[:, None], w, eps, res.converged)
    if d == 2:
        def g(theta):
            dirs = np.column_stack([np.cos(theta), np.sin(theta)])
            pts = (dirs[:, None, :] * rho[None, :, None]).reshape(-1, 2)
            vals = f(pts).reshape(len(theta), len(rho), len(deltas))
            return np.einsum("trk,r->tk", vals, w_rho * rho)

        res = adaptive_gauss_kronrod(g, np.linspace(0.0, 2.0 * math.pi, 65), rtol=rtol,
                                     max_panels=max_panels, componentwise=True)
        theta, w_theta = res.rule()
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        nodes = (dirs[:, None, :] * rho[None, :, None]).reshape(-1, 2)
        weights = (w_theta[:, None] * (w_rho * rho)[None, :]).ravel()
        return BallRule(nodes, weights, eps, res.converged)
    if d == 3:
        dirs, w_dir = sphere_product_rule()
        nodes = (dirs[:, None, :] * rho[None, :, None]).reshape(-1, 3)
        weights = (w_dir[:, None] * (w_rho * rho ** 2)[None, :]).ravel()
        return BallRule(nodes, weights, eps, True)
    raise ValueError("Gram pole test supports d <= 3")


def _monomials(nodes, exps):
    out = np.ones((len(nodes), len(exps)))
    for j, m in enumerate(exps):
        for i, p in enumerate(m):
            if p:
                out[:, j] *= nodes[:, i] ** p
    return out


def _gram_matrices(s, rule, exps, deltas, center):
    vals = _evaluate_checked(s, center + rule.eps * rule.nodes)
    phi = _monomials(rule.nodes, exps)
    mats = []
    for delta in deltas:
        wt = rule.weights / (vals + delta)
        mats.append((phi * wt[:, None]).T @ phi)
    return mats


def _aitken(a0, a1, a2):
    """Componentwise Aitken extrapolation of a geometrically converging vector sequence."""
    d1, d2 = a1 - a0, a2 - a1
    denom = d2 - d1
    safe = np.abs(denom) > 1e-14 * np.maximum(np.abs(a2), 1e-300)
    out = a2.copy()
    out[safe] = a2[safe] - d2[safe] ** 2 / denom[safe]
    # keep the raw value where extrapolation would move it by more than the last step
    wild = np.abs(out - a2) > np.abs(d2) * 10 + 1e-300
    out[wild] = a2[wild]
    return out


def _increment_verdict(values, tau, flat_tol, rel_floor=1e-11):
    values = np.asarray(values, dtype=float)
    inc = np.diff(values)
    scale = max(abs(values[-1]), 1e-300)
    if not np.all(np.isfinite(values)):
        return "divergent", math.inf
    if abs(inc[-1]) <= rel_floor * scale:
        return "convergent", 0.0
    inc = np.maximum(inc, rel_floor * scale)
    fit = fit_ladder(inc, window=len(inc), tau=tau, flat_tol=flat_tol)
    return fit.verdict, fit.ratio


def _scale_of(s, eps, center, d):
    dirs = sphere_directions(d, 64) if d > 1 else np.array([[1.0], [-1.0]])
    radii = np.linspace(0.05, 1.0, 20)
    pts = center + eps * (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    vals = _evaluate_checked(s, pts)
    top = float(vals.max())
    return top if top > 0.0 else 1.0


def _gram_single(s, k, D, eps, deltas, tau, flat_tol, center, rule=None):
    d = s.d
    exps = multi_indices(d, D)
    kpos = exps.index(k.k)
    scale = _scale_of(s, eps, center, d)
    deltas_eff = np.asarray(deltas, dtype=float) * scale
    if rule is None:
        rule = ball_rule(s, eps, deltas_eff, center=center)
    mats = _gram_matrices(s, rule, exps, deltas_eff, center)
    spectra = [np.linalg.eigvalsh(G) for G in mats]
    cond = spectra[0][-1] / max(spectra[0][0], 1e-300)
    if cond > 1e14:
        raise IllConditioned(f"Gram condition number {cond:.2e} exceeds 1e14 at delta={deltas[0]}")
    minima, minimisers = [], []
    for G in mats:
        e = np.zeros(len(exps))
        e[kpos] = 1.0
        x = scipy.linalg.solve(G, e, assume_a="pos")
        minima.append(1.0 / x[kpos])
        minimisers.append(x / x[kpos])
    verdict, ratio = _increment_verdict(minima, tau, flat_tol)
    growth = [(spectra[j + 1] / spectra[j]).tolist() for j in range(len(spectra) - 1)]
    diag = {
        "eps": eps, "degree_cap": D, "delta_scale": scale,
        "deltas": list(deltas), "constrained_minima": minima, "ratio": ratio,
        "gram_spectra": [(float(dl), sp.tolist()) for dl, sp in zip(deltas, spectra)],
        "eigen_growth": growth,
        "bounded_dimension": int(np.sum(np.asarray(growth[-1]) <= 10.0)) if growth else None,
        "rule_converged": rule.converged, "rule_size": int(len(rule.weights)),
    }
    if verdict == "convergent":
        a = minimisers[-1] if len(minimisers) < 3 else _aitken(*minimisers[-3:])
        coeffs = a * eps ** -np.array([sum(m) for m in exps], dtype=float)
        coeffs = coeffs / np.linalg.norm(coeffs)
        witness = {tuple(m): float(c) for m, c in zip(exps, coeffs)}
        a_v = coeffs * eps ** np.array([sum(m) for m in exps], dtype=float)
        wl = [float(a_v @ G @ a_v) for G in mats]
        wl_verdict, _ = _increment_verdict(wl, tau, flat_tol)
        diag["witness_polynomial"] = witness
        diag["witness_ladder"] = wl
        diag["witness_bounded"] = wl_verdict == "convergent"
    return {"divergent": POLE, "convergent": NO_POLE}.get(verdict, UNDETERMINED), diag


def gram_pole_test(s, k, degree_cap=None, eps_ladder=(0.5, 0.25), delta_ladder=DEFAULT_DELTAS,
                   *, tau=0.05, flat_tol=0.01, center=None):
    """Regularised-norm test of the k-pole definition at ``center`` (default 0).

    For every ``eps`` in ``eps_ladder`` and ``delta`` in ``delta_ladder``
    (relative to the largest value of ``s`` on the ball) the Gram matrix
    ``G = (int_B v^{m+m'} / (s(eps v) + delta) dv)_{|m|,|m'| <= D}`` is built on a
    shared rule. ``1/(G^-1)_{kk}`` is the smallest norm of a polynomial with
    unit coefficient at ``u^k``; if its increments along the delta ladder stop
    decaying the minimum diverges and ``k`` is a pole. Otherwise the
    minimiser, extrapolated to delta = 0 and mapped back to ``u``, is returned
    as the witness. Verdicts disagreeing across ``eps_ladder`` give
    ``Undetermined``.
    """
    d = s.d
    if d > 3:
        raise ValueError("Gram pole test supports d <= 3")
    k = MultiIndex.of(k, d)
    D = k.order if degree_cap is None else int(degree_cap)
    if D < k.order:
        raise ValueError("degree cap must be at least |k|")
    if D > 8:
        raise ValueError("degree cap above 8 is not supported")
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    results = [_gram_single(s, k, D, eps, delta_ladder, tau, flat_tol, center)
               for eps in eps_ladder]
    verdicts = [v for v, _ in results]
    verdict = verdicts[0] if len(set(verdicts)) == 1 else UNDETERMINED
    diag = dict(results[0][1])
    diag["eps_verdicts"] = verdicts
    if verdict != NO_POLE:
        diag.pop("witness_polynomial", None)
    return PoleVerdict(k, verdict, "GramNullspace", diag)


def polynomial_norm_ladder(s, coeffs, eps, delta_ladder=DEFAULT_DELTAS, rule=None, center=None):
    """``int_{B(0,eps)} |Q|^2 / (s + delta)`` for each delta, Q given as {exponent: coeff}.

    Deltas are absolute here, so ladders of two densities are comparable.
    """
    d = s.d
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    if rule is None:
        rule = ball_rule(s, eps, np.asarray(delta_ladder, dtype=float), center=center)
    exps = [tuple(m) for m in coeffs]
    a = np.array([coeffs[m] for m in coeffs], dtype=float)
    phi = _monomials(eps * rule.nodes, exps)
    q2 = (phi @ a) ** 2
    vals = _evaluate_checked(s, center + eps * rule.nodes)
    jac = eps ** d
    return [float(jac * np.sum(rule.weights * q2 / (vals + dl))) for dl in delta_ladder]


# ----------------------------------------------------------------------------
# Classification


@dataclass
class RigidityVerdict:
    target: MultiIndex
    verdict: str                 # KRigid | NotKRigid | SufficientOnly | Undetermined
    provenance: str
    pole_verdicts: list
    simple: Optional[bool] = None
    k_tolerant: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self):
        return _jsonable({"target": self.target.k, "verdict": self.verdict,
                          "provenance": self.provenance, "simple": self.simple,
                          "k_tolerant": self.k_tolerant, "notes": self.notes,
                          "pole_verdicts": [v.to_dict() for v in self.pole_verdicts]})


def density_is_simple(s, **kwargs):
    """Simplicity from annotations when available, else the declared flag."""
    if s.zeros is not None:
        return classify_simple(s, **kwargs).is_simple
    return bool(s.flags.simple)


def rigidity_classifier(s, k, eps=0.5, *, method="auto", simple=None, pole_verdicts=None,
                        degree_cap=None, **test_kwargs):
    """Combine pole tests with structural flags into a rigidity verdict.

    A pole at 0 always certifies k-rigidity. The absence of a pole only
    certifies non-rigidity when the density is simple, or isotropic, or
    separable (the last two assume the measure is not maximally rigid);
    otherwise the verdict is ``SufficientOnly``.

    ``method`` is ``"radial"``, ``"gram"`` or ``"auto"`` (radial first; the
    Gram test confirms a radial ``NoPole`` when ``s`` is not isotropic, since
    the sphere supremum only gives a sufficient condition).
    """
    d = s.d
    k = MultiIndex.of(k, d)
    verdicts = list(pole_verdicts or [])
    if not verdicts:
        if method in ("radial", "auto"):
            verdicts.append(radial_pole_test(s, k, eps, **test_kwargs))
        if method == "gram" or (method == "auto" and verdicts[-1].verdict != POLE
                                and not (s.flags.isotropic or d == 1)):
            verdicts.append(gram_pole_test(s, k, degree_cap=degree_cap,
                                           eps_ladder=(eps, eps / 2)))
    if not verdicts:
        raise ValueError("at least one pole test must run")
    if simple is None:
        simple = density_is_simple(s)
    outcomes = [v.verdict for v in verdicts]
    if POLE in outcomes:
        return RigidityVerdict(k, K_RIGID, "pole-sufficiency", verdicts, simple)
    final = verdicts[-1].verdict
    if final == UNDETERMINED:
        return RigidityVerdict(k, UNDETERMINED, "pole-test-undetermined", verdicts, simple)
    if simple:
        return RigidityVerdict(k, NOT_K_RIGID, "simple-density-converse", verdicts, simple,
                               k_tolerant=True)
    if s.flags.isotropic:
        return RigidityVerdict(k, NOT_K_RIGID, "isotropic-converse", verdicts, simple,
                               notes=["assumes the measure is not maximally rigid on balls"])
    if s.flags.separable:
        return RigidityVerdict(k, NOT_K_RIGID, "separable-converse", verdicts, simple,
                               notes=["assumes the measure is not maximally rigid on boxes"])
    return RigidityVerdict(k, SUFFICIENT_ONLY, "converse-not-established", verdicts, simple,
                           notes=["no pole at 0, but the density is neither simple, isotropic "
                                  "nor separable, so rigidity is not excluded"])


def check_downward_closure(verdicts):
    """Pairs (k, k') with k' <= k where k is a pole but k' is reported as not a pole."""
    poles = [v.target for v in verdicts if v.verdict == POLE]
    non_poles = [v.target for v in verdicts if v.verdict == NO_POLE]
    return [(k, kp) for k in poles for kp in non_poles if kp.precedes(k)]


# ----------------------------------------------------------------------------
# Covariance moment report (consequence checks for hyperuniform models)


def covariance_moment_report(corr, d, order, *, n_shells=40, n_directions=256,
                             tau=0.05, flat_tol=0.01):
    """Outward shell ladder for ``int |t|^order |c(t)| dt`` of a correlation density.

    A hyperuniform, isotropic, non number-rigid measure in d in {1, 2} must
    have a divergent moment of order d; this report exposes that ladder.
    """
    dirs = sphere_directions(d, n_directions)
    x, w = np.polynomial.legendre.leggauss(16)
    edges = np.concatenate([[0.0], 2.0 ** np.arange(n_shells + 1)])
    terms = []
    for a, b in zip(edges[:-1], edges[1:]):
        r = 0.5 * (a + b) + 0.5 * (b - a) * x
        pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, d)
        vals = np.abs(np.asarray(corr(pts), dtype=float)).reshape(len(r), len(dirs)).mean(axis=1)
        terms.append(0.5 * (b - a) * float(np.sum(w * vals * r ** (order + d - 1))) * sphere_area(d))
    fit = fit_ladder(np.asarray(terms[1:]), window=min(20, n_shells), tau=tau, flat_tol=flat_tol)
    return {"order": order, "verdict": fit.verdict, "ratio": fit.ratio,
            "shell_terms": terms, "partial_sum": float(np.sum(terms))}
