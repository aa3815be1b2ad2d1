"""Finite-section linear interpolation on Z^d and exact rigidity tests in d = 1.

The predictor minimises ``Var(X(gamma) - sum_n h(n) X(n))`` over ``h``
supported on the annulus ``[[N]]^d \\ [[m]]^d``; its normal equations only
involve covariances. As ``N`` grows the residual decreases to the distance
from ``X(gamma)`` to the closed span of the outside variables, which is zero
exactly when the process is linearly gamma-rigid on the window.

For d = 1 the finite-norm trigonometric polynomials of degree ``m`` are
described exactly by their roots: ``psi`` lies in ``L^2(1/s)`` iff
``e^{imu} psi(u)`` is divisible by ``prod (z - e^{i u_j})`` over the poles of
``1/s`` repeated by their order.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
from typing import Optional
import warnings

import numpy as np
import scipy.linalg

from .errors import InconsistentAnnotations, SingularGramWarning
from .pole_analysis import (_aitken, _increment_verdict, DEFAULT_DELTAS, MultiIndex,
                            _jsonable, finite_pole_order)
from .quadrature import adaptive_gauss_kronrod, fit_ladder, kronrod_rule, shell_rule
from .spectral_core import (SpectralDensity, ZeroAnnotation,
                            _graded_edges, covariance_from_density, lattice_box)

RIGID, NOT_RIGID, UNDETERMINED = "Rigid", "NotRigid", "Undetermined"


@dataclass(frozen=True)
class WindowSpec:
    """The box A = {-m..m}^d."""
    m: int
    d: int = 1

    def __post_init__(self):
        if self.m < 0 or self.d < 1:
            raise ValueError("window needs m >= 0 and d >= 1")

    @property
    def size(self):
        return (2 * self.m + 1) ** self.d

    def points(self):
        return lattice_box(self.m, self.d)


def annulus_points(N, m, d):
    """Lattice points with m < |n|_inf <= N, in lexicographic order."""
    box = lattice_box(N, d)
    return box[np.max(np.abs(box), axis=1) > m]


@dataclass(frozen=True)
class TargetFunctional:
    """Coefficients gamma on the window: mass, a monomial moment, or custom."""
    kind: str                               # "mass" | "moment" | "custom"
    k: Optional[tuple] = None
    coefficients: Optional[dict] = field(default=None, hash=False)

    @classmethod
    def mass(cls):
        return cls("mass")

    @classmethod
    def moment(cls, k):
        return cls("moment", k=tuple(np.atleast_1d(k).astype(int).tolist()))

    @classmethod
    def custom(cls, coefficients):
        return cls("custom", coefficients=dict(coefficients))

    def weights(self, window):
        """Return the window points and gamma on them."""
        pts = window.points()
        if self.kind == "mass":
            return pts, np.ones(len(pts))
        if self.kind == "moment":
            k = self.k if len(self.k) == window.d else MultiIndex.of(self.k[0], window.d).k
            return pts, np.prod(pts.astype(float) ** np.array(k, dtype=float), axis=1)
        if self.kind == "custom":
            vals = np.zeros(len(pts))
            index = {tuple(p): i for i, p in enumerate(pts.tolist())}
            for key, v in self.coefficients.items():
                key = (int(key),) if np.isscalar(key) else tuple(int(x) for x in key)
                if key not in index:
                    raise ValueError(f"custom target has support {key} outside the window")
                vals[index[key]] = float(v)
            return pts, vals
        raise ValueError(f"unknown target kind {self.kind!r}")

    def describe(self):
        if self.kind == "moment":
            return {"kind": "moment", "k": list(self.k)}
        if self.kind == "custom":
            return {"kind": "custom", "coefficients": {str(k): v for k, v in self.coefficients.items()}}
        return {"kind": self.kind}


@dataclass
class CurveFit:
    flag: str
    limit: float
    stderr: float
    interval: tuple
    beta: float
    slope: float

    def to_dict(self):
        return _jsonable({"flag": self.flag, "limit": self.limit, "stderr": self.stderr,
                          "interval": list(self.interval), "beta": self.beta,
                          "slope": self.slope})


@dataclass
class PredictionResult:
    N: int
    window: WindowSpec
    target: TargetFunctional
    coefficients: dict                 # annulus point -> h(n)
    residual_variance: float
    target_variance: float
    system_residual: float             # |G h - c| / |c|
    singular: bool = False
    curve: list = field(default_factory=list)      # [(N, residual)]
    extrapolation: Optional[CurveFit] = None

    @property
    def rigid_flag(self):
        return self.extrapolation.flag if self.extrapolation else UNDETERMINED

    @property
    def extrapolated_limit(self):
        return self.extrapolation.limit if self.extrapolation else None

    def to_dict(self, include_coefficients=False):
        out = {"N": self.N, "m": self.window.m, "d": self.window.d,
               "target": self.target.describe(),
               "residual_variance": self.residual_variance,
               "target_variance": self.target_variance,
               "system_residual": self.system_residual, "singular": self.singular,
               "curve": [[n, r] for n, r in self.curve],
               "rigid_flag": self.rigid_flag,
               "extrapolation": self.extrapolation.to_dict() if self.extrapolation else None}
        if include_coefficients:
            out["coefficients"] = [[list(k), v] for k, v in self.coefficients.items()]
        return _jsonable(out)

    def curve_csv(self):
        return "N,residual\n" + "".join(f"{n},{r!r}\n" for n, r in self.curve)


def _solve_normal_equations(G, c, c0):
    """Solve G h = c for PSD G: Cholesky, then jittered Cholesky, then least squares."""
    for jitter in (0.0, 1e-12 * c0):
        try:
            factor = scipy.linalg.cho_factor(G + jitter * np.eye(len(G)), lower=True)
            return scipy.linalg.cho_solve(factor, c), False
        except np.linalg.LinAlgError:
            continue
    warnings.warn("annulus Gram matrix is singular beyond jitter; using least squares",
                  SingularGramWarning, stacklevel=3)
    return np.linalg.lstsq(G, c, rcond=None)[0], True


def _as_covariance(cov, radius):
    if isinstance(cov, SpectralDensity):
        return covariance_from_density(cov, radius)
    return cov


def best_linear_predictor(cov, window, target, N):
    """Best linear predictor of X(gamma) from the annulus {m < |n|_inf <= N}.

    Parameters
    ----------
    cov : CovarianceSequence or SpectralDensity
        A torus density is converted to covariances on the box of radius 2N.
    window : WindowSpec
    target : TargetFunctional
    N : int
        Outer radius, N > m.

    Returns
    -------
    PredictionResult
        ``residual_variance = Var(X(gamma)) - 2 h.c + h^T G h``, evaluated from
        covariances for the computed ``h``.
    """
    if N <= window.m:
        raise ValueError("outer radius N must exceed the window radius m")
    cov = _as_covariance(cov, 2 * N)
    if cov.d != window.d:
        raise ValueError("window and covariance dimensions differ")
    a_pts, gamma = target.weights(window)
    b_pts = annulus_points(N, window.m, window.d)
    G = cov.gram(b_pts)
    c = cov.gram(b_pts, a_pts) @ gamma
    var = float(gamma @ cov.gram(a_pts) @ gamma)
    h, singular = _solve_normal_equations(G, c, cov.c0)
    Gh = G @ h
    resid = var - 2.0 * float(h @ c) + float(h @ Gh)
    if -1e-12 * max(var, 1e-300) < resid < 0.0:
        resid = 0.0
    cnorm = float(np.linalg.norm(c))
    sys_res = float(np.linalg.norm(Gh - c)) / cnorm if cnorm > 0 else float(np.linalg.norm(Gh))
    coeffs = {tuple(p): float(v) for p, v in zip(b_pts.tolist(), h)}
    return PredictionResult(N, window, target, coeffs, resid, var, sys_res, singular,
                            curve=[(N, resid)])


def prediction_curve(cov, window, target, truncations, *, workers=1, fit=True):
    """Residuals for every N in ``truncations``; the result for the largest N carries the curve.

    Solves run concurrently with ``workers`` threads; results are collected
    in the order of ``truncations``.
    """
    Ns = sorted(int(n) for n in truncations)
    cov = _as_covariance(cov, 2 * Ns[-1])

    def solve(n):
        return best_linear_predictor(cov, window, target, n)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve, Ns))
    else:
        results = [solve(n) for n in Ns]
    final = results[-1]
    final.curve = [(r.N, r.residual_variance) for r in results]
    final.singular = any(r.singular for r in results)
    if fit and len(Ns) >= 8:
        final.extrapolation = rigidity_from_curve(final.curve)
    return final


def rigidity_from_curve(curve, beta_range=(0.25, 3.0), n_beta=276):
    """Fit residual(N) = a + b N^{-beta} and decide whether the limit a is zero.

    Residuals are weighted by ``1/r(N)`` (relative errors), so the tail of a
    decaying curve is not swamped by its first points. ``beta`` is chosen on
    a grid over ``beta_range`` minimising the weighted squared error; for the
    best beta, (a, b) come from linear least squares and the standard error
    of ``a`` from the residual variance. ``Rigid`` iff
    ``a <= max(1e-6, 3 se)``; ``NotRigid`` iff ``a >= 10 se`` and ``a >= 1e-4``.
    """
    N = np.array([float(n) for n, _ in curve])
    r = np.array([float(v) for _, v in curve])
    if len(N) < 8:
        raise ValueError("the curve needs at least 8 points")
    w = 1.0 / np.maximum(np.abs(r), 1e-300)
    if np.all(r == 0.0):
        w = np.ones_like(r)
    best = None
    for beta in np.linspace(beta_range[0], beta_range[1], n_beta):
        X = np.column_stack([np.ones_like(N), N ** -beta]) * w[:, None]
        coef, *_ = np.linalg.lstsq(X, r * w, rcond=None)
        sse = float(np.sum((X @ coef - r * w) ** 2))
        if best is None or sse < best[0]:
            best = (sse, beta, coef, X)
    sse, beta, (a, b), X = best
    dof = max(len(N) - 3, 1)
    sigma2 = sse / dof
    xtx_inv = np.linalg.pinv(X.T @ X)
    se = math.sqrt(max(sigma2 * xtx_inv[0, 0], 0.0))
    if a <= max(1e-6, 3.0 * se):
        flag = RIGID
    elif a >= 10.0 * se and a >= 1e-4:
        flag = NOT_RIGID
    else:
        flag = UNDETERMINED
    return CurveFit(flag, float(a), se, (float(a - 1.96 * se), float(a + 1.96 * se)),
                    float(beta), float(b))


def kolmogorov_interpolation_variance(s, rtol=1e-12):
    """Error of interpolating X_0 from all X_n, n != 0: ``(2 pi)^2 / int 1/s``.

    Returns 0 when ``1/s`` is not integrable.
    """
    if s.d != 1 or not s.domain.is_torus:
        raise ValueError("the interpolation formula needs a density on the circle")
    zero_pts = [z.location[0] for z in s.zeros or ()]

    def inv(u):
        with np.errstate(divide="ignore", over="ignore"):
            return 1.0 / s.evaluate(u[:, None])

    res = adaptive_gauss_kronrod(inv, _graded_edges(-math.pi, math.pi, zero_pts),
                                 rtol=rtol, max_panels=20000)
    if not res.converged or not math.isfinite(float(res.value)):
        return 0.0
    return (2.0 * math.pi) ** 2 / float(res.value)


# ----------------------------------------------------------------------------
# Trigonometric polynomials and the exact one-dimensional tests


@dataclass(frozen=True)
class TrigPolynomial:
    """psi(u) = sum_m a_m e^{i m.u} over a finite set of lattice points."""
    coefficients: dict
    d: int = 1

    def __post_init__(self):
        coeffs = {}
        for key, v in self.coefficients.items():
            key = (int(key),) if np.isscalar(key) else tuple(int(x) for x in key)
            coeffs[key] = complex(v)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self):
        return max((max(abs(x) for x in k) for k, v in self.coefficients.items() if v != 0),
                   default=0)

    def __call__(self, u):
        pts = np.asarray(u, dtype=float).reshape(-1, self.d)
        keys = np.array(list(self.coefficients), dtype=float).reshape(-1, self.d)
        a = np.array(list(self.coefficients.values()))
        return np.exp(1j * pts @ keys.T) @ a

    def moment(self, k):
        """sum_m m^k a_m, which equals i^{-|k|} times the k-th derivative at 0."""
        k = np.array(MultiIndex.of(k, self.d).k, dtype=float)
        keys = np.array(list(self.coefficients), dtype=float).reshape(-1, self.d)
        a = np.array(list(self.coefficients.values()))
        return complex(np.prod(keys ** k, axis=1) @ a)

    def derivative_at_zero(self, k):
        return (1j) ** MultiIndex.of(k, self.d).order * self.moment(k)

    def is_even(self, tol=1e-12):
        scale = max(abs(v) for v in self.coefficients.values())
        return all(abs(v - self.coefficients.get(tuple(-x for x in key), 0.0)) <= tol * scale
                   for key, v in self.coefficients.items())

    def real_if_close(self, tol=1e-12):
        scale = max(abs(v) for v in self.coefficients.values())
        if all(abs(v.imag) <= tol * scale for v in self.coefficients.values()):
            return {k: v.real for k, v in self.coefficients.items()}
        return self.coefficients

    def to_dict(self):
        coeffs = self.real_if_close()
        items = []
        for k, v in sorted(coeffs.items()):
            items.append([list(k), v] if isinstance(v, float) else [list(k), [v.real, v.imag]])
        return {"d": self.d, "degree": self.degree, "coefficients": items}


def _wrap(u):
    return (u + math.pi) % (2.0 * math.pi) - math.pi


def _pole_list(s, zeros):
    """Annotated poles on the circle as {location in [-pi, pi): order}, closed under u -> -u."""
    if zeros is None:
        zeros = s.zeros or ()
    poles = {}
    for z in zeros:
        loc, order = (z.location[0], z.order) if isinstance(z, ZeroAnnotation) else z
        loc = float(_wrap(np.asarray(loc, dtype=float).reshape(-1)[0]))
        if order > 0:
            poles[loc] = int(order)
    for loc, order in list(poles.items()):
        mirror = float(_wrap(-loc))
        if not any(math.isclose(mirror, p, abs_tol=1e-12) for p in poles):
            poles[mirror] = order
    return dict(sorted(poles.items()))


def _roots_of(poles):
    roots = []
    for loc, order in poles.items():
        roots.extend([np.exp(1j * loc)] * order)
    return roots


def _psi_from_roots(roots, m):
    """psi(u) = e^{-imu} prod (e^{iu} - z_j) as a TrigPolynomial (len(roots) == 2m)."""
    coeffs = np.poly(roots) if roots else np.array([1.0])
    coeffs = coeffs[::-1]            # ascending powers of z
    return TrigPolynomial({n - m: coeffs[n] for n in range(len(coeffs))})


def _factor_at(psi, u0, q, rel_tol=1e-9):
    """Split ``z^m psi = (z - z0)^q R(z) + rem(z)`` with ``z0 = e^{i u0}``.

    Near ``u0`` the coefficient form of ``psi`` loses all relative accuracy,
    so ``|psi|`` is evaluated as ``|2 sin((u - u0)/2)|^q |R(e^{iu})|``. A
    remainder at rounding level is dropped; a larger one is kept, and then
    the ladder sees the true lack of vanishing. Returns ``(|psi|^2 callable,
    relative remainder)``.
    """
    m = -min(k[0] for k in psi.coefficients)
    deg = max(k[0] for k in psi.coefficients) + m
    asc = np.zeros(deg + 1, dtype=complex)
    for k, v in psi.coefficients.items():
        asc[k[0] + m] = v
    if q == 0:
        return (lambda u: np.abs(psi(u)) ** 2), 0.0
    z0 = np.exp(1j * u0)
    quot, rem = np.polydiv(asc[::-1], np.poly([z0] * q))
    residual = float(np.linalg.norm(rem) / max(np.linalg.norm(asc), 1e-300))
    keep_rem = residual > rel_tol

    def abs_sq(u):
        z = np.exp(1j * np.asarray(u, dtype=float))
        chord = np.abs(2.0 * np.sin(0.5 * (np.asarray(u, dtype=float) - u0))) ** q
        val = chord * np.abs(np.polyval(quot, z))
        if keep_rem:
            val = np.abs((z - z0) ** q * np.polyval(quot, z) + np.polyval(rem, z))
        return val ** 2

    return abs_sq, residual


def _local_norm_ladder(s, abs_sq, u0, eps, n_shells=40):
    rho, w, idx = shell_rule(eps, n_shells + 1)
    terms = np.zeros(n_shells + 1)
    for sign in (1.0, -1.0):
        u = u0 + sign * rho
        vals = s.evaluate(_wrap(u)[:, None])
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            f = abs_sq(u) / vals
        f = np.where(np.isnan(f), np.inf, f)
        terms += np.bincount(idx, weights=w * f, minlength=n_shells + 1)
    return terms


def witness_norm_ladders(s, psi, poles, eps=None):
    """Shell ladders of ``int |psi|^2 / s`` around each pole; all must converge."""
    locs = list(poles)
    out = {}
    for loc in locs:
        sep = [abs(_wrap(loc - o)) for o in locs if o != loc]
        e = min([0.25] + [0.5 * x for x in sep]) if eps is None else eps
        abs_sq, residual = _factor_at(psi, loc, poles[loc])
        terms = _local_norm_ladder(s, abs_sq, loc, e)
        fit = fit_ladder(terms)
        out[loc] = {"ladder": terms.tolist(), "ratio": fit.ratio,
                    "division_residual": residual,
                    "bounded": fit.verdict == "convergent" or bool(np.all(terms == 0.0))}
    return out


@dataclass
class LmrResult:
    lmr: bool
    total_multiplicity: int
    m: int
    poles: dict
    witness: Optional[TrigPolynomial] = None
    witness_ladders: dict = field(default_factory=dict)

    @property
    def witness_bounded(self):
        return all(v["bounded"] for v in self.witness_ladders.values())

    def to_dict(self):
        return _jsonable({"lmr": self.lmr, "total_multiplicity": self.total_multiplicity,
                          "m": self.m, "poles": [[k, v] for k, v in self.poles.items()],
                          "witness": self.witness.to_dict() if self.witness else None,
                          "witness_bounded": self.witness_bounded if self.witness else None})


def _validate_orders(s, poles, q_cap=10):
    for loc, order in poles.items():
        found = finite_pole_order(s, (loc,), q_cap=max(q_cap, order + 2))
        if found != order:
            raise InconsistentAnnotations(
                f"pole at {loc:.6g} is annotated with order {order} but its ladder gives {found}")


def lmr_test_1d(s, zeros=None, m=0, *, validate=True):
    """Linear maximal rigidity on {-m..m} for a density on the circle.

    ``zeros`` lists (location, order) pairs or ZeroAnnotations (default:
    the annotations of ``s``); mirrored locations are added by evenness.
    Not LMR iff the orders sum to at most 2m; then the witness
    ``e^{-imu} prod (e^{iu} - e^{iu_j})``, padded with roots at 1 up to
    degree m, is returned together with its norm ladders.
    """
    if s.d != 1 or not s.domain.is_torus:
        raise ValueError("lmr_test_1d needs a density on the circle")
    poles = _pole_list(s, zeros)
    if validate:
        _validate_orders(s, poles)
    total = sum(poles.values())
    if total > 2 * m:
        return LmrResult(True, total, m, poles)
    pad = 2 * m - total
    roots = _roots_of(poles) + [1.0] * pad
    psi = _psi_from_roots(roots, m)
    # the padding roots sit at u = 0: divide them out there as well
    ladders = witness_norm_ladders(s, psi, {**poles, 0.0: poles.get(0.0, 0) + pad})
    return LmrResult(False, total, m, poles, psi, ladders)


@dataclass
class DiscreteRigidity:
    rigid: Optional[bool]              # None when undetermined
    k: MultiIndex
    m: int
    method: str                        # "RootFactorisation" | "TrigGram"
    witness: Optional[TrigPolynomial] = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return {True: RIGID, False: NOT_RIGID, None: UNDETERMINED}[self.rigid]

    def to_dict(self):
        return _jsonable({"k": self.k.k, "m": self.m, "verdict": self.verdict,
                          "method": self.method,
                          "witness": self.witness.to_dict() if self.witness else None,
                          "diagnostics": self.diagnostics})


def _k_rigid_roots(s, poles, m, k, tol):
    total = sum(poles.values())
    if total > 2 * m:
        return DiscreteRigidity(True, k, m, "RootFactorisation",
                                diagnostics={"total_multiplicity": total, "lmr": True})
    base = np.poly(_roots_of(poles))[::-1] if poles else np.array([1.0 + 0j])
    values, basis = [], []
    for j in range(2 * m - total + 1):
        coeffs = np.concatenate([np.zeros(j), base, np.zeros(2 * m - total - j)])
        coeffs = coeffs / np.linalg.norm(coeffs)
        psi = TrigPolynomial({n - m: coeffs[n] for n in range(2 * m + 1)})
        basis.append(psi)
        values.append(psi.moment(k))
    diag = {"total_multiplicity": total, "lmr": False,
            "moment_values": [abs(v) for v in values]}
    j = int(np.argmax(np.abs(values)))
    if abs(values[j]) <= tol:
        return DiscreteRigidity(True, k, m, "RootFactorisation", diagnostics=diag)
    # psi(u) + (-1)^k psi(-u) keeps the moment (doubled) and has definite parity
    sign = (-1) ** k.order
    psi = basis[j]
    sym = {n: psi.coefficients.get((n,), 0) + sign * psi.coefficients.get((-n,), 0)
           for n in range(-m, m + 1)}
    scale = max(abs(v) for v in sym.values())
    witness = TrigPolynomial({n: v / scale for n, v in sym.items()})
    witness = TrigPolynomial(witness.real_if_close())
    ladder_poles = {**poles, **({0.0: 0} if 0.0 not in poles else {})}
    diag["witness_ladders"] = witness_norm_ladders(s, witness, ladder_poles)
    return DiscreteRigidity(False, k, m, "RootFactorisation", witness, diag)


def _torus_rule(s, deltas, rtol=1e-8, max_panels=4000):
    """Shared quadrature for ``1/(s + delta)`` on T^d (adaptive in d = 1, graded tensor otherwise)."""
    d = s.d
    zero_coords = [[z.location[i] for z in s.zeros or ()] for i in range(d)]
    if d == 1:
        def inv(u):
            vals = s.evaluate(u[:, None])
            return 1.0 / (vals[:, None] + deltas[None, :])
        res = adaptive_gauss_kronrod(inv, _graded_edges(-math.pi, math.pi, zero_coords[0],
                                                        levels=40),
                                     rtol=rtol, max_panels=max_panels, componentwise=True)
        x, w = res.rule()
        return x[:, None], w
    nodes, weights = [], []
    for i in range(d):
        edges = _graded_edges(-math.pi, math.pi, zero_coords[i], levels=30, base=16)
        x, w = kronrod_rule(np.column_stack([edges[:-1], edges[1:]]))
        nodes.append(x)
        weights.append(w)
    mesh = np.meshgrid(*nodes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    wt = weights[0]
    for w in weights[1:]:
        wt = np.multiply.outer(wt, w)
    return pts, wt.ravel()


def _k_rigid_gram(s, m, k, deltas, tau, flat_tol):
    d = s.d
    deltas = np.asarray(deltas, dtype=float)
    pts, w = _torus_rule(s, deltas)
    vals = s.evaluate(pts)
    scale = float(vals.max()) if vals.max() > 0 else 1.0
    deltas_eff = deltas * scale
    window = lattice_box(m, d)
    phi = np.exp(1j * pts @ window.T.astype(float))
    c = np.prod(window.astype(float) ** np.array(k.k, dtype=float), axis=1)
    minima, minimisers, spectra = [], [], []
    for delta in deltas_eff:
        wt = w / (vals + delta)
        G = (phi.conj() * wt[:, None]).T @ phi
        G = 0.5 * (G + G.conj().T)
        spectra.append(np.linalg.eigvalsh(G).tolist())
        if not np.any(c):
            minima.append(math.inf)
            minimisers.append(np.zeros(len(c)))
            continue
        x = scipy.linalg.solve(G, c.astype(complex), assume_a="her")
        q = float(np.real(c @ x))
        minima.append(1.0 / q)
        # coefficients a with sum c_n a_n = 1 minimising a^H G a
        minimisers.append(np.conj(x) / q)
    diag = {"deltas": deltas.tolist(), "delta_scale": scale,
            "constrained_minima": minima, "gram_spectra": spectra}
    if not np.any(c):
        return DiscreteRigidity(True, k, m, "TrigGram", diagnostics=diag)
    verdict, ratio = _increment_verdict(minima, tau, flat_tol)
    diag["ratio"] = ratio
    if verdict == "divergent":
        return DiscreteRigidity(True, k, m, "TrigGram", diagnostics=diag)
    if verdict != "convergent":
        return DiscreteRigidity(None, k, m, "TrigGram", diagnostics=diag)
    a = _aitken(*[np.real(v) for v in minimisers[-3:]]) + 1j * _aitken(
        *[np.imag(v) for v in minimisers[-3:]])
    witness = TrigPolynomial({tuple(p): v for p, v in zip(window.tolist(), a / np.max(np.abs(a)))},
                             d=d)
    witness = TrigPolynomial(witness.real_if_close(1e-8), d=d)
    return DiscreteRigidity(False, k, m, "TrigGram", witness, diag)


def k_rigid_discrete_test(s, zeros=None, m=0, k=0, *, method="auto", validate=True,
                          tol=1e-8, delta_ladder=DEFAULT_DELTAS, tau=0.05, flat_tol=0.01):
    """Is the process k-rigid on {-m..m}^d?

    Rigid iff every degree-m trigonometric polynomial in ``L^2(1/s)`` has
    ``sum_n n^k a_n = 0``. In d = 1 (``method="roots"``) the finite-norm
    polynomials are exactly the multiples of the pole factor, so the test is
    a finite linear-algebra check. Otherwise (``method="gram"``) the smallest
    regularised norm ``int |psi|^2 / (s + delta)`` under the constraint
    ``sum n^k a_n = 1`` is followed along the delta ladder, as in the
    polynomial Gram test; this path may return an undetermined verdict.
    """
    k = MultiIndex.of(k, s.d)
    if method == "auto":
        method = "roots" if s.d == 1 else "gram"
    if method == "roots":
        if s.d != 1:
            raise ValueError("the root factorisation path needs d = 1")
        poles = _pole_list(s, zeros)
        if validate:
            _validate_orders(s, poles)
        return _k_rigid_roots(s, poles, m, k, tol)
    if method == "gram":
        return _k_rigid_gram(s, m, k, delta_ladder, tau, flat_tol)
    raise ValueError(f"unknown method {method!r}")
