"""Structure factors of stationary determinantal point processes and their rigidity order.

For a unit-intensity stationary DPP with reduced kernel modulus ``kappa``
the structure factor is ``s = 1 - F(kappa^2)``. Near ``u = 0`` the
difference is evaluated as

    s(u) = (1 - int kappa^2) + int kappa^2(x) (1 - cos(u.x)) dx,

which avoids cancellation; for projection kernels ``int kappa^2 = 1`` and
the first term is dropped.
"""
from dataclasses import dataclass, field, replace
import math
from typing import Callable, Optional
import warnings

import numpy as np
from scipy import integrate, special

from .errors import NotHyperuniformWarning, QuadratureFailure, TransformMismatch
from .expressions import Expression
from .pole_analysis import (K_RIGID, MultiIndex, _jsonable, finite_pole_order,
                            multi_indices, rigidity_classifier)
from .quadrature import gauss_legendre, sphere_area, sphere_directions
from .spectral_core import DensityFlags, Domain, SpectralDensity, ZeroAnnotation

HYPERUNIFORM_TOL = 1e-10
TAIL_LEVEL = 1e-14
CANCELLATION_LEVEL = 1e-6
MAX_TAIL_RADIUS = 200.0


@dataclass(frozen=True)
class DppKernel:
    """Reduced kernel modulus ``kappa(x) = |K(0, x)|`` with ``kappa(0) = 1``.

    ``kappa`` maps an ``(n, d)`` array to ``n`` values. ``radial`` (isotropic
    kernels) maps radii to values and enables the one-dimensional Hankel
    reduction. ``kappa_sq_ft`` is the closed form of ``F(kappa^2)`` when
    known, ``kappa_ft`` that of ``F(kappa)``. ``factors`` holds the 1-D
    kernels of a tensor-product kernel. ``sinc_tail`` marks kernels with
    ``kappa(x)^2 = (1 - cos(2 pi x)) / (2 pi^2 x^2)``, whose square
    integral needs an oscillatory tail correction. ``one_minus_ft`` is a
    cancellation-free closed form of ``1 - F(kappa^2)`` near the origin.
    """
    d: int
    kappa: Callable = field(repr=False)
    name: str = "custom"
    radial: Optional[Callable] = field(default=None, repr=False)
    kappa_sq_ft: Optional[Callable] = field(default=None, repr=False)
    kappa_ft: Optional[Callable] = field(default=None, repr=False)
    intensity_scaling: float = 1.0
    factors: Optional[tuple] = field(default=None, repr=False)
    sinc_tail: bool = False
    one_minus_ft: Optional[Callable] = field(default=None, repr=False)

    @property
    def isotropic(self):
        return self.radial is not None or self.d == 1

    def check_invariants(self, n_samples=512, seed=0):
        rng = np.random.Generator(np.random.Philox(seed))
        pts = rng.uniform(-6.0, 6.0, size=(n_samples, self.d))
        vals = np.asarray(self.kappa(pts), dtype=float)
        k0 = float(np.asarray(self.kappa(np.zeros((1, self.d))))[0])
        if not math.isclose(k0, 1.0, rel_tol=1e-12):
            raise ValueError(f"kappa(0) must be 1, got {k0}")
        if np.any(vals < -1e-15) or np.any(vals > 1.0 + 1e-12):
            raise ValueError("kappa must take values in [0, 1]")
        return True


def _ginibre_profile(r):
    return np.exp(-0.5 * r * r)


def unit_intensity_scaling(profile, d):
    """Intensity ``1 / int g^2`` of the projection kernel with modulus profile ``g``.

    Rescaling space by ``lambda^{1/d}`` gives ``kappa(y) = g(y lambda^{-1/d})``
    with unit intensity and ``int kappa^2 = 1``.
    """
    val, _ = integrate.quad(lambda r: profile(r) ** 2 * r ** (d - 1), 0.0, np.inf,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return 1.0 / (sphere_area(d) * val)


def _radial_kernel(profile, d, name, kappa_sq_ft=None, kappa_ft=None, one_minus_ft=None,
                   scaling=None):
    lam = unit_intensity_scaling(profile, d) if scaling is None else scaling
    stretch = lam ** (-1.0 / d)

    def radial(r):
        return profile(np.asarray(r, dtype=float) * stretch)

    def kappa(x):
        return radial(np.sqrt(np.sum(np.asarray(x, dtype=float) ** 2, axis=1)))

    return DppKernel(d, kappa, name, radial=radial, kappa_sq_ft=kappa_sq_ft,
                     kappa_ft=kappa_ft, intensity_scaling=lam, one_minus_ft=one_minus_ft)


def _norm(u):
    return np.sqrt(np.sum(np.asarray(u, dtype=float) ** 2, axis=1))


def ginibre_kernel():
    """Infinite Ginibre ensemble at unit intensity: kappa(x) = exp(-pi |x|^2 / 2)."""
    return _radial_kernel(
        _ginibre_profile, 2, "ginibre",
        kappa_sq_ft=lambda u: np.exp(-_norm(u) ** 2 / (4.0 * math.pi)),
        kappa_ft=lambda u: 2.0 * np.exp(-_norm(u) ** 2 / (2.0 * math.pi)),
        one_minus_ft=lambda u: -np.expm1(-_norm(u) ** 2 / (4.0 * math.pi)))


def gaussian_kernel(d=3):
    """kappa(x) = exp(-pi |x|^2 / 2) in dimension d (unit intensity, projection-like mass)."""
    return _radial_kernel(
        _ginibre_profile, d, f"gaussian{d}d",
        kappa_sq_ft=lambda u: np.exp(-_norm(u) ** 2 / (4.0 * math.pi)),
        kappa_ft=lambda u: 2.0 ** (d / 2) * np.exp(-_norm(u) ** 2 / (2.0 * math.pi)),
        one_minus_ft=lambda u: -np.expm1(-_norm(u) ** 2 / (4.0 * math.pi)))


def _triangle(u):
    return np.maximum(1.0 - np.abs(u) / (2.0 * math.pi), 0.0)


def sine_kernel():
    """Sine process: kappa(x) = |sin(pi x) / (pi x)|, F(kappa) = 1 on [-pi, pi]."""
    return DppKernel(
        1, lambda x: np.abs(np.sinc(np.asarray(x, dtype=float)[:, 0])), "sine",
        radial=lambda r: np.abs(np.sinc(r)),
        kappa_sq_ft=lambda u: _triangle(np.asarray(u, dtype=float)[:, 0]),
        kappa_ft=lambda u: (np.abs(np.asarray(u, dtype=float)[:, 0]) <= math.pi).astype(float),
        one_minus_ft=lambda u: np.minimum(np.abs(np.asarray(u, dtype=float)[:, 0])
                                          / (2.0 * math.pi), 1.0),
        sinc_tail=True)


def tensor_sinc_kernel(d=2):
    """Product of sine kernels along each axis."""
    one = sine_kernel()

    def kappa(x):
        return np.prod(np.abs(np.sinc(np.asarray(x, dtype=float))), axis=1)

    def ft(u):
        return np.prod(_triangle(np.asarray(u, dtype=float)), axis=1)

    def kft(u):
        return np.prod((np.abs(np.asarray(u, dtype=float)) <= math.pi).astype(float), axis=1)

    def one_minus(u):
        # 1 - prod(1 - a_i) = a_1 + (1 - a_1) (1 - prod_{i>1}(1 - a_i)), no cancellation
        a = np.minimum(np.abs(np.asarray(u, dtype=float)) / (2.0 * math.pi), 1.0)
        out = a[:, -1]
        for i in range(a.shape[1] - 2, -1, -1):
            out = a[:, i] + (1.0 - a[:, i]) * out
        return out

    return DppKernel(d, kappa, "tensor_sinc", kappa_sq_ft=ft, kappa_ft=kft,
                     factors=(one,) * d, one_minus_ft=one_minus)


def custom_kernel(expression, d, *, kappa_sq_ft=None, isotropic=False, intensity_scaling=1.0):
    """Kernel from a text expression in x1..xd (or r); optional closed form in u1..ud."""
    expr = Expression(expression, d, prefix="x")
    ft = Expression(kappa_sq_ft, d, prefix="u") if kappa_sq_ft else None
    def along_axis(r):
        r = np.asarray(r, dtype=float)
        pts = np.zeros((r.size, d))
        pts[:, 0] = r.ravel()
        return expr(pts).reshape(r.shape)

    radial = along_axis if isotropic and d > 1 else None
    return DppKernel(d, expr, "custom", radial=radial, kappa_sq_ft=ft,
                     intensity_scaling=intensity_scaling)


BUILTIN_KERNELS = {
    "ginibre": ginibre_kernel,
    "sine": sine_kernel,
    "tensor_sinc": tensor_sinc_kernel,
    "gaussian": gaussian_kernel,
}


# ----------------------------------------------------------------------------
# Numeric transforms


def tail_radius(kern, level=TAIL_LEVEL, r_max=MAX_TAIL_RADIUS):
    """Radius beyond which kappa^2 < level on sampled directions, or None."""
    radii = np.geomspace(0.5, 4 * r_max, 400)
    dirs = sphere_directions(kern.d, 64)
    pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, kern.d)
    vals = np.asarray(kern.kappa(pts), dtype=float).reshape(len(radii), len(dirs)) ** 2
    above = np.nonzero(vals.max(axis=1) >= level)[0]
    if not len(above):
        return float(radii[0])
    if above[-1] + 1 >= len(radii) or radii[above[-1] + 1] > r_max:
        return None
    return float(radii[above[-1] + 1])


def _one_minus_phase(z, d):
    """1 - <phase>(z): 1 - cos z (d = 1), 1 - J0(z) (d = 2), 1 - sin z / z (d = 3)."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 0.05
    zs = np.where(small, z, 0.0) ** 2
    if d == 1:
        return 2.0 * np.sin(0.5 * z) ** 2
    if d == 2:
        series = zs / 4 - zs ** 2 / 64 + zs ** 3 / 2304 - zs ** 4 / 147456
        with np.errstate(invalid="ignore"):
            return np.where(small, series, 1.0 - special.j0(z))
    if d == 3:
        series = zs / 6 - zs ** 2 / 120 + zs ** 3 / 5040 - zs ** 4 / 362880
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(small, series, 1.0 - np.sin(z) / np.where(small, 1.0, z))
    raise ValueError("radial reduction supports d <= 3")


class NumericTransform:
    """Composite Gauss-Legendre evaluation of ``F(kappa^2)`` and of ``s`` on a truncated domain."""

    def __init__(self, kern, radius, panels_per_unit=8, order=16):
        self.kern = kern
        self.radius = radius
        self.order = order
        self.panels_per_unit = panels_per_unit
        self.mass = self._mass()

    def _nodes(self, u_max):
        # enough panels to resolve both kappa^2 and the oscillation at u_max
        width = min(1.0 / self.panels_per_unit, math.pi / max(u_max, 1e-12))
        n_panels = int(min(math.ceil(self.radius / width), 40000))
        x, w = gauss_legendre(self.order)
        edges = np.linspace(0.0, self.radius, n_panels + 1)
        a, b = edges[:-1], edges[1:]
        r = (0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * x[None, :]).ravel()
        wr = (0.5 * (b - a)[:, None] * w[None, :]).ravel()
        return r, wr

    def _mass(self):
        kern, d = self.kern, self.kern.d
        if kern.isotropic:
            r, w = self._nodes(1.0)
            prof = kern.radial if kern.radial is not None else (
                lambda t: kern.kappa(np.asarray(t)[:, None]))
            return float(np.sum(w * prof(r) ** 2 * r ** (d - 1)) * sphere_area(d))
        pts, w = self._tensor_nodes(1.0)
        return float(np.sum(w * np.asarray(kern.kappa(pts)) ** 2))

    def _tensor_nodes(self, u_max):
        r, wr = self._nodes(u_max)
        x = np.concatenate([-r[::-1], r])
        w = np.concatenate([wr[::-1], wr])
        mesh = np.meshgrid(*([x] * self.kern.d), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        wt = w
        for _ in range(self.kern.d - 1):
            wt = np.multiply.outer(wt, w)
        return pts, wt.ravel()

    def one_minus(self, u, offset):
        """offset + int kappa^2(x) (1 - cos(u.x)) dx at points u of shape (n, d)."""
        kern, d = self.kern, self.kern.d
        u = np.asarray(u, dtype=float)
        out = np.empty(len(u))
        if kern.isotropic:
            rho = _norm(u)
            r, w = self._nodes(float(rho.max(initial=0.0)))
            prof = kern.radial if kern.radial is not None else (
                lambda t: kern.kappa(np.asarray(t)[:, None]))
            base = w * prof(r) ** 2 * r ** (d - 1) * sphere_area(d)
            for start in range(0, len(u), 256):
                chunk = rho[start:start + 256]
                out[start:start + 256] = _one_minus_phase(np.outer(chunk, r), d) @ base
            return offset + out
        pts, w = self._tensor_nodes(float(np.max(np.abs(u), initial=0.0)) * math.sqrt(d))
        base = w * np.asarray(kern.kappa(pts)) ** 2
        for start in range(0, len(u), 64):
            chunk = u[start:start + 64]
            out[start:start + 64] = (2.0 * np.sin(0.5 * chunk @ pts.T) ** 2) @ base
        return offset + out


def kappa_sq_mass(kern):
    """int kappa^2 over R^d, with an oscillatory tail correction for sinc-type kernels."""
    if kern.factors is not None:
        return float(np.prod([kappa_sq_mass(f) for f in kern.factors]))
    if kern.sinc_tail:
        R = 50.0
        head, _ = integrate.quad(lambda x: np.sinc(x) ** 2, 0.0, R, limit=4000,
                                 epsabs=1e-15, epsrel=1e-13)
        c = 1.0 / (2.0 * math.pi ** 2)
        osc, _ = integrate.quad(lambda x: c / x ** 2, R, np.inf, weight="cos",
                                wvar=2.0 * math.pi)
        return 2.0 * (head + c / R - osc)
    R = tail_radius(kern)
    if R is None:
        raise QuadratureFailure(f"kappa^2 of {kern.name} does not reach {TAIL_LEVEL} "
                                f"within radius {MAX_TAIL_RADIUS}")
    return NumericTransform(kern, R).mass


@dataclass
class StructureFactorReport:
    density: SpectralDensity
    s0: float
    hyperuniform: bool
    mass: float
    source: str                        # "closed-form" | "numeric"
    max_transform_gap: Optional[float] = None
    resolution_gap: Optional[float] = None
    pole_order_at_zero: Optional[int] = None

    def to_dict(self):
        return _jsonable({"name": self.density.name, "s0": self.s0,
                          "hyperuniform": self.hyperuniform, "kappa_sq_mass": self.mass,
                          "source": self.source, "max_transform_gap": self.max_transform_gap,
                          "resolution_gap": self.resolution_gap,
                          "pole_order_at_zero": self.pole_order_at_zero})


def _check_grid(d, u_max, n=64):
    radii = np.linspace(0.0, u_max, n)
    if d == 1:
        return radii[:, None]
    dirs = sphere_directions(d, 8)
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, d)


def structure_factor_from_kernel(kern, grid=None, *, cross_check=True):
    """Return ``s = 1 - F(kappa^2)`` as a SpectralDensity plus a report.

    The closed form is used when available and compared with the numeric
    transform on ``grid`` (default: radii up to 8 pi); a gap above 1e-6 raises
    :class:`TransformMismatch`. Without a closed form the numeric transform
    is used, and two resolutions must agree within 1e-8. Kernels whose
    ``kappa^2`` cannot be truncated at level 1e-14 skip the numeric check.
    ``s(0) <= 1e-10`` annotates a zero at the origin with its finite order.
    """
    d = kern.d
    R = tail_radius(kern) if kern.factors is None and not kern.sinc_tail else None
    numeric = NumericTransform(kern, R) if R is not None else None
    mass = kappa_sq_mass(kern) if numeric is None else numeric.mass
    offset = 1.0 - mass
    if abs(offset) <= HYPERUNIFORM_TOL:
        offset = 0.0
    grid = _check_grid(d, 8.0 * math.pi) if grid is None else np.asarray(grid, dtype=float)
    gap = res_gap = None
    if kern.kappa_sq_ft is not None:
        closed = kern.kappa_sq_ft
        stable = kern.one_minus_ft
        source = "closed-form"

        def func(u):
            if stable is not None:
                return np.asarray(stable(u), dtype=float)
            out = np.clip(1.0 - np.asarray(closed(u), dtype=float), 0.0, None)
            if numeric is not None:
                # 1 - F(kappa^2) cancels near the origin; the numeric form does not
                near = out < CANCELLATION_LEVEL
                if np.any(near):
                    out[near] = np.clip(numeric.one_minus(np.asarray(u, dtype=float)[near],
                                                          offset), 0.0, None)
            return out

        if numeric is not None and cross_check:
            gap = float(np.max(np.abs(numeric.one_minus(grid, offset) - func(grid))))
            if gap > 1e-6:
                raise TransformMismatch(f"closed-form and numeric transforms of {kern.name} "
                                        f"differ by {gap:.3e}")
    elif numeric is not None:
        source = "numeric"
        fine = NumericTransform(kern, R, panels_per_unit=2 * numeric.panels_per_unit)
        res_gap = float(np.max(np.abs(numeric.one_minus(grid, offset)
                                      - fine.one_minus(grid, offset))))
        if res_gap > 1e-8:
            raise QuadratureFailure(f"numeric transform of {kern.name} is not resolved "
                                    f"(two resolutions differ by {res_gap:.3e})")

        def func(u):
            return np.clip(numeric.one_minus(u, offset), 0.0, None)
    else:
        raise QuadratureFailure(f"{kern.name} needs a closed-form transform: kappa^2 "
                                "decays too slowly for numeric quadrature")
    flags = DensityFlags(isotropic=kern.isotropic and d > 1, simple=True)
    density = SpectralDensity(Domain.euclidean(d), func, flags, zeros=None,
                              name=f"structure-factor:{kern.name}")
    s0 = float(density.evaluate(np.zeros((1, d)))[0])
    hyper = s0 <= HYPERUNIFORM_TOL
    order = None
    if hyper:
        order = finite_pole_order(density, np.zeros(d))
        if order is not None:
            density = replace(density, zeros=(ZeroAnnotation((0.0,) * d, order),))
    else:
        warnings.warn(f"{kern.name}: s(0) = {s0:.3e} > 0, the process is not hyperuniform",
                      NotHyperuniformWarning, stacklevel=2)
        density = replace(density, zeros=())
    return StructureFactorReport(density, s0, hyper, mass, source, gap, res_gap, order)


def parseval_chain(kern):
    """The chain F(kappa^2)(0) = int kappa^2 = (2pi)^-d int F(kappa)^2 = (2pi)^-d int F(kappa) = kappa(0).

    Only the quantities computable for the kernel are returned.
    """
    out = {"kappa_at_zero": float(np.asarray(kern.kappa(np.zeros((1, kern.d))))[0]),
           "kappa_sq_mass": kappa_sq_mass(kern)}
    if kern.kappa_sq_ft is not None:
        out["kappa_sq_ft_at_zero"] = float(np.asarray(kern.kappa_sq_ft(np.zeros((1, kern.d))))[0])
    if kern.kappa_ft is not None and kern.d == 1:
        ft = lambda t: float(kern.kappa_ft(np.array([[t]]))[0])
        pts = [-math.pi, math.pi]
        sq = integrate.quad(lambda t: ft(t) ** 2, -50.0, 50.0, points=pts, limit=400)[0]
        lin = integrate.quad(ft, -50.0, 50.0, points=pts, limit=400)[0]
        out["ft_sq_integral"] = sq / (2.0 * math.pi)
        out["ft_integral"] = lin / (2.0 * math.pi)
    elif kern.kappa_ft is not None and kern.radial is not None:
        d = kern.d
        prof = lambda r: float(kern.kappa_ft(np.array([[r] + [0.0] * (d - 1)]))[0])
        scale = sphere_area(d) / (2.0 * math.pi) ** d
        out["ft_sq_integral"] = scale * integrate.quad(
            lambda r: prof(r) ** 2 * r ** (d - 1), 0.0, np.inf, limit=200)[0]
        out["ft_integral"] = scale * integrate.quad(
            lambda r: prof(r) * r ** (d - 1), 0.0, np.inf, limit=200)[0]
    return out


@dataclass
class DppRigidityReport:
    kernel: str
    structure: StructureFactorReport
    verdicts: list                     # [(k, verdict, provenance)]
    max_rigid_order: Optional[int]

    def to_dict(self):
        return _jsonable({"kernel": self.kernel, "structure_factor": self.structure.to_dict(),
                          "verdicts": [{"k": k, "verdict": v, "provenance": p}
                                       for k, v, p in self.verdicts],
                          "max_rigid_order": self.max_rigid_order})


def dpp_rigidity_order(kern, k_cap=2, *, structure=None):
    """Rigidity verdicts for |k| = 0..k_cap, with the structure factor marked simple.

    For non-isotropic kernels order ``k`` counts as rigid only if every
    multi-index of that order is. ``max_rigid_order`` is the largest ``k``
    such that all orders up to ``k`` are rigid (None if not even 0-rigid).
    """
    rep = structure_factor_from_kernel(kern) if structure is None else structure
    s = rep.density
    verdicts = []
    for k in range(k_cap + 1):
        targets = [MultiIndex((k,) + (0,) * (s.d - 1))] if s.flags.isotropic or s.d == 1 else \
            [MultiIndex(m) for m in multi_indices(s.d, k) if sum(m) == k]
        results = [rigidity_classifier(s, t, simple=True) for t in targets]
        rigid = all(r.verdict == K_RIGID for r in results)
        worst = next((r for r in results if r.verdict != K_RIGID), results[0])
        verdicts.append((k, K_RIGID if rigid else worst.verdict, worst.provenance))
    max_order = None
    for k, v, _ in verdicts:
        if v != K_RIGID:
            break
        max_order = k
    return DppRigidityReport(kern.name, rep, verdicts, max_order)
