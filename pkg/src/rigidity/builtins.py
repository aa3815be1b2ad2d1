"""Named spectral densities used by the CLI, the scenarios and the tests.

Euclidean densities are normalised to unit intensity (``s -> 1`` at infinity
where that makes sense); circle densities to ``C(0) = 1``. Densities with a
zero at a point are written in cancellation-free form so that they stay
accurate at the tiny radii probed by the pole ladders.
"""
import math

import numpy as np

from .errors import ConfigError
from .spectral_core import DensityFlags, Domain, SpectralDensity, ZeroAnnotation

TWO_PI = 2.0 * math.pi


def _sq_norm(p):
    return np.sum(p * p, axis=1)


def poisson(d=2):
    """Constant density: no correlations, never rigid."""
    return SpectralDensity(Domain.euclidean(d), lambda p: np.ones(len(p)),
                           DensityFlags(isotropic=True, separable=True, simple=True),
                           zeros=(), name=f"poisson_d{d}",
                           factors=(lambda t: np.ones_like(t),) * d)


def ginibre():
    """Structure factor ``1 - exp(-|u|^2 / 4 pi)`` of the unit-intensity Ginibre process."""
    return SpectralDensity(Domain.euclidean(2), lambda p: -np.expm1(-_sq_norm(p) / (4.0 * math.pi)),
                           DensityFlags(isotropic=True, simple=True),
                           zeros=(ZeroAnnotation((0.0, 0.0), 1),), name="ginibre")


def gaf_scaling(c=1.0 / (8.0 * math.pi)):
    """Small-frequency behaviour ``c |u|^4`` of the zeros of the planar Gaussian analytic function."""
    return SpectralDensity(Domain.euclidean(2), lambda p: c * _sq_norm(p) ** 2,
                           DensityFlags(isotropic=True), zeros=(ZeroAnnotation((0.0, 0.0), 2),),
                           name="gaf_scaling")


def power(alpha, d):
    """``|u|^alpha`` on R^d."""
    alpha = float(alpha)
    zeros = () if alpha == 0 else None
    return SpectralDensity(Domain.euclidean(d), lambda p: _sq_norm(p) ** (alpha / 2.0),
                           DensityFlags(isotropic=True, simple=alpha == 0), zeros=zeros,
                           name=f"power_{alpha:g}_d{d}")


def anisotropic_line():
    """``(u1 - u2)^2``: vanishes on a whole line, so 0 is not an isolated zero."""
    return SpectralDensity(Domain.euclidean(2), lambda p: (p[:, 0] - p[:, 1]) ** 2,
                           name="anisotropic_line")


def quartic_axis():
    """``u1^4``, separable with factors ``t^4`` and 1."""
    return SpectralDensity(Domain.euclidean(2), lambda p: p[:, 0] ** 4,
                           DensityFlags(separable=True), name="quartic_axis",
                           factors=(lambda t: t ** 4, lambda t: np.ones_like(t)))


def _counterexample(p):
    near = _sq_norm(p) <= 0.25
    u1, u2 = p[:, 0], p[:, 1]
    return np.where(near, 1.0, u2 ** 2 / (1.0 + u2 ** 10) / (1.0 + u1 ** 10))


def counterexample():
    """Density equal to 1 near 0 but vanishing along the axis u2 = 0 away from it.

    Near ``(1, 0)`` it behaves like ``u2^2``, which is not a finite-order
    pole, so the converse of the pole criterion does not apply.
    """
    return SpectralDensity(Domain.euclidean(2), _counterexample,
                           zeros=(ZeroAnnotation((1.0, 0.0), 1),), name="counterexample")


def discrete_example():
    """``(u-1)^2 (u+1)^2`` on the circle: simple zeros at +-1."""
    return SpectralDensity(Domain.torus(1), lambda p: (p[:, 0] - 1.0) ** 2 * (p[:, 0] + 1.0) ** 2,
                           DensityFlags(simple=True),
                           zeros=(ZeroAnnotation((1.0,), 1), ZeroAnnotation((-1.0,), 1)),
                           name="discrete_example")


def white_noise(d=1):
    return SpectralDensity(Domain.torus(d), lambda p: np.full(len(p), TWO_PI ** -d),
                           DensityFlags(isotropic=d == 1, separable=True, simple=True),
                           zeros=(), name=f"white_noise_d{d}",
                           factors=(lambda t: np.full_like(t, 1.0 / TWO_PI),) * d)


def ma1_unit_root():
    """``|1 - e^{iu}|^2 / 4 pi = sin^2(u/2) / pi``: C(0) = 1, C(+-1) = -1/2."""
    return SpectralDensity(Domain.torus(1), lambda p: np.sin(0.5 * p[:, 0]) ** 2 / math.pi,
                           DensityFlags(simple=True), zeros=(ZeroAnnotation((0.0,), 1),),
                           name="ma1_unit_root")


def ar1(phi=0.5):
    """AR(1) with C(m) = phi^|m|."""
    phi = float(phi)
    if not -1.0 < phi < 1.0:
        raise ConfigError("ar1 needs |phi| < 1")
    scale = (1.0 - phi * phi) / TWO_PI

    def func(p):
        u = p[:, 0]
        return scale / (1.0 - 2.0 * phi * np.cos(u) + phi * phi)

    return SpectralDensity(Domain.torus(1), func, DensityFlags(simple=True), zeros=(),
                           name=f"ar1_{phi:g}")


def sin_power_product(roots, orders):
    """``prod_j |e^{iu} - e^{iu_j}|^{2 k_j}`` written as ``prod (4 sin^2((u-u_j)/2))^{k_j}``.

    Unnormalised; the zero annotations carry the orders, mirrored roots are
    the caller's responsibility.
    """
    roots = [float(r) for r in roots]
    orders = [int(k) for k in orders]

    def func(p):
        u = p[:, 0]
        out = np.ones_like(u)
        for r, k in zip(roots, orders):
            out = out * (4.0 * np.sin(0.5 * (u - r)) ** 2) ** k
        return out

    zeros = tuple(ZeroAnnotation((r,), k) for r, k in zip(roots, orders) if k > 0)
    label = "_".join(f"{r:g}^{k}" for r, k in zip(roots, orders)) or "const"
    return SpectralDensity(Domain.torus(1), func, DensityFlags(simple=True), zeros=zeros,
                           name=f"sinprod_{label}")


BUILTIN_DENSITIES = {
    "poisson": poisson,
    "ginibre": ginibre,
    "gaf_scaling": gaf_scaling,
    "power": power,
    "anisotropic_line": anisotropic_line,
    "quartic_axis": quartic_axis,
    "counterexample": counterexample,
    "discrete_example": discrete_example,
    "white_noise": white_noise,
    "ma1_unit_root": ma1_unit_root,
    "ar1": ar1,
    "sin_power_product": sin_power_product,
}


def builtin_density(name, **params):
    try:
        factory = BUILTIN_DENSITIES[name]
    except KeyError:
        raise ConfigError(f"unknown builtin density {name!r}; "
                          f"choose from {sorted(BUILTIN_DENSITIES)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for builtin {name!r}: {exc}") from None
