import math
import warnings

import numpy as np
import pytest

from rigidity.dpp_rigidity import (DppKernel, custom_kernel, dpp_rigidity_order,
                                   gaussian_kernel, ginibre_kernel, kappa_sq_mass,
                                   parseval_chain, sine_kernel, structure_factor_from_kernel,
                                   tail_radius, tensor_sinc_kernel, unit_intensity_scaling)
from rigidity.errors import NotHyperuniformWarning, QuadratureFailure
from rigidity.pole_analysis import K_RIGID, NOT_K_RIGID

# s(r) = 1 - F(kappa^2)(r) for the unit-intensity Ginibre kernel, from a 30-digit
# Hankel transform of exp(-pi x^2)
GINIBRE_S = {0.5: 0.0196977807669293457, 1.0: 0.0764935282768914808,
             3.0: 0.511393220019668436}


def _pts(r, d=2):
    return np.array([[r] + [0.0] * (d - 1)])


def test_ginibre_structure_factor_frozen_values():
    rep = structure_factor_from_kernel(ginibre_kernel())
    assert rep.source == "closed-form" and rep.hyperuniform
    assert rep.max_transform_gap < 1e-6
    for r, want in GINIBRE_S.items():
        assert rep.density.evaluate(_pts(r))[0] == pytest.approx(want, rel=1e-12)


def test_ginibre_numeric_transform_without_closed_form():
    ref = ginibre_kernel()
    bare = DppKernel(2, ref.kappa, "ginibre-numeric", radial=ref.radial)
    rep = structure_factor_from_kernel(bare)
    assert rep.source == "numeric" and rep.resolution_gap <= 1e-8
    for r, want in GINIBRE_S.items():
        assert rep.density.evaluate(_pts(r))[0] == pytest.approx(want, abs=1e-8)
    assert rep.pole_order_at_zero == 1


def test_unit_intensity():
    assert unit_intensity_scaling(lambda r: np.exp(-0.5 * r * r), 2) == pytest.approx(1 / math.pi)
    for kern in (ginibre_kernel(), gaussian_kernel(3), sine_kernel()):
        assert kappa_sq_mass(kern) == pytest.approx(1.0, abs=1e-9)
        kern.check_invariants()


def test_kernel_invariants_reject_bad_kernels():
    with pytest.raises(ValueError):
        DppKernel(1, lambda x: 2.0 * np.exp(-x[:, 0] ** 2)).check_invariants()


@pytest.mark.parametrize("factory, expected", [
    (ginibre_kernel, [K_RIGID, NOT_K_RIGID]),
    (sine_kernel, [K_RIGID, NOT_K_RIGID]),
    (tensor_sinc_kernel, [NOT_K_RIGID, NOT_K_RIGID]),
    (gaussian_kernel, [NOT_K_RIGID, NOT_K_RIGID]),
])
def test_rigidity_orders(factory, expected):
    rep = dpp_rigidity_order(factory(), k_cap=1)
    assert [v for _, v, _ in rep.verdicts] == expected
    assert rep.max_rigid_order == (0 if expected[0] == K_RIGID else None)


def test_sine_structure_factor():
    rep = structure_factor_from_kernel(sine_kernel())
    s = rep.density
    u = np.array([[0.1], [1.0], [2 * math.pi], [10.0]])
    np.testing.assert_allclose(s.evaluate(u), [0.1 / (2 * math.pi), 1 / (2 * math.pi), 1, 1])
    assert rep.pole_order_at_zero == 1
    assert rep.mass == pytest.approx(1.0, abs=1e-9)


def test_tensor_sinc_is_hyperuniform_but_not_rigid():
    rep = structure_factor_from_kernel(tensor_sinc_kernel())
    assert rep.hyperuniform and rep.pole_order_at_zero == 0
    # first-order vanishing along each axis
    s = rep.density
    assert s.evaluate(np.array([[1e-3, 0.0]]))[0] == pytest.approx(1e-3 / (2 * math.pi))


def test_parseval_chain_values():
    for kern in (sine_kernel(), ginibre_kernel()):
        chain = parseval_chain(kern)
        for key in ("kappa_sq_mass", "kappa_sq_ft_at_zero", "ft_sq_integral"):
            assert chain[key] == pytest.approx(1.0, abs=1e-7), (kern.name, key)
        assert chain["kappa_at_zero"] == 1.0
    # for a projection kernel F(kappa) is an indicator, so its square integrates the same
    assert parseval_chain(sine_kernel())["ft_integral"] == pytest.approx(1.0, abs=1e-9)


def test_non_hyperuniform_kernel_warns():
    kern = custom_kernel("exp(-pi*x1**2)", 1)    # int kappa^2 = 1/sqrt(2) < 1
    with pytest.warns(NotHyperuniformWarning):
        rep = structure_factor_from_kernel(kern)
    assert not rep.hyperuniform
    assert rep.s0 == pytest.approx(1 - 1 / math.sqrt(2), rel=1e-9)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotHyperuniformWarning)
        assert dpp_rigidity_order(kern, k_cap=0).max_rigid_order is None


def test_custom_kernel_with_closed_form():
    kern = custom_kernel("exp(-pi*r**2/2)", 2, kappa_sq_ft="exp(-(u1**2+u2**2)/(4*pi))",
                         isotropic=True)
    rep = structure_factor_from_kernel(kern)
    assert rep.source == "closed-form" and rep.max_transform_gap < 1e-6
    assert dpp_rigidity_order(kern, k_cap=1, structure=rep).max_rigid_order == 0


def test_slow_tail_needs_closed_form():
    assert tail_radius(DppKernel(1, lambda x: 1.0 / (1.0 + x[:, 0] ** 2))) is None
    with pytest.raises(QuadratureFailure):
        structure_factor_from_kernel(DppKernel(1, lambda x: 1.0 / (1.0 + x[:, 0] ** 2)))
