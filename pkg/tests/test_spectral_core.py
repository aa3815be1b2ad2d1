import math

import numpy as np
import pytest
import sympy as sp
from scipy.signal import correlate2d
from hypothesis import given, settings, strategies as st

from rigidity.errors import (InvalidCovariance, InvalidDensity, NegativeDensity,
                             NonSummableCovariance, QuadratureFailure)
from rigidity.spectral_core import (Atom, CovarianceSequence, DensityFlags, Domain,
                                    SpectralDensity, ZeroAnnotation, covariance_from_density,
                                    density_from_covariance, quadratic_form,
                                    spectral_quadratic_form, validate_temperedness)

from oracles import ar1_series, random_ma_covariance

TWO_PI = 2.0 * math.pi
GRID = np.linspace(-math.pi, math.pi, 41)[:-1, None]

# int_{-pi}^{pi} cos(m u) (u-1)^2 (u+1)^2 du, exact values from sympy (m = 0..4)
DISCRETE_EXAMPLE_COVARIANCE = [87.349356980892407548, -72.121024841370140050,
                               46.304590092650674159, -22.906923488281627951,
                               13.343293390806927236]


def discrete_example_density():
    return SpectralDensity(Domain.torus(1), lambda p: (p[:, 0] - 1) ** 2 * (p[:, 0] + 1) ** 2,
                           zeros=(ZeroAnnotation((1.0,), 1), ZeroAnnotation((-1.0,), 1)))


def test_white_noise_density_is_constant():
    s = density_from_covariance(CovarianceSequence.from_mapping({0: 1.0}))
    np.testing.assert_allclose(s(GRID), 1.0 / TWO_PI, rtol=1e-14)


def test_two_term_series():
    s = density_from_covariance(CovarianceSequence.from_mapping({0: 2.0, 1: -1.0}))
    np.testing.assert_allclose(s(GRID), (2.0 - 2.0 * np.cos(GRID[:, 0])) / TWO_PI, atol=1e-15)


def test_ar1_truncated_series_matches_direct_sum():
    phi = 0.5
    cov = CovarianceSequence.from_function(
        lambda m: phi ** np.abs(m[:, 0]) / (1 - phi ** 2), 64, decay_bound=1e-18)
    s = density_from_covariance(cov)
    direct = ar1_series(phi, terms=200)
    expected = np.array([direct(u) for u in GRID[:, 0]]) / (1 - phi ** 2) / TWO_PI
    np.testing.assert_allclose(s(GRID), expected, rtol=1e-6)
    closed = 1.0 / np.abs(1 - phi * np.exp(1j * GRID[:, 0])) ** 2 / TWO_PI
    np.testing.assert_allclose(s(GRID), closed, rtol=1e-12)


def test_truncation_without_decay_bound_is_rejected():
    cov = CovarianceSequence.from_function(lambda m: 0.5 ** np.abs(m[:, 0]), 8)
    with pytest.raises(NonSummableCovariance):
        density_from_covariance(cov)


def test_invalid_covariance_gives_negative_density():
    with pytest.raises(NegativeDensity):
        density_from_covariance(CovarianceSequence.from_mapping({0: 1.0, 1: 0.9}))


def test_covariance_of_two_term_density():
    s = SpectralDensity(Domain.torus(1), lambda p: (2 - 2 * np.cos(p[:, 0])) / TWO_PI)
    cov = covariance_from_density(s, 3)
    np.testing.assert_allclose(cov.values, [0, 0, -1, 2, -1, 0, 0], atol=1e-13)
    np.testing.assert_allclose(cov.normalized().values, [0, 0, -0.5, 1, -0.5, 0, 0], atol=1e-13)


def test_constant_density_has_no_correlations():
    s = SpectralDensity(Domain.torus(2), lambda p: np.full(len(p), 3.0))
    cov = covariance_from_density(s, 2)
    expected = np.zeros((5, 5))
    expected[2, 2] = 3.0 * TWO_PI ** 2
    np.testing.assert_allclose(cov.values, expected, atol=1e-10)


def test_discrete_example_covariance_against_exact_values():
    cov = covariance_from_density(discrete_example_density(), 4)
    np.testing.assert_allclose(cov.values[4:], DISCRETE_EXAMPLE_COVARIANCE, rtol=1e-12)
    coarse = covariance_from_density(discrete_example_density(), 4, rtol=1e-10)
    np.testing.assert_allclose(coarse.values, cov.values, atol=1e-9)


def test_frozen_discrete_values_match_sympy():
    u = sp.symbols("u", real=True)
    for m, frozen in enumerate(DISCRETE_EXAMPLE_COVARIANCE):
        exact = sp.integrate(sp.cos(m * u) * (u - 1) ** 2 * (u + 1) ** 2, (u, -sp.pi, sp.pi))
        assert float(exact) == pytest.approx(frozen, rel=1e-15)


def test_non_integrable_density_fails_quadrature():
    s = SpectralDensity(Domain.torus(1), lambda p: 1.0 / np.abs(p[:, 0] - 0.7))
    with pytest.raises(QuadratureFailure):
        covariance_from_density(s, 2)


def _random_covariance(seed, support):
    rng = np.random.default_rng(seed)
    return CovarianceSequence.from_mapping(random_ma_covariance(rng, support))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 32))
def test_round_trip_reproduces_covariance(seed, support):
    cov = _random_covariance(seed, support)
    back = covariance_from_density(density_from_covariance(cov), support + 3)
    padded = np.zeros(2 * (support + 3) + 1)
    padded[3:-3] = cov.values
    np.testing.assert_allclose(back.values, padded, atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
def test_variance_identity(seed, support):
    cov = _random_covariance(seed, support)
    rng = np.random.default_rng(seed + 1)
    coeffs = {int(m): float(rng.normal()) for m in rng.choice(np.arange(-8, 9), 5, replace=False)}
    s = density_from_covariance(cov)
    lhs = quadratic_form(cov, coeffs)
    rhs = spectral_quadratic_form(s, coeffs)
    assert rhs == pytest.approx(lhs, rel=1e-6)


def test_variance_identity_with_atoms():
    atoms = (Atom((0.5,), 0.2), Atom((-0.5,), 0.2))
    s = SpectralDensity(Domain.torus(1), lambda p: np.full(len(p), 1.0 / TWO_PI), atoms=atoms)
    cov = covariance_from_density(s, 4)
    np.testing.assert_allclose(cov.values[4:], [1.4] + [0.4 * math.cos(0.5 * m)
                                                      for m in range(1, 5)], atol=1e-12)
    coeffs = {0: 1.0, 2: -0.5, 3: 0.25}
    assert spectral_quadratic_form(s, coeffs) == pytest.approx(quadratic_form(cov, coeffs),
                                                               rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 2), st.integers(0, 8))
def test_random_covariances_are_even_and_psd(seed, d, support):
    rng = np.random.default_rng(seed)
    if d == 1:
        cov = CovarianceSequence.from_mapping(random_ma_covariance(rng, support))
    else:
        h = rng.normal(size=(support + 1, support + 1))
        full = correlate2d(h, h, mode="full")
        cov = CovarianceSequence(full, d=2)
    assert cov.check_invariants()
    assert np.all(np.abs(cov.values) <= cov.c0 * (1 + 1e-12))


def test_covariance_invariant_violations():
    with pytest.raises(InvalidCovariance):
        CovarianceSequence(np.array([0.5, 1.0, 0.2])).check_invariants()
    with pytest.raises(InvalidCovariance):
        CovarianceSequence.from_mapping({0: 1.0, 1: 0.9, 2: 0.9}).check_invariants()
    with pytest.raises(InvalidCovariance):
        CovarianceSequence(np.ones(4))


def test_covariance_csv_round_trip():
    cov = CovarianceSequence.from_mapping({(0, 0): 1.0, (1, 0): -0.25, (0, 1): 0.125}, d=2)
    back = CovarianceSequence.from_csv(cov.to_csv())
    np.testing.assert_array_equal(back.values, cov.values)
    assert cov.to_csv().splitlines()[0] == "m1,m2,value"


def test_density_invariants():
    neg = SpectralDensity(Domain.euclidean(1), lambda p: np.cos(p[:, 0]))
    with pytest.raises(InvalidDensity):
        neg.check_invariants()
    odd = SpectralDensity(Domain.euclidean(1), lambda p: np.exp(p[:, 0]))
    with pytest.raises(InvalidDensity):
        odd.check_invariants()
    fake_iso = SpectralDensity(Domain.euclidean(2), lambda p: p[:, 0] ** 2,
                               DensityFlags(isotropic=True))
    with pytest.raises(InvalidDensity):
        fake_iso.check_invariants()
    fake_sep = SpectralDensity(Domain.euclidean(2), lambda p: 1 + (p[:, 0] - p[:, 1]) ** 2,
                               DensityFlags(separable=True))
    with pytest.raises(InvalidDensity):
        fake_sep.check_invariants()
    sep = SpectralDensity(Domain.euclidean(2), lambda p: (1 + p[:, 0] ** 2) * (2 + p[:, 1] ** 2),
                          DensityFlags(separable=True))
    assert sep.check_invariants()
    with pytest.raises(InvalidDensity):
        SpectralDensity(Domain.torus(1), lambda p: p[:, 0] ** 2, atoms=(Atom((0.3,), 1.0),))


def test_rescaled_density_moves_zeros():
    s = SpectralDensity(Domain.euclidean(1), lambda p: (p[:, 0] - 2) ** 2 * (p[:, 0] + 2) ** 2,
                        zeros=(ZeroAnnotation((2.0,), 1), ZeroAnnotation((-2.0,), 1)))
    r = s.rescaled(2.0)
    assert r(np.array([[1.0]])) == pytest.approx(0.0)
    assert [z.location for z in r.zeros] == [(1.0,), (-1.0,)]


@pytest.mark.parametrize("func, verdict", [
    (lambda p: np.ones(len(p)), "convergent"),
    (lambda p: np.sum(p * p, axis=1), "convergent"),
    (lambda p: np.exp(np.sqrt(np.sum(p * p, axis=1))), "divergent"),
])
def test_temperedness(func, verdict):
    rep = validate_temperedness(SpectralDensity(Domain.euclidean(2), func))
    assert rep.verdict == verdict
    assert len(rep.partial_sums) == 41


def test_temperedness_counts_atoms():
    s = SpectralDensity(Domain.euclidean(1), lambda p: np.ones(len(p)),
                        atoms=(Atom((3.0,), 2.0), Atom((-3.0,), 2.0)))
    plain = validate_temperedness(SpectralDensity(Domain.euclidean(1), lambda p: np.ones(len(p))))
    rep = validate_temperedness(s)
    assert rep.partial_sums[-1] - plain.partial_sums[-1] == pytest.approx(4.0 * 4.0 ** -4)
