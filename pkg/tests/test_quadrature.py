import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rigidity.quadrature import (adaptive_gauss_kronrod, fit_ladder, kronrod_rule,
                                 pairwise_sum, shell_rule, sphere_area, sphere_directions,
                                 sphere_product_rule)


def test_gauss_kronrod_exponential():
    res = adaptive_gauss_kronrod(lambda x: np.exp(-x), [0.0, 40.0], rtol=1e-13)
    assert res.converged
    np.testing.assert_allclose(res.value, 1.0 - math.exp(-40.0), rtol=1e-13)


def test_gauss_kronrod_vector_valued_componentwise():
    f = lambda x: np.stack([np.cos(x), x ** 2, np.exp(x)], axis=-1)
    res = adaptive_gauss_kronrod(f, [0.0, 1.0], rtol=1e-12, componentwise=True)
    np.testing.assert_allclose(res.value, [math.sin(1.0), 1.0 / 3.0, math.e - 1.0], rtol=1e-12)


def test_gauss_kronrod_integrable_singularity_at_edge():
    res = adaptive_gauss_kronrod(lambda x: 1.0 / np.sqrt(x), [0.0, 1.0], rtol=1e-9,
                                 max_panels=4000)
    assert res.converged
    np.testing.assert_allclose(res.value, 2.0, rtol=1e-8)


def test_gauss_kronrod_reports_non_convergence():
    res = adaptive_gauss_kronrod(lambda x: 1.0 / np.abs(x - 0.3), [0.0, 1.0], rtol=1e-10,
                                 max_panels=50)
    assert not res.converged


def test_rule_reproduces_integral():
    res = adaptive_gauss_kronrod(np.cos, [0.0, 2.0], rtol=1e-12)
    x, w = res.rule()
    np.testing.assert_allclose(w @ np.cos(x), math.sin(2.0), rtol=1e-12)
    x, w = kronrod_rule(np.array([[0.0, 1.0], [1.0, 3.0]]))
    assert w.sum() == pytest.approx(3.0, rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=300))
def test_pairwise_sum_matches_fsum(values):
    got = float(pairwise_sum(np.array(values)))
    assert got == pytest.approx(math.fsum(values), abs=1e-6 * (1 + sum(map(abs, values))))


def test_shell_rule_integrates_powers():
    rho, w, idx = shell_rule(0.5, 30, order=16)
    lo = 0.5 * 2.0 ** -30
    assert w @ rho ** 2 == pytest.approx((0.5 ** 3 - lo ** 3) / 3.0, rel=1e-13)
    assert np.bincount(idx).tolist() == [16] * 30


def test_sphere_helpers():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2.0 * math.pi)
    assert sphere_area(3) == pytest.approx(4.0 * math.pi)
    for d in (1, 2, 3):
        dirs = sphere_directions(d, 200)
        np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0)
    dirs, w = sphere_product_rule()
    assert w.sum() == pytest.approx(4.0 * math.pi, rel=1e-13)
    # second moment of z over S^2 is 4 pi / 3
    assert w @ dirs[:, 2] ** 2 == pytest.approx(4.0 * math.pi / 3.0, rel=1e-12)
    with pytest.raises(ValueError):
        sphere_directions(4)


@pytest.mark.parametrize("ratio, verdict", [(1.0, "divergent"), (2.0, "divergent"),
                                            (0.5, "convergent"), (0.97, "undetermined")])
def test_fit_ladder_verdicts(ratio, verdict):
    terms = ratio ** np.arange(40)
    fit = fit_ladder(terms)
    assert fit.verdict == verdict
    assert fit.ratio == pytest.approx(ratio, rel=1e-10)


def test_fit_ladder_edge_cases():
    assert fit_ladder(np.zeros(30)).verdict == "convergent"
    assert fit_ladder(np.array([1.0, np.inf, 1.0])).verdict == "divergent"
    terms = 0.5 ** np.arange(40)
    terms[-5:] = 0.0
    assert fit_ladder(terms).verdict == "convergent"
