import math

import numpy as np
import pytest

from rigidity import builtins as bi
from rigidity.dpp_rigidity import DppKernel
from rigidity.errors import ConfigError
from rigidity.loaders import (density_from_document, kernel_from_document, load_covariance,
                              load_density, read_json)
from rigidity.spectral_core import covariance_from_density

CONFIGS = __import__("pathlib").Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("name", sorted(bi.BUILTIN_DENSITIES))
def test_builtins_are_even_and_nonnegative(name):
    params = {"sin_power_product": {"roots": [1.0, -1.0], "orders": [1, 1]},
              "power": {"alpha": 2, "d": 2}}.get(name, {})
    s = bi.builtin_density(name, **params)
    rng = np.random.default_rng(0)
    u = rng.uniform(-3, 3, size=(200, s.d))
    v = s.evaluate(u)
    assert np.all(np.isfinite(v)) and np.all(v >= 0)
    np.testing.assert_allclose(v, s.evaluate(-u), rtol=1e-12, atol=1e-300)
    s.check_invariants()


def test_builtin_covariances():
    np.testing.assert_allclose(covariance_from_density(bi.ma1_unit_root(), 2).lookup(
        np.arange(3)[:, None]), [1.0, -0.5, 0.0], atol=1e-12)
    np.testing.assert_allclose(covariance_from_density(bi.ar1(0.3), 4).lookup(
        np.arange(5)[:, None]), 0.3 ** np.arange(5), atol=1e-12)
    np.testing.assert_allclose(covariance_from_density(bi.white_noise(), 1).lookup(
        np.arange(2)[:, None]), [1.0, 0.0], atol=1e-13)


def test_ginibre_and_gaf_values():
    g = bi.ginibre()
    for r in (0.5, 1.0, 3.0):
        assert g.evaluate(np.array([[0.0, r]]))[0] == pytest.approx(
            1 - math.exp(-r * r / (4 * math.pi)), rel=1e-12)
    assert g.evaluate(np.array([[1e-9, 0.0]]))[0] == pytest.approx(1e-18 / (4 * math.pi))
    assert bi.gaf_scaling().evaluate(np.array([[2.0, 0.0]]))[0] == pytest.approx(2 / math.pi)


def test_counterexample_pieces():
    s = bi.counterexample()
    assert s.evaluate(np.array([[0.3, 0.2]]))[0] == 1.0
    u1, u2 = 1.0, 0.7
    want = u2 ** 2 / (1 + u2 ** 10) / (1 + u1 ** 10)
    assert s.evaluate(np.array([[u1, u2]]))[0] == pytest.approx(want)


def test_builtin_errors():
    with pytest.raises(ConfigError):
        bi.builtin_density("nope")
    with pytest.raises(ConfigError):
        bi.builtin_density("ar1", phi=1.0)
    with pytest.raises(ConfigError):
        bi.builtin_density("ginibre", bogus=1)


@pytest.mark.parametrize("fname", ["ginibre.json", "poisson.json", "gaf_scaling.json",
                                   "discrete_example.json", "unit_root.json"])
def test_shipped_density_configs_load(fname):
    s = load_density(CONFIGS / fname)
    assert s.evaluate(np.ones((1, s.d))).shape == (1,)


def test_expression_document():
    s = density_from_document({"domain": {"kind": "euclidean", "d": 2},
                               "density": {"kind": "expression", "expression": "r**4 / (8*pi)"},
                               "flags": {"isotropic": True},
                               "zeros": [{"location": [0, 0], "order": 2}]})
    assert s.flags.isotropic and s.zeros[0].order == 2
    assert s.evaluate(np.array([[2.0, 0.0]]))[0] == pytest.approx(2 / math.pi)


def test_builtin_document_overrides():
    s = density_from_document({"density": {"kind": "builtin", "name": "ar1",
                                            "params": {"phi": 0.2}},
                               "name": "slow", "atoms": [{"location": [0.0], "mass": 0.5}]})
    assert s.name == "slow" and s.atoms[0].mass == 0.5
    with pytest.raises(ConfigError):
        density_from_document({"density": {"kind": "builtin", "name": "ginibre"},
                               "domain": {"kind": "torus", "d": 2}})


def test_table_document():
    s = density_from_document({"domain": {"kind": "euclidean", "d": 2},
                               "density": {"kind": "table", "grid": [0, 1, 2],
                                           "values": [0, 1, 1]}})
    assert s.flags.isotropic
    assert s.evaluate(np.array([[0.0, 0.5], [-0.3, -0.4]])) == pytest.approx([0.5, 0.5])


@pytest.mark.parametrize("doc", [
    {"density": {"kind": "expression", "expression": "u"}},                 # no domain
    {"domain": {"kind": "torus", "d": 4}, "density": {"kind": "expression", "expression": "1"}},
    {"domain": {"kind": "torus", "d": 1}, "density": {"kind": "expression", "expression": "1"},
     "extra": 1},
    {"domain": {"kind": "torus", "d": 1}, "density": {"kind": "table", "grid": [0, 1],
                                                      "values": [1, 2, 3]}},
    {"domain": {"kind": "torus", "d": 1}, "density": {"kind": "table", "grid": [1, 0],
                                                      "values": [1, 2]}},
    {"domain": {"kind": "torus", "d": 1}, "density": {"kind": "expression", "expression": "1"},
     "zeros": [{"location": [0, 0], "order": 1}]},
    {"domain": {"kind": "torus", "d": 1}, "density": {"kind": "expression",
                                                      "expression": "__import__('os')"}},
])
def test_bad_documents(doc):
    with pytest.raises(ConfigError):
        density_from_document(doc)


def test_read_json_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_json(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        read_json(bad)


def test_kernel_documents():
    k = kernel_from_document({"builtin": "gaussian", "params": {"d": 2}})
    assert isinstance(k, DppKernel) and k.d == 2
    k = kernel_from_document({"expression": "exp(-pi*x1**2/2)", "d": 1})
    assert k.kappa(np.zeros((1, 1)))[0] == 1.0
    with pytest.raises(ConfigError):
        kernel_from_document({"builtin": "unknown"})
    with pytest.raises(ConfigError):
        kernel_from_document({"builtin": "sine", "params": {"x": 1}})


def test_load_covariance(tmp_path):
    p = tmp_path / "cov.csv"
    p.write_text("m1,value\n0,1.0\n1,0.25\n")
    cov = load_covariance(p)
    assert cov.lookup(np.array([[-1], [0], [2]])).tolist() == [0.25, 1.0, 0.0]
    p.write_text("m1,value\n0,abc\n")
    with pytest.raises(ConfigError):
        load_covariance(p)
    with pytest.raises(ConfigError):
        load_covariance(tmp_path / "none.csv")
