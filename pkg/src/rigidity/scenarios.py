"""Bundled worked examples, each with its expected verdict.

A scenario is a named check carrying tags for filtering. ``run_scenarios``
executes the selection concurrently, collects failures per scenario rather
than stopping at the first, and returns results in a fixed order.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import traceback
from typing import Callable

from . import builtins as bi
from .discrete_predictor import (NOT_RIGID, RIGID, TargetFunctional, WindowSpec,
                                 k_rigid_discrete_test, lmr_test_1d, prediction_curve)
from .gaussian_sampler import SimulationSpec, empirical_prediction_check
from .dpp_rigidity import dpp_rigidity_order, ginibre_kernel, sine_kernel, tensor_sinc_kernel
from .pole_analysis import (K_RIGID, NO_POLE, NOT_K_RIGID, POLE, SUFFICIENT_ONLY,
                            gram_pole_test, rigidity_classifier)
from .pole_analysis import _jsonable


@dataclass(frozen=True)
class Scenario:
    name: str
    tags: tuple
    description: str
    check: Callable[[], dict] = None

    def matches(self, filters):
        return any(f == self.name or f in self.tags for f in filters)


def _result(expected, observed, details=None):
    return {"expected": expected, "observed": observed, "passed": expected == observed,
            "details": details or {}}


def _classify(s, targets):
    out = {}
    for k in targets:
        v = rigidity_classifier(s, k)
        out[",".join(map(str, k))] = v.verdict
    return out


def _gaf():
    obs = _classify(bi.gaf_scaling(), [(0, 0), (1, 0), (0, 1)])
    return _result({"0,0": K_RIGID, "1,0": K_RIGID, "0,1": K_RIGID}, obs)


def _ginibre_density():
    obs = _classify(bi.ginibre(), [(0, 0), (1, 0)])
    return _result({"0,0": K_RIGID, "1,0": NOT_K_RIGID}, obs)


def _poisson():
    obs = _classify(bi.poisson(2), [(0, 0), (1, 0)])
    return _result({"0,0": NOT_K_RIGID, "1,0": NOT_K_RIGID}, obs)


def _anisotropy():
    s = bi.anisotropic_line()
    v0 = gram_pole_test(s, (0, 0))
    v1 = gram_pole_test(s, (1, 0))
    witness = v1.diagnostics.get("witness_polynomial") or {}
    coeffs = {tuple(e): c for e, c in witness.items()}
    a, b = coeffs.get((1, 0), 0.0), coeffs.get((0, 1), 0.0)
    rest = math.sqrt(sum(c * c for e, c in coeffs.items() if e not in ((1, 0), (0, 1))))
    # distance of the normalised witness to span{u1 - u2}
    gap = math.hypot(abs(a + b) / math.sqrt(2.0), rest)
    obs = {"0,0": v0.verdict, "1,0": v1.verdict, "witness_in_span": gap <= 1e-6}
    return _result({"0,0": POLE, "1,0": NO_POLE, "witness_in_span": True}, obs,
                   {"witness_gap": gap,
                    "witness": [[list(e), c] for e, c in sorted(coeffs.items())]})


def _discrete_lmr():
    r = lmr_test_1d(bi.discrete_example(), m=1)
    return _result({"lmr": False, "witness_bounded": True},
                   {"lmr": r.lmr, "witness_bounded": r.witness_bounded}, r.to_dict())


def _discrete_k(k, expected):
    def run():
        r = k_rigid_discrete_test(bi.discrete_example(), m=1, k=k)
        obs = {"verdict": r.verdict}
        exp = {"verdict": expected}
        if k == 0:
            obs["witness_even"] = bool(r.witness is not None and r.witness.is_even())
            exp["witness_even"] = True
        return _result(exp, obs, r.to_dict())
    return run


def _spec_1d(roots, orders, m):
    def run():
        s = bi.sin_power_product(roots, orders)
        r = lmr_test_1d(s, m=m)
        total = sum(orders)
        exp = {"lmr": total > 2 * m}
        obs = {"lmr": r.lmr}
        if not r.lmr:
            exp["witness_bounded"] = True
            obs["witness_bounded"] = r.witness_bounded
        return _result(exp, obs, r.to_dict())
    return run


PREDICTOR_TRUNCATIONS = (8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256)


def _predictor(s, expected):
    def run():
        curve = prediction_curve(s, WindowSpec(0), TargetFunctional.mass(),
                                 PREDICTOR_TRUNCATIONS)
        return _result({"rigid_flag": expected}, {"rigid_flag": curve.rigid_flag},
                       curve.to_dict())
    return run


def _dpp(kern_factory, expected_max):
    def run():
        rep = dpp_rigidity_order(kern_factory(), k_cap=1)
        return _result({"max_rigid_order": expected_max},
                       {"max_rigid_order": rep.max_rigid_order}, rep.to_dict())
    return run


def _counterexample():
    v = rigidity_classifier(bi.counterexample(), (0, 0))
    return _result({"0,0": SUFFICIENT_ONLY}, {"0,0": v.verdict}, v.to_dict())


SCENARIOS = (
    Scenario("gaf-one-rigid", ("gaf", "continuous"),
             "planar Gaussian analytic zeros: |u|^4 near 0 gives 0- and 1-rigidity", _gaf),
    Scenario("ginibre-structure-factor", ("ginibre", "continuous"),
             "Ginibre structure factor: 0-rigid, not 1-rigid", _ginibre_density),
    Scenario("poisson", ("trivial", "continuous"),
             "constant density: not rigid at any order", _poisson),
    Scenario("anisotropic-line", ("anisotropy", "continuous"),
             "(u1 - u2)^2: pole for k = 0, no (1,0)-pole, witness u1 - u2", _anisotropy),
    Scenario("discrete-not-lmr", ("discrete",),
             "(u-1)^2 (u+1)^2 on the circle, m = 1: not maximally rigid", _discrete_lmr),
    Scenario("discrete-k0", ("discrete",),
             "(u-1)^2 (u+1)^2, m = 1: not 0-rigid, even witness",
             _discrete_k(0, NOT_RIGID)),
    Scenario("discrete-k1", ("discrete",),
             "(u-1)^2 (u+1)^2, m = 1: 1-rigid", _discrete_k(1, RIGID)),
    Scenario("circle-multiplicity-2-m0", ("spec-1d",),
             "two simple zeros, m = 0: maximally rigid", _spec_1d([2.0, -2.0], [1, 1], 0)),
    Scenario("circle-multiplicity-2-m1", ("spec-1d",),
             "two simple zeros, m = 1: not maximally rigid", _spec_1d([2.0, -2.0], [1, 1], 1)),
    Scenario("circle-multiplicity-3-m1", ("spec-1d",),
             "three simple zeros, m = 1: maximally rigid",
             _spec_1d([0.0, 2.0, -2.0], [1, 1, 1], 1)),
    Scenario("circle-double-zero-m1", ("spec-1d",),
             "double zero at 0, m = 1: not maximally rigid", _spec_1d([0.0], [2], 1)),
    Scenario("predictor-unit-root", ("predictor",),
             "|1 - e^{iu}|^2: mass on {0} is predictable", _predictor(bi.ma1_unit_root(), RIGID)),
    Scenario("predictor-white-noise", ("predictor",),
             "white noise: nothing is predictable", _predictor(bi.white_noise(), NOT_RIGID)),
    Scenario("dpp-ginibre", ("dpp",), "Ginibre kernel: 0-rigid, not 1-rigid",
             _dpp(ginibre_kernel, 0)),
    Scenario("dpp-sine", ("dpp",), "sine kernel: 0-rigid", _dpp(sine_kernel, 0)),
    Scenario("dpp-tensor-sinc", ("dpp",), "product of sinc kernels in d = 2: not 0-rigid",
             _dpp(tensor_sinc_kernel, None)),
    Scenario("counterexample", ("counterexample", "continuous"),
             "zero of infinite order away from 0: only the sufficient direction applies",
             _counterexample),
)


def select(filters=None):
    """All scenarios when ``filters`` is None, else those matching a name or tag."""
    if filters is None:
        return list(SCENARIOS)
    return [sc for sc in SCENARIOS if sc.matches(filters)]


def _run_one(sc):
    try:
        out = sc.check()
    except Exception as exc:                     # collected, not fail-fast
        out = {"expected": None, "observed": None, "passed": False,
               "details": {"error": f"{type(exc).__name__}: {exc}",
                           "traceback": traceback.format_exc().splitlines()[-3:]}}
    return {"name": sc.name, "tags": list(sc.tags), "description": sc.description,
            **_jsonable(out)}


def run_scenarios(filters=None, workers=1):
    chosen = select(filters)
    if workers > 1 and len(chosen) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, chosen))
    else:
        results = [_run_one(sc) for sc in chosen]
    return results


def render_markdown(report):
    lines = ["# Reproduction report", "",
             f"{report['passed']} of {report['total']} scenarios passed.", "",
             "| scenario | tags | expected | observed | result |",
             "|---|---|---|---|---|"]
    for r in report["scenarios"]:
        lines.append(f"| {r['name']} | {', '.join(r['tags'])} | `{_compact(r['expected'])}` | "
                     f"`{_compact(r['observed'])}` | {'pass' if r['passed'] else 'FAIL'} |")
    for r in report["scenarios"]:
        if "error" in r["details"]:
            lines += ["", f"**{r['name']}** raised `{r['details']['error']}`"]
    return "\n".join(lines) + "\n"


def _compact(obj):
    if isinstance(obj, dict):
        return ", ".join(f"{k}={v}" for k, v in sorted(obj.items()))
    return str(obj)


@dataclass(frozen=True)
class CalibrationCase:
    name: str
    density: Callable
    m: int
    target: TargetFunctional
    N: int
    seed: int


CALIBRATION_CASES = (
    CalibrationCase("white-noise-mass", bi.white_noise, 0, TargetFunctional.mass(), 8, 11),
    CalibrationCase("unit-root-mass-N32", bi.ma1_unit_root, 0, TargetFunctional.mass(), 32, 12),
    CalibrationCase("unit-root-mass-N256", bi.ma1_unit_root, 0, TargetFunctional.mass(), 256, 13),
    CalibrationCase("unit-root-moment1", bi.ma1_unit_root, 1, TargetFunctional.moment(1), 64, 14),
    CalibrationCase("ar1-0.5-mass", lambda: bi.ar1(0.5), 0, TargetFunctional.mass(), 16, 15),
    CalibrationCase("ar1-0.5-moment1", lambda: bi.ar1(0.5), 1, TargetFunctional.moment(1), 64, 16),
    CalibrationCase("ar1-0.8-mass-m1", lambda: bi.ar1(0.8), 1, TargetFunctional.mass(), 32, 17),
    CalibrationCase("discrete-example-moment1", bi.discrete_example, 1,
                    TargetFunctional.moment(1), 64, 18),
)


def run_calibration(replicates=10000, workers=1, cases=CALIBRATION_CASES):
    """Empirical check of the predictor residual on simulated paths, one row per case."""
    rows = []
    for case in cases:
        spec = SimulationSpec(case.density(), 2, case.seed, replicates, case.name)
        chk = empirical_prediction_check(spec, WindowSpec(case.m), case.target, case.N,
                                         workers=workers)
        rows.append({"name": case.name, "m": case.m, "N": case.N, "seed": case.seed,
                     "target": case.target.describe(), **chk.to_dict()})
    return rows
