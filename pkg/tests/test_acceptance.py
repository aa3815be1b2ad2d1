"""Acceptance suite: ten end-to-end criteria, each with a runtime budget.

Every test prints one ``PASS``/``FAIL`` line (visible without ``-s``) and
then asserts. Tolerances and budgets are the agreed ones; none is relaxed
here.
"""
import math
import time

import numpy as np
import pytest

from oracles import ar1_series, conditional_variance, kolmogorov_from_quad, lookup_1d, \
    random_ma_covariance
from rigidity import builtins as bi
from rigidity.discrete_predictor import (RIGID, TargetFunctional, WindowSpec, annulus_points,
                                         best_linear_predictor, k_rigid_discrete_test,
                                         lmr_test_1d, prediction_curve, rigidity_from_curve)
from rigidity.dpp_rigidity import (dpp_rigidity_order, ginibre_kernel, sine_kernel,
                                   tensor_sinc_kernel)
from rigidity.pole_analysis import (K_RIGID, NO_POLE, NOT_K_RIGID, POLE, SUFFICIENT_ONLY,
                                    UNDETERMINED, gram_pole_test, radial_pole_test,
                                    rigidity_classifier)
from rigidity.scenarios import CALIBRATION_CASES, run_calibration
from rigidity.spectral_core import CovarianceSequence, DensityFlags, Domain, SpectralDensity

pytestmark = pytest.mark.acceptance


def check(capsys, number, title, budget, body):
    """Run ``body() -> (ok, detail)``, print one verdict line, then assert."""
    start = time.perf_counter()
    try:
        ok, detail = body()
    except Exception as exc:
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - start
    in_time = elapsed <= budget
    status = "PASS" if ok and in_time else "FAIL"
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {status} {title} ({elapsed:.1f}s / {budget}s) {detail}")
    assert ok, detail
    assert in_time, f"took {elapsed:.1f}s, budget {budget}s"


def test_criterion_01_predictor_oracle(capsys):
    def body():
        rng = np.random.default_rng(20240601)
        targets = [TargetFunctional.mass(), TargetFunctional.moment(1), TargetFunctional.moment(2)]
        worst, cases = 0.0, 0
        for _ in range(50):
            support = int(rng.integers(1, 9))
            mapping = random_ma_covariance(rng, support)
            cov = CovarianceSequence.from_mapping(mapping)
            oracle_cov = lookup_1d(mapping)
            for m in (0, 1, 2):
                window = WindowSpec(m)
                for N in sorted({m + 1, m + 1 + int(rng.integers(1, 20)), 64}):
                    for target in targets:
                        got = best_linear_predictor(cov, window, target, N).residual_variance
                        pts, gamma = target.weights(window)
                        want = conditional_variance(oracle_cov, pts, gamma,
                                                    annulus_points(N, m, 1))
                        worst = max(worst, abs(got - want))
                        cases += 1
        return worst <= 1e-8, f"max |error| {worst:.2e} over {cases} cases"
    check(capsys, 1, "predictor matches conditional variance", 60, body)


def test_criterion_02_kolmogorov_limit(capsys):
    def body():
        gaps = {}
        for phi in (0.3, 0.5, 0.8):
            res = best_linear_predictor(bi.ar1(phi), WindowSpec(0), TargetFunctional.mass(), 512)
            ref = kolmogorov_from_quad(ar1_series(phi))
            gaps[phi] = abs(res.residual_variance - ref) / ref
        worst = max(gaps.values())
        return worst <= 1e-4, f"max relative gap {worst:.2e}"
    check(capsys, 2, "AR(1) residual reaches the interpolation limit", 30, body)


TRUNCATIONS = (8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256)


def test_criterion_03_unit_root_witness(capsys):
    def body():
        res = prediction_curve(bi.ma1_unit_root(), WindowSpec(0), TargetFunctional.mass(),
                               TRUNCATIONS)
        r = [v for _, v in res.curve]
        decreasing = all(b < a for a, b in zip(r, r[1:]))
        flag = rigidity_from_curve(res.curve).flag
        limit = res.extrapolated_limit
        ok = decreasing and limit <= 1e-4 and flag == RIGID
        return ok, f"decreasing={decreasing} limit={limit:.2e} flag={flag}"
    check(capsys, 3, "unit-root residual extrapolates to zero", 30, body)


def test_criterion_04_discrete_example(capsys):
    def body():
        s = bi.discrete_example()
        r1 = k_rigid_discrete_test(s, m=1, k=1)
        r0 = k_rigid_discrete_test(s, m=1, k=0)
        w = r0.witness
        ok = (r1.verdict == RIGID and r0.verdict != RIGID and w is not None
              and w.degree == 1 and w.is_even())
        return ok, f"k=1 {r1.verdict}, k=0 {r0.verdict}, witness {w.to_dict() if w else None}"
    check(capsys, 4, "(u-1)^2(u+1)^2 is 1-rigid but not 0-rigid on {-1,0,1}", 10, body)


LMR_FAMILIES = [
    ([], []), ([0.0], [1]), ([math.pi], [1]), ([1.0, -1.0], [1, 1]), ([0.0], [2]),
    ([0.0, math.pi], [1, 1]), ([0.0, 2.0, -2.0], [1, 1, 1]), ([0.0], [3]),
    ([1.0, -1.0, 2.0, -2.0], [1, 1, 1, 1]), ([1.0, -1.0], [2, 2]),
    ([0.0, 2.0, -2.0], [2, 1, 1]), ([0.0], [4]),
]


def test_criterion_05_lmr_suite(capsys):
    def body():
        bad = []
        for roots, orders in LMR_FAMILIES:
            s = bi.sin_power_product(roots, orders)
            for m in (0, 1, 2):
                r = lmr_test_1d(s, m=m)
                if r.lmr != (sum(orders) > 2 * m) or (not r.lmr and not r.witness_bounded):
                    bad.append((roots, orders, m))
        return not bad, f"{len(LMR_FAMILIES) * 3 - len(bad)}/{len(LMR_FAMILIES) * 3} agree {bad}"
    check(capsys, 5, "maximal rigidity iff total multiplicity > 2m", 30, body)


def test_criterion_06_radial_grid(capsys):
    def body():
        agree, undetermined, wrong = 0, 0, []
        for alpha in range(7):
            for d in (1, 2, 3):
                s = SpectralDensity(Domain.euclidean(d),
                                    lambda p, a=alpha: np.sum(p * p, axis=1) ** (a / 2),
                                    DensityFlags(isotropic=True))
                for k in (0, 1, 2):
                    v = radial_pole_test(s, (k,) + (0,) * (d - 1)).verdict
                    want = POLE if alpha >= 2 * k + d else NO_POLE
                    if v == want:
                        agree += 1
                    elif v == UNDETERMINED:
                        undetermined += 1
                    else:
                        wrong.append((alpha, d, k, v))
        total = agree + undetermined + len(wrong)
        ok = not wrong and agree >= 0.95 * total
        return ok, f"{agree}/{total} agree, {undetermined} undetermined, wrong {wrong}"
    check(capsys, 6, "radial test follows power counting", 60, body)


def test_criterion_07_anisotropy(capsys):
    def body():
        s = bi.anisotropic_line()
        v0 = gram_pole_test(s, (0, 0))
        v1 = gram_pole_test(s, (1, 0))
        w = v1.diagnostics.get("witness_polynomial") or {}
        a, b = w.get((1, 0), 0.0), w.get((0, 1), 0.0)
        rest = math.sqrt(sum(c * c for e, c in w.items() if e not in ((1, 0), (0, 1))))
        gap = math.hypot(abs(a + b) / math.sqrt(2.0), rest)
        ok = v0.verdict == POLE and v1.verdict == NO_POLE and gap <= 1e-6
        return ok, f"(0,0) {v0.verdict}, (1,0) {v1.verdict}, witness gap {gap:.1e}"
    check(capsys, 7, "(u1-u2)^2: pole at (0,0), witness u1-u2 at (1,0)", 60, body)


def test_criterion_08_dpp_suite(capsys):
    def body():
        g = dpp_rigidity_order(ginibre_kernel(), k_cap=1)
        s = dpp_rigidity_order(sine_kernel(), k_cap=0)
        t = dpp_rigidity_order(tensor_sinc_kernel(), k_cap=0)
        got = ([v for _, v, _ in g.verdicts], s.verdicts[0][1], t.verdicts[0][1])
        ok = got == ([K_RIGID, NOT_K_RIGID], K_RIGID, NOT_K_RIGID)
        return ok, f"ginibre {got[0]}, sine {got[1]}, tensor sinc {got[2]}"
    check(capsys, 8, "Ginibre, sine and tensor-sinc rigidity orders", 120, body)


def test_criterion_09_simulation_calibration(capsys):
    def body():
        rows = run_calibration(10_000, workers=4, cases=CALIBRATION_CASES)
        z = [abs(r["z_score"]) for r in rows]
        within3 = sum(x <= 3 for x in z) / len(z)
        ok = max(z) <= 5 and within3 >= 0.95
        return ok, f"max |z| {max(z):.2f}, share |z|<=3 {within3:.0%} over {len(z)} cases"
    check(capsys, 9, "empirical residuals match theory", 180, body)


def test_criterion_10_counterexample_guard(capsys):
    def body():
        v = rigidity_classifier(bi.counterexample(), (0, 0))
        return v.verdict == SUFFICIENT_ONLY, f"{v.verdict} ({v.provenance})"
    check(capsys, 10, "no false converse for the off-origin zero", 30, body)
