"""Command-line front end.

Usage::

    rigidity classify        --config job.json --out results/
    rigidity predict         --config job.json --out results/
    rigidity dpp             --config job.json --out results/ [--k-cap 2]
    rigidity simulate        --config job.json --out results/ [--seed 7]
    rigidity reproduce-paper --config job.json --out results/

Exit codes: 0 success, 1 input error (a structured error JSON is printed and
written to ``<out>/error.json``), 2 undetermined verdicts present, 3 a
reproduced example does not match its expected verdict.

JSON is the canonical output and is written with sorted keys so that
repeated runs with the same config and seed are byte-identical. Curves and
ladders go to CSV. ``RIGIDITY_THREADS`` sets the number of worker threads.
"""
import argparse
from concurrent.futures import ThreadPoolExecutor
import json
import os
from pathlib import Path
import sys
import warnings

import jsonschema
import numpy as np

from .discrete_predictor import (UNDETERMINED as CURVE_UNDETERMINED, TargetFunctional,
                                 WindowSpec, k_rigid_discrete_test, lmr_test_1d,
                                 prediction_curve)
from .dpp_rigidity import dpp_rigidity_order, structure_factor_from_kernel
from .errors import ConfigError, RigidityError
from .gaussian_sampler import (SimulationSpec, circulant_eigenvalues, dump_realizations,
                               empirical_covariance, empirical_prediction_check,
                               sample_gaussian)
from .loaders import (DENSITY_SCHEMA, KERNEL_SCHEMA, density_from_document,
                      kernel_from_document, load_covariance, read_json, validate)
from .pole_analysis import (UNDETERMINED, MultiIndex, _jsonable, classify_simple,
                            multi_indices, rigidity_classifier)
from .scenarios import render_markdown, run_scenarios
from .spectral_core import SpectralDensity, covariance_from_density

COMMANDS = ("classify", "predict", "dpp", "simulate", "reproduce-paper")
EXIT_OK, EXIT_INPUT, EXIT_UNDETERMINED, EXIT_MISMATCH = 0, 1, 2, 3

_SOURCE = {"oneOf": [{"type": "string"}, DENSITY_SCHEMA]}
_TOLERANCES = {
    "type": "object", "additionalProperties": False,
    "properties": {"tau": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                   "flat_tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                   "eps": {"type": "number", "exclusiveMinimum": 0}},
}
_TARGET = {
    "type": "object", "additionalProperties": False, "required": ["kind"],
    "properties": {"kind": {"enum": ["mass", "moment", "custom"]},
                   "k": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                   "coefficients": {"type": "array",
                                    "items": {"type": "array", "items": {"type": "number"}}}},
}
_WINDOW = {
    "type": "object", "additionalProperties": False, "required": ["m"],
    "properties": {"m": {"type": "integer", "minimum": 0},
                   "d": {"type": "integer", "minimum": 1, "maximum": 3}},
}
_COMMON = {"command": {"enum": list(COMMANDS)},
           "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
           "tolerances": _TOLERANCES}


def _job_schema(required, **props):
    return {"type": "object", "additionalProperties": False, "required": list(required),
            "properties": {**_COMMON, **props}}


JOB_SCHEMAS = {
    "classify": _job_schema(
        ["density"], density=_SOURCE,
        k_cap={"type": "integer", "minimum": 0, "maximum": 4},
        method={"enum": ["auto", "radial", "gram"]},
        degree_cap={"type": "integer", "minimum": 0, "maximum": 8}),
    "predict": _job_schema(
        ["window", "target", "truncations"],
        density=_SOURCE, covariance={"type": "string"}, window=_WINDOW, target=_TARGET,
        truncations={"type": "array", "items": {"type": "integer", "minimum": 1},
                     "minItems": 1},
        discrete_k={"type": "array", "items": {"type": "integer", "minimum": 0}},
        lmr={"type": "boolean"}),
    "dpp": _job_schema(
        ["kernel"], kernel={"oneOf": [{"type": "string"}, KERNEL_SCHEMA]},
        k_cap={"type": "integer", "minimum": 0, "maximum": 4},
        grid={"type": "array", "items": {"type": "number", "minimum": 0}}),
    "simulate": _job_schema(
        ["n"], density=_SOURCE, covariance={"type": "string"},
        n={"type": "integer", "minimum": 2},
        replicates={"type": "integer", "minimum": 1},
        max_lag={"type": "integer", "minimum": 0},
        dump={"type": "boolean"},
        check={"type": "object", "additionalProperties": False, "required": ["window", "N"],
               "properties": {"window": _WINDOW, "target": _TARGET,
                              "N": {"type": "integer", "minimum": 1}}}),
    "reproduce-paper": _job_schema(
        [], filter={"type": "array", "items": {"type": "string"}},
        calibration={"type": "object", "additionalProperties": False,
                     "properties": {"replicates": {"type": "integer", "minimum": 2}}}),
}


def worker_count():
    raw = os.environ.get("RIGIDITY_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"RIGIDITY_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("RIGIDITY_THREADS must be at least 1")
    return n


# ----------------------------------------------------------------------------
# Helpers


class Job:
    """A validated config plus the directory its relative paths refer to."""

    def __init__(self, command, config_path, args):
        self.command = command
        self.base = Path(config_path).resolve().parent
        doc = read_json(config_path)
        validate(doc, JOB_SCHEMAS[command], f"{command} config")
        if doc.get("command", command) != command:
            raise ConfigError(f"config is for {doc['command']!r}, not {command!r}")
        self.doc = doc
        self.seed = args.seed if args.seed is not None else doc.get("seed", 0)
        self.k_cap = args.k_cap if args.k_cap is not None else doc.get("k_cap", 2)
        if self.k_cap < 0:
            raise ConfigError("--k-cap must be nonnegative")
        self.tol = doc.get("tolerances", {})
        self.workers = worker_count()

    def path(self, rel):
        p = Path(rel)
        return p if p.is_absolute() else self.base / p

    def density(self, key="density"):
        src = self.doc[key]
        if isinstance(src, str):
            return density_from_document(read_json(self.path(src)))
        return density_from_document(src)

    def source(self):
        """A density or a covariance, whichever the config gives (exactly one)."""
        has_d, has_c = "density" in self.doc, "covariance" in self.doc
        if has_d == has_c:
            raise ConfigError("give exactly one of 'density' and 'covariance'")
        if has_d:
            return self.density()
        return load_covariance(self.path(self.doc["covariance"]))


def _target(doc, d):
    if doc is None or doc["kind"] == "mass":
        return TargetFunctional.mass()
    if doc["kind"] == "moment":
        k = doc.get("k")
        if not k:
            raise ConfigError("a moment target needs 'k'")
        return TargetFunctional.moment(k)
    coeffs = doc.get("coefficients")
    if not coeffs:
        raise ConfigError("a custom target needs 'coefficients' as [m1, ..., md, value] rows")
    out = {}
    for row in coeffs:
        if len(row) != d + 1:
            raise ConfigError(f"custom coefficient row {row} needs {d} indices and a value")
        out[tuple(int(x) for x in row[:d])] = float(row[d])
    return TargetFunctional.custom(out)


def write_json(path, obj):
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def _k_label(k):
    return "k" + "_".join(str(x) for x in k)


def _pole_ladder_csv(pv):
    diag = pv.diagnostics
    if "ladder" in diag:
        return pv.ladder_csv()
    lines = ["delta,constrained_minimum"]
    for dl, val in zip(diag.get("deltas", []), diag.get("constrained_minima", [])):
        lines.append(f"{dl!r},{float(val)!r}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------------
# Commands


def run_classify(job, out):
    s = job.density()
    targets = [MultiIndex(k) for k in multi_indices(s.d, job.k_cap)]
    method = job.doc.get("method", "auto")
    eps = job.tol.get("eps", 0.5)
    kwargs = {key: job.tol[key] for key in ("tau", "flat_tol") if key in job.tol}
    simple_rep = classify_simple(s) if s.zeros is not None else None
    simple = simple_rep.is_simple if simple_rep else bool(s.flags.simple)

    def one(k):
        return rigidity_classifier(s, k, eps, method=method, simple=simple,
                                   degree_cap=job.doc.get("degree_cap"), **kwargs)

    with ThreadPoolExecutor(max_workers=job.workers) as pool:
        verdicts = list(pool.map(one, targets))
    ladders = out / "ladders"
    ladders.mkdir(exist_ok=True)
    for v in verdicts:
        for pv in v.pole_verdicts:
            name = f"{_k_label(v.target.k)}_{pv.method}.csv"
            (ladders / name).write_text(_pole_ladder_csv(pv))
    undetermined = any(v.verdict == UNDETERMINED or
                       any(p.verdict == UNDETERMINED for p in v.pole_verdicts)
                       for v in verdicts)
    report = {"command": "classify", "density": s.name, "d": s.d, "domain": s.domain.kind,
              "k_cap": job.k_cap, "method": method,
              "simple": simple_rep.to_dict() if simple_rep else {"declared": simple},
              "verdicts": [v.to_dict() for v in verdicts],
              "summary": [{"k": list(v.target.k), "verdict": v.verdict,
                           "pole": [p.verdict for p in v.pole_verdicts],
                           "provenance": v.provenance} for v in verdicts],
              "undetermined": undetermined}
    write_json(out / "verdicts.json", report)
    return EXIT_UNDETERMINED if undetermined else EXIT_OK


def run_predict(job, out):
    src = job.source()
    d = src.d
    win = job.doc["window"]
    if win.get("d", d) != d:
        raise ConfigError(f"window dimension {win['d']} differs from the source dimension {d}")
    window = WindowSpec(win["m"], d)
    target = _target(job.doc["target"], d)
    Ns = job.doc["truncations"]
    if isinstance(src, SpectralDensity):
        if not src.domain.is_torus:
            raise ConfigError("prediction needs a density on the torus or a covariance")
        cov = covariance_from_density(src, 2 * max(Ns))
    else:
        cov = src
    res = prediction_curve(cov, window, target, Ns, workers=job.workers)
    (out / "curve.csv").write_text(res.curve_csv())
    report = {"command": "predict", "prediction": res.to_dict(include_coefficients=True)}
    undetermined = len(Ns) >= 8 and res.rigid_flag == CURVE_UNDETERMINED
    if isinstance(src, SpectralDensity) and d == 1 and src.zeros is not None:
        if job.doc.get("lmr", True):
            report["lmr"] = lmr_test_1d(src, m=window.m).to_dict()
        tests = []
        for k in job.doc.get("discrete_k", []):
            r = k_rigid_discrete_test(src, m=window.m, k=k)
            tests.append(r.to_dict())
            undetermined |= r.rigid is None
        report["discrete_tests"] = tests
    report["undetermined"] = undetermined
    write_json(out / "prediction.json", report)
    return EXIT_UNDETERMINED if undetermined else EXIT_OK


def run_dpp(job, out):
    src = job.doc["kernel"]
    kern = kernel_from_document(read_json(job.path(src)) if isinstance(src, str) else src)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        structure = structure_factor_from_kernel(kern)
        rep = dpp_rigidity_order(kern, job.k_cap, structure=structure)
    grid = np.asarray(job.doc.get("grid", np.linspace(0.0, 4.0 * np.pi, 65)), dtype=float)
    pts = np.zeros((len(grid), kern.d))
    pts[:, 0] = grid
    vals = structure.density.evaluate(pts)
    (out / "structure_factor.csv").write_text(
        "u,s\n" + "".join(f"{u!r},{float(v)!r}\n" for u, v in zip(grid, vals)))
    undetermined = any(v == UNDETERMINED for _, v, _ in rep.verdicts)
    report = {"command": "dpp", **rep.to_dict(), "k_cap": job.k_cap,
              "warnings": sorted({str(w.message) for w in caught}),
              "undetermined": undetermined}
    write_json(out / "dpp.json", report)
    return EXIT_UNDETERMINED if undetermined else EXIT_OK


def run_simulate(job, out):
    src = job.source()
    spec = SimulationSpec(src, job.doc["n"], job.seed, job.doc.get("replicates", 1),
                          name=getattr(src, "name", "covariance"))
    _, method = circulant_eigenvalues(spec)
    paths = sample_gaussian(spec, workers=job.workers)
    report = {"command": "simulate", "spec": spec.describe(), "spec_hash": spec.digest(),
              "method": method, "shape": list(paths.shape)}
    if spec.d == 1:
        max_lag = min(job.doc.get("max_lag", 8), spec.n - 1)
        emp = empirical_covariance(paths, max_lag)
        (out / "covariance.csv").write_text(
            "lag,empirical\n" + "".join(f"{i},{float(c)!r}\n" for i, c in enumerate(emp)))
        report["empirical_covariance"] = emp.tolist()
    if job.doc.get("dump", False):
        dump_realizations(paths, out / "realizations.bin", spec)
        report["realizations"] = "realizations.bin"
    chk = job.doc.get("check")
    if chk is not None:
        window = WindowSpec(chk["window"]["m"], spec.d)
        res = empirical_prediction_check(spec, window, _target(chk.get("target"), spec.d),
                                         chk["N"], workers=job.workers)
        report["check"] = res.to_dict()
    write_json(out / "simulation.json", report)
    return EXIT_OK


def run_reproduce_paper(job, out):
    filters = job.doc.get("filter")
    results = run_scenarios(filters, workers=job.workers)
    report = {"command": "reproduce-paper", "filter": filters, "scenarios": results,
              "total": len(results), "passed": sum(r["passed"] for r in results)}
    cal = job.doc.get("calibration")
    if cal is not None:
        from .scenarios import run_calibration
        rows = run_calibration(cal.get("replicates", 10000), workers=job.workers)
        report["calibration"] = rows
        report["calibration_passed"] = all(abs(r["z_score"]) <= 5.0 for r in rows)
    report = _jsonable(report)
    write_json(out / "report.json", report)
    (out / "report.md").write_text(render_markdown(report))
    ok = report["passed"] == report["total"] and report.get("calibration_passed", True)
    return EXIT_OK if ok else EXIT_MISMATCH


RUNNERS = {"classify": run_classify, "predict": run_predict, "dpp": run_dpp,
           "simulate": run_simulate, "reproduce-paper": run_reproduce_paper}


# ----------------------------------------------------------------------------
# Entry point


def build_parser():
    parser = argparse.ArgumentParser(prog="rigidity",
                                     description="Linear rigidity of stationary random measures.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON job configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed")
        p.add_argument("--k-cap", type=int, default=None, dest="k_cap",
                       help="largest |k| examined")
    return parser


def _error(out, exc):
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    print(text, end="")
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(text)
    except OSError:
        pass
    return EXIT_INPUT


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        job = Job(args.command, args.config, args)
        out.mkdir(parents=True, exist_ok=True)
        code = RUNNERS[args.command](job, out)
    except (RigidityError, jsonschema.ValidationError, ValueError) as exc:
        return _error(out, exc)
    return code


if __name__ == "__main__":
    sys.exit(main())
