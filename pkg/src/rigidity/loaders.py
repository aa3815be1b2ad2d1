"""JSON density documents, DPP kernel documents and covariance CSV files.

Every document is validated against a strict JSON schema (unknown keys are
rejected) before it is turned into a model object. Paths are resolved by the
caller.
"""
from dataclasses import replace
import json
from pathlib import Path

import jsonschema
import numpy as np

from .builtins import builtin_density
from .dpp_rigidity import BUILTIN_KERNELS, custom_kernel
from .errors import ConfigError, InvalidCovariance
from .expressions import Expression
from .spectral_core import (Atom, CovarianceSequence, DensityFlags, Domain, SpectralDensity,
                            ZeroAnnotation)

_POINT = {"type": "array", "items": {"type": "number"}, "minItems": 1}

DENSITY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["density"],
    "properties": {
        "name": {"type": "string"},
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "d"],
            "properties": {"kind": {"enum": ["torus", "euclidean"]},
                           "d": {"type": "integer", "minimum": 1, "maximum": 3}},
        },
        "density": {
            "oneOf": [
                {"type": "object", "additionalProperties": False,
                 "required": ["kind", "expression"],
                 "properties": {"kind": {"const": "expression"},
                                "expression": {"type": "string"}}},
                {"type": "object", "additionalProperties": False,
                 "required": ["kind", "grid", "values"],
                 "properties": {"kind": {"const": "table"},
                                "grid": {"type": "array", "items": {"type": "number"},
                                         "minItems": 2},
                                "values": {"type": "array", "items": {"type": "number"},
                                           "minItems": 2}}},
                {"type": "object", "additionalProperties": False,
                 "required": ["kind", "name"],
                 "properties": {"kind": {"const": "builtin"}, "name": {"type": "string"},
                                "params": {"type": "object"}}},
            ]
        },
        "flags": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"isotropic": {"type": "boolean"}, "separable": {"type": "boolean"},
                           "simple": {"type": "boolean"}},
        },
        "zeros": {
            "type": "array",
            "items": {"type": "object", "additionalProperties": False,
                      "required": ["location", "order"],
                      "properties": {"location": _POINT,
                                     "order": {"type": "integer", "minimum": 0}}},
        },
        "atoms": {
            "type": "array",
            "items": {"type": "object", "additionalProperties": False,
                      "required": ["location", "mass"],
                      "properties": {"location": _POINT,
                                     "mass": {"type": "number", "minimum": 0}}},
        },
    },
}

KERNEL_SCHEMA = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["builtin"],
         "properties": {"builtin": {"enum": sorted(BUILTIN_KERNELS)},
                        "params": {"type": "object"}}},
        {"type": "object", "additionalProperties": False, "required": ["expression", "d"],
         "properties": {"expression": {"type": "string"},
                        "d": {"type": "integer", "minimum": 1, "maximum": 3},
                        "kappa_sq_ft": {"type": "string"},
                        "isotropic": {"type": "boolean"},
                        "intensity_scaling": {"type": "number", "exclusiveMinimum": 0}}},
    ]
}


def validate(doc, schema, what):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid {what} at {where}: {exc.message}") from None


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def _table_density(grid, values, d):
    """Even, piecewise-linear density from samples at nonnegative abscissae.

    For d = 1 the abscissa is |u|; for d > 1 it is the norm, which makes the
    density isotropic.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.shape != values.shape:
        raise ConfigError("table grid and values differ in length")
    if np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ConfigError("table grid must be increasing and start at a nonnegative value")
    if np.any(values < 0):
        raise ConfigError("table values must be nonnegative")

    def func(p):
        r = np.linalg.norm(p, axis=1)
        return np.interp(r, grid, values)

    return func


def density_from_document(doc):
    """Build a :class:`SpectralDensity` from a parsed density document."""
    validate(doc, DENSITY_SCHEMA, "density document")
    body = doc["density"]
    flags_doc = doc.get("flags", {})
    if body["kind"] == "builtin":
        s = builtin_density(body["name"], **body.get("params", {}))
        if "domain" in doc:
            dom = doc["domain"]
            if dom["kind"] != s.domain.kind or dom["d"] != s.d:
                raise ConfigError(f"builtin {body['name']!r} lives on {s.domain.kind}"
                                  f"(d={s.d}), not {dom['kind']}(d={dom['d']})")
        changes = {}
        if flags_doc:
            changes["flags"] = replace(s.flags, **flags_doc)
        if "zeros" in doc:
            changes["zeros"] = _zeros(doc["zeros"], s.d)
        if "atoms" in doc:
            changes["atoms"] = _atoms(doc["atoms"], s.d)
        if "name" in doc:
            changes["name"] = doc["name"]
        if changes:
            s = replace(s, **changes)
        s.check_invariants()
        return s
    if "domain" not in doc:
        raise ConfigError("expression and table densities need a domain")
    dom = doc["domain"]
    d = dom["d"]
    domain = Domain.torus(d) if dom["kind"] == "torus" else Domain.euclidean(d)
    if body["kind"] == "expression":
        func = Expression(body["expression"], d)
    else:
        func = _table_density(body["grid"], body["values"], d)
        if d > 1:
            flags_doc = {"isotropic": True, **flags_doc}
    zeros = _zeros(doc["zeros"], d) if "zeros" in doc else None
    atoms = _atoms(doc.get("atoms", []), d)
    s = SpectralDensity(domain, func, DensityFlags(**flags_doc), zeros=zeros, atoms=atoms,
                        name=doc.get("name", body.get("expression", "table")))
    s.check_invariants()
    return s


def _zeros(items, d):
    out = []
    for z in items:
        if len(z["location"]) != d:
            raise ConfigError(f"zero at {z['location']} does not have dimension {d}")
        out.append(ZeroAnnotation(tuple(float(x) for x in z["location"]), int(z["order"])))
    return tuple(out)


def _atoms(items, d):
    out = []
    for a in items:
        if len(a["location"]) != d:
            raise ConfigError(f"atom at {a['location']} does not have dimension {d}")
        out.append(Atom(tuple(float(x) for x in a["location"]), float(a["mass"])))
    return tuple(out)


def load_density(path):
    return density_from_document(read_json(path))


def kernel_from_document(doc):
    validate(doc, KERNEL_SCHEMA, "kernel document")
    if "builtin" in doc:
        try:
            return BUILTIN_KERNELS[doc["builtin"]](**doc.get("params", {}))
        except TypeError as exc:
            raise ConfigError(f"bad parameters for kernel {doc['builtin']!r}: {exc}") from None
    return custom_kernel(doc["expression"], doc["d"], kappa_sq_ft=doc.get("kappa_sq_ft"),
                         isotropic=doc.get("isotropic", False),
                         intensity_scaling=doc.get("intensity_scaling", 1.0))


def load_covariance(path, decay_bound=None):
    """Read a covariance CSV with columns ``m1..md,value``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    try:
        return CovarianceSequence.from_csv(path.read_text(), decay_bound=decay_bound)
    except (ValueError, KeyError, IndexError, InvalidCovariance) as exc:
        raise ConfigError(f"cannot read covariance from {path}: {exc}") from None
