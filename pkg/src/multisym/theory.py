"""Theory spec files: JSON description of a field theory and its test data."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .charts import BundleSpec, Connection, make_bundle, make_connection
from .errors import MultisymError, ParseError, SchemaError
from .expr import Expr, parse
from .fieldsolve import Grid

_KNOWN = {"name", "m", "N", "lagrangian", "hamiltonian", "connection", "sections", "grid", "initial", "flags"}


@dataclass
class TheorySpec:
    name: str
    bundle: BundleSpec
    lagrangian: Expr | None = None
    hamiltonian: Expr | None = None
    connection: Connection | None = None
    sections: dict = field(default_factory=dict)
    grid: Grid | None = None
    initial: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    source: str = ""

    @property
    def m(self):
        return self.bundle.m

    @property
    def N(self):
        return self.bundle.N


def _require(cond, msg, path):
    if not cond:
        raise SchemaError(msg, path)


def _parse_at(text, chart, path) -> Expr:
    _require(isinstance(text, (str, int, float)) and not isinstance(text, bool), "expected an expression string", path)
    try:
        return parse(str(text), chart)
    except ParseError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def _dim(value, path) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool) and value >= 1, "must be a positive integer", path)
    return value


def spec_from_dict(data: dict, source: str = "") -> TheorySpec:
    _require(isinstance(data, dict), "top level must be an object", "$")
    unknown = sorted(set(data) - _KNOWN)
    _require(not unknown, f"unknown field {unknown[0]!r}" if unknown else "", "$")
    _require("m" in data, "missing required field", "$.m")
    _require("N" in data, "missing required field", "$.N")
    bundle = make_bundle(_dim(data["m"], "$.m"), _dim(data["N"], "$.N"))
    name = data.get("name", Path(source).stem if source else "theory")
    _require(isinstance(name, str), "must be a string", "$.name")
    _require(
        data.get("lagrangian") is not None or data.get("hamiltonian") is not None,
        "at least one of lagrangian/hamiltonian is required",
        "$",
    )
    spec = TheorySpec(name, bundle, source=source)
    if data.get("lagrangian") is not None:
        spec.lagrangian = _parse_at(data["lagrangian"], bundle.chart("J1E"), "$.lagrangian")
    if data.get("hamiltonian") is not None:
        spec.hamiltonian = _parse_at(data["hamiltonian"], bundle.chart("Pi"), "$.hamiltonian")
    if data.get("connection") is not None:
        conn = data["connection"]
        _require(isinstance(conn, list), "must be a list of expression strings", "$.connection")
        n = bundle.m * bundle.N
        _require(len(conn) == n, f"needs {n} components (index nu*N + A)", "$.connection")
        # parse against J1E so velocity symbols are caught by make_connection
        comps = [_parse_at(c, bundle.chart("J1E"), f"$.connection[{i}]") for i, c in enumerate(conn)]
        spec.connection = make_connection(bundle, comps)
    sections = data.get("sections", {})
    _require(isinstance(sections, dict), "must be an object of named sections", "$.sections")
    for sname, comps in sections.items():
        path = f"$.sections.{sname}"
        _require(isinstance(comps, dict), "must map y_A names to expressions", path)
        out = {}
        for a in range(bundle.N):
            key = f"y_{a}"
            _require(key in comps, "missing component", f"{path}.{key}")
            out[key] = _parse_at(comps[key], bundle.base_chart, f"{path}.{key}")
        extra = sorted(set(comps) - set(out))
        _require(not extra, f"unknown component {extra[0]!r}" if extra else "", path)
        spec.sections[sname] = out
    if data.get("grid") is not None:
        g = data["grid"]
        _require(isinstance(g, dict), "must be an object", "$.grid")
        for key in ("bounds", "shape"):
            _require(key in g, "missing required field", f"$.grid.{key}")
        _require(len(g["bounds"]) == bundle.m, f"needs {bundle.m} intervals", "$.grid.bounds")
        _require(len(g["shape"]) == bundle.m, f"needs {bundle.m} sizes", "$.grid.shape")
        try:
            spec.grid = Grid(g["bounds"], g["shape"], g.get("periodic", ()))
        except (TypeError, ValueError, MultisymError) as exc:
            raise SchemaError(str(exc), "$.grid") from None
    if data.get("initial") is not None:
        ini = data["initial"]
        _require(isinstance(ini, dict), "must be an object", "$.initial")
        for key, vals in ini.items():
            path = f"$.initial.{key}"
            _require(key in ("y", "v0", "p0"), "unknown initial field", path)
            _require(isinstance(vals, list) and len(vals) == bundle.N, f"needs {bundle.N} expressions", path)
            spec.initial[key] = [_parse_at(v, bundle.base_chart, f"{path}[{i}]") for i, v in enumerate(vals)]
    flags = data.get("flags", {})
    _require(isinstance(flags, dict), "must be an object", "$.flags")
    spec.flags = dict(flags)
    return spec


def load_spec(path) -> TheorySpec:
    path = Path(path)
    if not path.exists():
        bundled = fixture_path(path.name)
        if bundled is None:
            raise SchemaError(f"no such file: {path}")
        path = bundled
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}", str(path)) from None
    return spec_from_dict(data, str(path))


def fixture_path(name: str):
    """Path of a bundled fixture (``em``, ``em.theory.json`` ...) or None."""
    if not name.endswith(".theory.json"):
        name = f"{name}.theory.json"
    ref = resources.files("multisym") / "fixtures" / name
    return Path(str(ref)) if ref.is_file() else None


def load_fixture(name: str) -> TheorySpec:
    path = fixture_path(name)
    if path is None:
        raise SchemaError(f"no bundled fixture {name!r}")
    return load_spec(path)
