"""Structure specifications (JSON) and the builtin catalog."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any

import jsonschema
import numpy as np

from .acs import AcsField, conjugate_standard
from .calculus import Chart, Form, VecField
from .expr import ExprError, parse

__all__ = ["SpecError", "StructureSpec", "SCHEMA", "BUILTINS", "builtin", "builtin_names", "load_spec"]


class SpecError(ValueError):
    """Malformed structure specification; ``where`` locates the problem."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "string"}}}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["name", "dim", "J"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "dim": {"type": "integer", "minimum": 2},
        "description": {"type": "string"},
        "integrable": {"type": ["boolean", "null"]},
        "J": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["matrix"],
                    "additionalProperties": False,
                    "properties": {"matrix": _matrix},
                },
                {
                    "type": "object",
                    "required": ["conjugate"],
                    "additionalProperties": False,
                    "properties": {
                        "conjugate": {
                            "type": "object",
                            "required": ["A", "A_inv"],
                            "additionalProperties": False,
                            "properties": {"A": _matrix, "A_inv": _matrix},
                        }
                    },
                },
            ]
        },
        "box": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        },
        "fields": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "string"}}},
        "forms": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "string"}}},
    },
}


@dataclass
class StructureSpec:
    """Parsed structure: the raw JSON document plus the objects built from it."""

    raw: dict[str, Any]
    J: AcsField
    chart: Chart
    fields: dict[str, VecField] = field(default_factory=dict)
    forms: dict[str, Form] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def dim(self) -> int:
        return self.raw["dim"]

    @property
    def integrable(self) -> bool | None:
        return self.raw.get("integrable")

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "StructureSpec":
        try:
            jsonschema.validate(doc, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise SpecError(exc.message, where) from None
        n = doc["dim"]
        if n % 2:
            raise SpecError(f"dimension must be even, got {n}", "dim")
        box = doc.get("box") or [[-1.0, 1.0]] * n
        if len(box) != n or any(lo >= hi for lo, hi in box):
            raise SpecError(f"box must hold {n} intervals [lo, hi] with lo < hi", "box")
        chart = Chart(n, tuple(tuple(b) for b in box))
        jdoc = doc["J"]
        if "matrix" in jdoc:
            J = AcsField(_matrix_exprs(jdoc["matrix"], n, "J/matrix"))
        else:
            conj = jdoc["conjugate"]
            A = _matrix_exprs(conj["A"], n, "J/conjugate/A")
            A_inv = _matrix_exprs(conj["A_inv"], n, "J/conjugate/A_inv")
            probe = chart.sample(np.random.default_rng(0), 16)
            try:
                J = conjugate_standard(A, A_inv, probe)
            except ValueError as exc:
                raise SpecError(str(exc), "J/conjugate") from None
        fields = {
            name: VecField(_vector_exprs(comps, n, f"fields/{name}"))
            for name, comps in doc.get("fields", {}).items()
        }
        forms = {
            name: Form(n, 1, {(i,): e for i, e in enumerate(_vector_exprs(comps, n, f"forms/{name}"), 1)})
            for name, comps in doc.get("forms", {}).items()
        }
        return cls(copy.deepcopy(doc), J, chart, fields, forms)


def _parse(src: str, n: int, where: str):
    try:
        return parse(src, n)
    except ExprError as exc:
        raise SpecError(f"{exc} in {src!r}", where) from None


def _vector_exprs(items, n: int, where: str):
    if len(items) != n:
        raise SpecError(f"expected {n} expressions, got {len(items)}", where)
    return [_parse(s, n, f"{where}/{i}") for i, s in enumerate(items)]


def _matrix_exprs(rows, n: int, where: str):
    if len(rows) != n:
        raise SpecError(f"expected {n} rows, got {len(rows)}", where)
    return [_vector_exprs(row, n, f"{where}/{r}") for r, row in enumerate(rows)]


def load_spec(text: str) -> StructureSpec:
    """Parse a JSON structure document; JSON syntax errors carry line and column."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    return StructureSpec.from_dict(doc)


# ---------------------------------------------------------------------------
# builtins


def _flat(n: int, name: str) -> dict[str, Any]:
    rows = [["0"] * n for _ in range(n)]
    # row i holds J_i^r: J0 d_{2a-1} = d_{2a}, J0 d_{2a} = -d_{2a-1}
    for a in range(0, n, 2):
        rows[a][a + 1] = "1"
        rows[a + 1][a] = "-1"
    return {
        "name": name,
        "dim": n,
        "description": f"constant standard structure on R^{n}",
        "integrable": True,
        "J": {"matrix": rows},
        "box": [[-1.0, 1.0]] * n,
    }


# phi(x) = (x1, x2 + x1^2, x3 + x1*x2, x4 + x3^2); A = D(phi) is unipotent lower
# triangular, so its inverse is the finite Neumann series.
_PULLBACK4 = {
    "name": "pullback4",
    "dim": 4,
    "description": "standard structure pulled back by phi(x) = (x1, x2 + x1^2, x3 + x1*x2, x4 + x3^2)",
    "integrable": True,
    "J": {
        "conjugate": {
            "A": [
                ["1", "0", "0", "0"],
                ["2*x1", "1", "0", "0"],
                ["x2", "x1", "1", "0"],
                ["0", "0", "2*x3", "1"],
            ],
            "A_inv": [
                ["1", "0", "0", "0"],
                ["-2*x1", "1", "0", "0"],
                ["2*x1^2 - x2", "-x1", "1", "0"],
                ["2*x3*x2 - 4*x3*x1^2", "2*x3*x1", "-2*x3", "1"],
            ],
        }
    },
    "box": [[-0.5, 0.5]] * 4,
}

_TWIST4 = {
    "name": "twist4",
    "dim": 4,
    "description": "standard structure conjugated by A = I + x1*E13 (not integrable)",
    "integrable": False,
    "J": {
        "conjugate": {
            "A": [
                ["1", "0", "x1", "0"],
                ["0", "1", "0", "0"],
                ["0", "0", "1", "0"],
                ["0", "0", "0", "1"],
            ],
            "A_inv": [
                ["1", "0", "-x1", "0"],
                ["0", "1", "0", "0"],
                ["0", "0", "1", "0"],
                ["0", "0", "0", "1"],
            ],
        }
    },
    "box": [[-0.5, 0.5]] * 4,
}

BUILTINS: dict[str, dict[str, Any]] = {
    "flat": _flat(4, "flat"),
    "flat2": _flat(2, "flat2"),
    "flat4": _flat(4, "flat4"),
    "flat6": _flat(6, "flat6"),
    "pullback4": _PULLBACK4,
    "twist4": _TWIST4,
}


def builtin_names() -> list[str]:
    return list(BUILTINS)


def builtin(name: str) -> StructureSpec:
    try:
        doc = BUILTINS[name]
    except KeyError:
        raise SpecError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}") from None
    return StructureSpec.from_dict(copy.deepcopy(doc))
