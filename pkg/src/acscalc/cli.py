"""Command-line front end: ``acscalc verify | eval | builtins``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .acs import rho, rhobar, validate
from .calculus import coord_field, dx
from .expr import Evaluator, ExprError
from .nijenhuis import hbar, n_coord, n_squared, weak_squares
from .structures import BUILTINS, SpecError, StructureSpec, builtin, load_spec
from .verify import SuiteConfig, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def resolve_spec(ref: str) -> StructureSpec:
    """A path to a JSON spec file, or the name of a builtin."""
    path = Path(ref)
    if path.is_file():
        return load_spec(path.read_text(encoding="utf-8"))
    if ref in BUILTINS:
        return builtin(ref)
    raise SpecError(f"no spec file or builtin named {ref!r}")


def _finite(x: float) -> float | None:
    x = float(x)
    return x if np.isfinite(x) else None


def build_report(spec: StructureSpec, config: SuiteConfig, timing: bool = False) -> dict:
    start = time.perf_counter()
    vrng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    vpoints = spec.chart.sample(vrng, config.points)
    validation = validate(spec.J, vpoints, config.tol)
    doc: dict = {
        "tool": "acscalc",
        "version": __version__,
        "structure": spec.name,
        "config": {"seed": config.seed, "points": config.points, "degree": config.degree, "tol": config.tol},
        "spec": spec.raw,
        "validation": {
            "samples": validation.samples,
            "max_square_residual": _finite(validation.max_square_residual),
            "max_trace": _finite(validation.max_trace),
            "passed": validation.passed,
        },
    }
    suite_doc = None
    if validation.passed:
        suite = run_suite(spec.J, config, spec.chart, spec.name, spec.integrable)
        comps = n_coord(spec.J).values(Evaluator(vpoints))
        doc["nijenhuis"] = {"max_abs_component": _finite(np.abs(comps).max())}
        suite_doc = suite.to_dict()
    doc["suite"] = suite_doc
    doc["passed"] = bool(validation.passed and suite_doc is not None and suite_doc["passed"])
    if timing:
        doc["timing"] = {"seconds": round(time.perf_counter() - start, 3)}
    return doc


def cmd_verify(args) -> int:
    spec = resolve_spec(args.spec)
    config = SuiteConfig(seed=args.seed, points=args.points, degree=args.degree, tol=args.tol)
    doc = build_report(spec, config, timing=args.timing)
    text = json.dumps(doc, indent=2) + "\n"
    if args.json:
        Path(args.json).write_text(text, encoding="utf-8")
    if not args.quiet and not args.json:
        sys.stdout.write(text)
    if not args.quiet and args.json:
        status = "PASS" if doc["passed"] else "FAIL"
        print(f"{spec.name}: {status} (report written to {args.json})")
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def _fmt(z: complex) -> str:
    sign = "-" if z.imag < 0 or (z.imag == 0 and np.signbit(z.imag)) else "+"
    return f"{z.real:.15g} {sign} {abs(z.imag):.15g}i"


def _index(value: int | None, n: int, flag: str) -> int | None:
    if value is not None and not 1 <= value <= n:
        raise UsageError(f"--{flag} must lie in 1..{n}, got {value}")
    return value


def cmd_eval(args) -> int:
    spec = resolve_spec(args.spec)
    J, n = spec.J, spec.dim
    try:
        point = [float(s) for s in args.at.split(",")]
    except ValueError:
        raise UsageError(f"--at must be {n} comma-separated numbers") from None
    if len(point) != n:
        raise UsageError(f"--at needs {n} coordinates, got {len(point)}")
    if not spec.chart.contains(point):
        raise UsageError(f"point {point} lies outside the box {list(spec.chart.box)}")
    i, k, j = (_index(getattr(args, f), n, f) for f in ("i", "k", "j"))
    ev = Evaluator(np.array([point]))

    def value(e) -> complex:
        return complex(ev(e)[0])

    lines: list[str] = []
    what = args.what
    if what == "N":
        comps = n_coord(J)
        for a in [i] if i else range(1, n + 1):
            for b in [k] if k else range(1, n + 1):
                for r in range(1, n + 1):
                    lines.append(f"N[{a},{b},{r}] = {_fmt(value(comps[a, b, r]))}")
    elif what == "N2":
        if not (i and k and j):
            raise UsageError("--what N2 needs --i, --k and --j")
        V = n_squared(J, coord_field(i, n), coord_field(k, n), coord_field(j, n))
        for r in range(1, n + 1):
            lines.append(f"N2[{i},{k};{j}]^{r} = {_fmt(value(V[r]))}")
    elif what in ("S", "T"):
        ws = weak_squares(J)
        if what == "S":
            for a, s in enumerate(ws.s_i, 1):
                lines.append(f"S[{a}] = {_fmt(value(s))}")
            lines.append(f"S = {_fmt(value(ws.s))}")
        else:
            lines.append(f"T = {_fmt(value(ws.t))}")
    elif what == "hbar":
        comps = n_coord(J)
        for a in [i] if i else range(1, n + 1):
            for b in [k] if k else range(1, n + 1):
                lines.append(f"hbar[{a},{b}] = {_fmt(value(hbar(J, a, b, comps)))}")
    elif what in ("rho", "rhobar"):
        if args.form:
            if args.form not in spec.forms:
                raise UsageError(f"no form named {args.form!r} in the spec file")
            form, label = spec.forms[args.form], args.form
        else:
            kk = k or 1
            form, label = dx(kk, n), f"dx{kk}"
        out = (rho if what == "rho" else rhobar)(J, form)
        for a in range(1, n + 1):
            for b in range(a + 1, n + 1):
                lines.append(f"{what}({label})[{a},{b}] = {_fmt(value(out[a, b]))}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_builtins(args) -> int:
    if args.names:
        print("\n".join(BUILTINS))
    else:
        print(json.dumps(list(BUILTINS.values()), indent=2))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acscalc", description="Nijenhuis tensor calculus and identity checks")
    parser.add_argument("--version", action="version", version=f"acscalc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="validate a structure and run the identity suite")
    v.add_argument("spec", help="spec JSON file or builtin name")
    v.add_argument("--tol", type=float, default=1e-9)
    v.add_argument("--points", type=int, default=50)
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--degree", type=int, default=2, help="degree of random test polynomials")
    v.add_argument("--json", metavar="OUT", help="write the report here instead of stdout")
    v.add_argument("--quiet", action="store_true")
    v.add_argument("--timing", action="store_true", help="add wall-clock timing (breaks byte-identical output)")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("eval", help="evaluate a quantity at a point")
    e.add_argument("spec", help="spec JSON file or builtin name")
    e.add_argument("--what", required=True, choices=["N", "N2", "S", "T", "hbar", "rho", "rhobar"])
    e.add_argument("--at", required=True, help="comma-separated coordinates")
    e.add_argument("--i", type=int)
    e.add_argument("--k", type=int)
    e.add_argument("--j", type=int)
    e.add_argument("--form", help="named 1-form from the spec file (rho/rhobar); default dx^k")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("builtins", help="list builtin structures with their definitions")
    b.add_argument("--names", action="store_true", help="names only")
    b.set_defaults(func=cmd_builtins)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, UsageError, ExprError, ValueError) as exc:
        print(f"acscalc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
