"""Acceptance criteria for the engine, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line. Run with ``pytest -s``
to see them, or ``python3 tests/test_acceptance.py`` for the bare listing.
"""

from __future__ import annotations

import contextlib
import io
import itertools
import json
import time

import numpy as np

from acscalc import expr as E
from acscalc.calculus import coord_field
from acscalc.cli import main
from acscalc.expr import Evaluator, diff
from acscalc.nijenhuis import n_coord, n_def, weak_squares
from acscalc.structures import BUILTINS, builtin
from acscalc.verify import TIER2, SuiteConfig, run_suite, sample_points

SEED = 42
TIER1_IDS = ["L2.1", "L2.2a", "L2.2b", "L2.2c", "L2.2d", "L4.2"] + [f"T4.1{c}" for c in "abcdef"] + [
    "TRACE",
    "T3.2",
    "TENS",
    "DSUM",
    "NAT",
]


def report(number: int, ok: bool, title: str, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})")


def seeded_points(spec, m: int, stream: int = 0) -> np.ndarray:
    return spec.chart.sample(np.random.default_rng(np.random.SeedSequence([SEED, 100 + stream])), m)


def test_1_route_equivalence():
    start = time.perf_counter()
    worst = 0.0
    for name in ["flat", "pullback4", "twist4"]:
        spec = builtin(name)
        J, n = spec.J, spec.dim
        comps = n_coord(J)
        ev = Evaluator(seeded_points(spec, 100))
        for i, k in itertools.product(range(1, n + 1), repeat=2):
            V = n_def(J, coord_field(i, n), coord_field(k, n))
            for r in range(1, n + 1):
                worst = max(worst, float(np.abs(ev(comps[i, k, r]) - ev(V[r])).max()))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-10 and elapsed < 30
    report(1, ok, "n_coord agrees with the bracket route", f"max abs {worst:.3g}, {elapsed:.1f} s")
    assert ok


def test_2_trace_cancellation():
    worst = 0.0
    for name in BUILTINS:
        spec = builtin(name)
        comps = n_coord(spec.J)
        ev = Evaluator(seeded_points(spec, 100))
        for i in range(1, spec.dim + 1):
            worst = max(worst, float(np.abs(ev(comps.trace(i))).max()))
    ok = worst < 1e-10
    report(2, ok, "sum_k N_ik^k = 0 on all builtins", f"max abs {worst:.3g}")
    assert ok


def test_3_weak_square_s_vanishes():
    spec = builtin("twist4")
    ws = weak_squares(spec.J)
    ev = Evaluator(sample_points(spec.J, spec.chart, SuiteConfig(seed=SEED, points=50)))
    worst_i = max(float(np.abs(ev(s)).max()) for s in ws.s_i)
    worst = float(np.abs(ev(ws.s)).max())
    ok = worst_i < 1e-9 and worst < 1e-9
    report(3, ok, "S_i and S vanish on twist4", f"max |S_i| {worst_i:.3g}, max |S| {worst:.3g}")
    assert ok


def test_4_tier1_suite_on_twist4():
    spec = builtin("twist4")
    config = SuiteConfig(seed=SEED, points=50, degree=2, tol=1e-9)
    start = time.perf_counter()
    suite = run_suite(spec.J, config, spec.chart, spec.name, spec.integrable, ids=TIER1_IDS)
    elapsed = time.perf_counter() - start
    failed = [r.id for r in suite.identities if not r.passed]
    worst = max(r.max_rel_residual for r in suite.identities if r.max_rel_residual is not None)
    ok = not failed and len(suite.identities) == len(TIER1_IDS) and elapsed < 120
    report(4, ok, "tier-1 identities on twist4", f"max rel {worst:.3g}, failed {failed}, {elapsed:.1f} s")
    assert ok


def test_5_integrability_sanity():
    flat, pull = builtin("flat"), builtin("pullback4")
    flat_max = float(np.abs(n_coord(flat.J).values(Evaluator(seeded_points(flat, 100)))).max())
    pull_max = float(np.abs(n_coord(pull.J).values(Evaluator(seeded_points(pull, 100)))).max())
    ok = flat_max == 0.0 and pull_max < 1e-10
    report(5, ok, "N vanishes on integrable builtins", f"flat {flat_max!r}, pullback4 {pull_max:.3g}")
    assert ok


# --- random expressions for the derivative check


def random_expr(rng: np.random.Generator, depth: int, nvars: int) -> E.Expr:
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return E.Var(int(rng.integers(1, nvars + 1)))
        return E.Const(round(float(rng.uniform(-2, 2)), 3))
    op = rng.choice(["add", "sub", "mul", "div", "pow", "sin", "cos", "exp", "neg"])
    a = random_expr(rng, depth - 1, nvars)
    if op in ("add", "sub", "mul"):
        b = random_expr(rng, depth - 1, nvars)
        return {"add": E.Add, "sub": E.Sub, "mul": E.Mul}[op](a, b)
    if op == "div":
        # denominator bounded away from zero on real points
        b = random_expr(rng, depth - 1, nvars)
        return E.Div(a, E.Add(E.Const(1.5), E.IntPow(E.Sin(b), 2)))
    if op == "pow":
        return E.IntPow(a, int(rng.integers(0, 5)))
    if op == "exp":
        return E.Exp(E.Sin(a))
    return {"sin": E.Sin, "cos": E.Cos, "neg": E.Neg}[op](a)


def variables(e: E.Expr) -> set[int]:
    if e.op == "var":
        return {e.val}
    return set().union(*(variables(a) for a in e.args)) if e.args else set()


def test_6_derivative_against_finite_differences():
    rng = np.random.default_rng(np.random.SeedSequence([SEED, 6]))
    h, nvars = 1e-5, 3
    worst = 0.0
    for _ in range(200):
        e = random_expr(rng, 4, nvars)
        while not variables(e):
            e = random_expr(rng, 4, nvars)
        x = rng.uniform(-1, 1, nvars)
        # differentiate along a variable that occurs, so the check is not vacuous
        i = int(rng.choice(sorted(variables(e))))
        step = np.zeros(nvars)
        step[i - 1] = h
        fd = (E.evaluate(e, x + step) - E.evaluate(e, x - step)) / (2 * h)
        sym = E.evaluate(diff(e, i), x)
        worst = max(worst, abs(sym - fd) / max(1.0, abs(sym)))
    ok = worst < 1e-6
    report(6, ok, "symbolic diff vs central differences, 200 expressions", f"max rel {worst:.3g}")
    assert ok


def test_7_tier2_honesty():
    config = SuiteConfig(seed=SEED, points=50)
    twist = builtin("twist4")
    suite = run_suite(twist.J, config, twist.chart, twist.name, twist.integrable)
    expected = {f"T3.1{c}" for c in "abcdef"} | {"T4.3", "C4.4", "TLING"}
    recorded = {r.id for r in suite.identities if r.tier == TIER2 and r.max_rel_residual is not None}
    tier2_fail = any(not r.passed for r in suite.identities if r.tier == TIER2)
    # the overall flag must follow tier-1 alone
    flag_ok = suite.passed == all(r.passed for r in suite.identities if r.tier != TIER2)
    worst = 0.0
    for name in ["flat", "pullback4"]:
        spec = builtin(name)
        rep = run_suite(spec.J, config, spec.chart, spec.name, spec.integrable)
        worst = max(worst, max(r.max_abs_residual for r in rep.identities if r.tier == TIER2))
    ok = expected <= recorded and worst < 1e-12 and flag_ok and suite.passed
    detail = f"twist4 tier-2 failing: {tier2_fail}, overall {suite.passed}, integrable tier-2 max {worst:.3g}"
    report(7, ok, "tier-2 measured, never gating", detail)
    assert ok


def test_8_cli_contract(tmp_path):
    problems = []
    for name in BUILTINS:
        outs, codes = [], []
        for run in range(2):
            path = tmp_path / f"{name}-{run}.json"
            codes.append(main(["verify", name, "--json", str(path), "--quiet"]))
            outs.append(path.read_bytes())
        doc = json.loads(outs[0])
        if outs[0] != outs[1]:
            problems.append(f"{name}: output differs between runs")
        if codes != [0, 0] or not doc["passed"]:
            problems.append(f"{name}: exit {codes}")
    # exit 1: an identity fails (a tolerance no floating-point residual can meet)
    if main(["verify", "twist4", "--tol", "1e-300", "--quiet"]) != 1:
        problems.append("failing tier-1 did not exit 1")
    bad = tmp_path / "identity.json"
    bad.write_text(json.dumps({"name": "id", "dim": 2, "J": {"matrix": [["1", "0"], ["0", "1"]]}}))
    if main(["verify", str(bad), "--quiet"]) != 1:
        problems.append("invalid J did not exit 1")
    broken = tmp_path / "broken.json"
    broken.write_text('{"name": "x",\n "dim": 2,,}')
    schema = tmp_path / "schema.json"
    schema.write_text(json.dumps({"name": "x", "dim": 2, "J": {"matrix": [["0", "x9"], ["-1", "0"]]}}))
    err = io.StringIO()
    with contextlib.redirect_stderr(err):
        if main(["verify", str(broken), "--quiet"]) != 2:
            problems.append("JSON error did not exit 2")
        if main(["verify", str(schema), "--quiet"]) != 2:
            problems.append("bad expression did not exit 2")
    if "line 2" not in err.getvalue() or "J/matrix/0/1" not in err.getvalue():
        problems.append(f"errors lack a location: {err.getvalue()!r}")
    ok = not problems
    report(8, ok, "verify is byte-deterministic and honors exit codes", "; ".join(problems) or "all builtins")
    assert ok


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    failed = 0
    for name, fn in sorted(globals().items()):
        if not name.startswith("test_"):
            continue
        try:
            if "tmp_path" in fn.__code__.co_varnames[: fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as tmp:
                    fn(Path(tmp))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
