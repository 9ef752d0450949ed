import json

import numpy as np
import pytest

from acscalc.cli import main
from acscalc.structures import BUILTINS, builtin, load_spec

from conftest import numeric_n


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_flat(capsys):
    code, out, _ = run(capsys, "verify", "flat")
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert list(doc) == ["tool", "version", "structure", "config", "spec", "validation", "nijenhuis", "suite", "passed"]
    assert doc["nijenhuis"]["max_abs_component"] == 0
    assert doc["spec"] == BUILTINS["flat"]


def test_verify_pullback_reports_small_n(capsys, tmp_path):
    out_path = tmp_path / "r.json"
    code, out, _ = run(capsys, "verify", "pullback4", "--json", str(out_path))
    doc = json.loads(out_path.read_text())
    assert code == 0 and "PASS" in out
    assert doc["nijenhuis"]["max_abs_component"] < 1e-10


def test_verify_twist4_records_tier2(capsys):
    code, out, _ = run(capsys, "verify", "twist4", "--seed", "42", "--points", "50")
    doc = json.loads(out)
    assert code == 0
    tier2 = {r["id"]: r for r in doc["suite"]["identities"] if r["tier"] == "as-stated"}
    assert {"T3.1a", "T4.3", "C4.4", "TLING"} <= set(tier2)
    assert all(r["max_rel_residual"] is not None for r in tier2.values())


def test_verify_quiet_and_timing(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "flat2", "--quiet")
    assert code == 0 and out == ""
    path = tmp_path / "t.json"
    run(capsys, "verify", "flat2", "--timing", "--json", str(path))
    assert "seconds" in json.loads(path.read_text())["timing"]


def test_verify_spec_file(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(BUILTINS["flat2"]))
    code, out, _ = run(capsys, "verify", str(path))
    assert code == 0 and json.loads(out)["structure"] == "flat2"


def test_invalid_structure_exits_1(capsys, tmp_path):
    path = tmp_path / "id.json"
    path.write_text(json.dumps({"name": "id", "dim": 2, "J": {"matrix": [["1", "0"], ["0", "1"]]}}))
    code, out, _ = run(capsys, "verify", str(path))
    doc = json.loads(out)
    assert code == 1 and not doc["validation"]["passed"] and doc["suite"] is None


@pytest.mark.parametrize(
    "text, fragment",
    [('{"name": "x",\n "dim": 2,,}', "line 2"), ('{"name": "x", "dim": 2}', "'J' is a required property")],
)
def test_parse_and_schema_errors_exit_2(capsys, tmp_path, text, fragment):
    path = tmp_path / "bad.json"
    path.write_text(text)
    code, _, err = run(capsys, "verify", str(path))
    assert code == 2 and fragment in err


def test_missing_spec_exits_2(capsys):
    code, _, err = run(capsys, "verify", "no-such-thing")
    assert code == 2 and "no spec file" in err


def test_eval_flat_n_is_zero(capsys):
    code, out, _ = run(capsys, "eval", "flat", "--what", "N", "--at", "0,0,0,0")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 64
    assert all(line.endswith("= 0 + 0i") for line in lines)


def test_eval_twist4_s(capsys):
    code, out, _ = run(capsys, "eval", "twist4", "--what", "S", "--at", "0.2,0.1,-0.3,0.4")
    assert code == 0
    for line in out.splitlines():
        re_part = float(line.split("=")[1].split()[0])
        assert abs(re_part) < 1e-9


@pytest.mark.parametrize(
    "extra, expected",
    [
        (["--what", "N", "--i", "1", "--k", "3"], "N[1,3,1] = 1 + 0i"),
        (["--what", "N2", "--i", "1", "--k", "3", "--j", "2"], "N2[1,3;2]^1"),
        (["--what", "hbar", "--i", "1", "--k", "3"], "hbar[1,3] = 0 + 0i"),
        (["--what", "T"], "T = "),
        (["--what", "rho", "--k", "3"], "rho(dx3)[1,2]"),
        (["--what", "rhobar"], "rhobar(dx1)[3,4]"),
    ],
)
def test_eval_quantities(capsys, extra, expected):
    code, out, _ = run(capsys, "eval", "twist4", "--at", "0.2,0.1,-0.3,0.4", *extra)
    assert code == 0 and expected in out


def test_eval_named_form(capsys, tmp_path):
    doc = dict(BUILTINS["twist4"], forms={"w": ["x3", "0", "1", "0"]})
    path = tmp_path / "w.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "eval", str(path), "--what", "rho", "--form", "w", "--at", "0,0,0,0")
    assert code == 0 and "rho(w)[1,2]" in out


def test_eval_prints_fifteen_digits(capsys):
    # rho(dx1)[3,4] = i x1 / 8 on twist4
    _, out, _ = run(capsys, "eval", "twist4", "--what", "rho", "--k", "1", "--at", "0.3333333333333333,0,0,0")
    assert out.splitlines()[-1] == "rho(dx1)[3,4] = 0 + 0.0416666666666667i"


@pytest.mark.parametrize(
    "extra",
    [
        ["--what", "N", "--at", "1,1,1,1"],
        ["--what", "N", "--at", "0,0,0"],
        ["--what", "N", "--at", "0,a,0,0"],
        ["--what", "N", "--at", "0,0,0,0", "--i", "5"],
        ["--what", "N2", "--at", "0,0,0,0", "--i", "1"],
        ["--what", "rho", "--at", "0,0,0,0", "--form", "nope"],
    ],
)
def test_eval_errors_exit_2(capsys, extra):
    code, _, err = run(capsys, "eval", "twist4", *extra)
    assert code == 2 and err.startswith("acscalc: error:")


def test_builtins_listing(capsys):
    code, out, _ = run(capsys, "builtins", "--names")
    assert code == 0 and "twist4" in out.split()
    code, out, _ = run(capsys, "builtins")
    assert [d["name"] for d in json.loads(out)] == list(BUILTINS)


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "acscalc", "builtins", "--names"], capture_output=True, text=True)
    assert proc.returncode == 0 and "flat" in proc.stdout


def _complex(line: str) -> complex:
    re_part, sign, im_part = line.split("=")[1].split()
    return complex(float(re_part), float(im_part[:-1]) * (1 if sign == "+" else -1))


def test_eval_n_matches_finite_difference_oracle(capsys):
    spec = builtin("twist4")
    x = spec.chart.sample(np.random.default_rng(42), 1)[0]
    at = ",".join(repr(float(v)) for v in x)
    for i, k in [(1, 3), (2, 3), (1, 4)]:
        _, out, _ = run(capsys, "eval", "twist4", "--what", "N", "--i", str(i), "--k", str(k), "--at", at)
        got = np.array([_complex(line) for line in out.splitlines()])
        oracle = numeric_n(spec.J, i, k, x)
        assert np.abs(got - oracle).max() / (1 + np.abs(oracle).max()) < 1e-6


def test_report_spec_round_trips(capsys):
    _, out, _ = run(capsys, "verify", "flat2")
    echoed = json.loads(out)["spec"]
    again = load_spec(json.dumps(echoed))
    assert again.raw == echoed == BUILTINS["flat2"]
