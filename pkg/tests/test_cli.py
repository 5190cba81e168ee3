import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from conformal_blocks import blocks as bl
from conformal_blocks import cli
from conformal_blocks.errors import OracleNotConverged

DATA = Path(__file__).parent / "data"
P1 = str(DATA / "p1.json")


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def write_params(tmp_path, **over):
    d = json.loads(Path(P1).read_text())
    d.update(over)
    path = tmp_path / "params.json"
    path.write_text(json.dumps(d))
    return str(path)


def test_parse_complex():
    assert cli.parse_complex("0.4+0.3i") == 0.4 + 0.3j
    assert cli.parse_complex("-2") == -2
    assert cli.parse_complex("1e-3i") == 1e-3j
    assert cli.parse_complex(" -0.5 + 0.2j ") == -0.5 + 0.2j


def test_validate_fixture():
    code, out, _ = run("validate", P1)
    rep = json.loads(out)
    assert code == 0 and rep["condition_report"]["ok"]
    assert rep["request"]["seed"] == 0


def test_eval_at_zero_is_lambda0():
    code, out, _ = run("eval", P1, "--z", "0")
    rep = json.loads(out)
    ps = bl.ParameterSet.from_dict(json.loads(Path(P1).read_text()))
    lam0 = bl.lambda_coeffs(ps).coeffs[0]
    assert code == 0
    assert rep["result"]["method"] == "closed-form"
    assert complex(*rep["result"]["value"]) == lam0


def test_json_round_trips_bit_for_bit():
    code, out, _ = run("eval", P1, "--z", "0.4+0.3i")
    rep = json.loads(out)
    v = bl.evaluate(bl.ParameterSet.from_dict(json.loads(Path(P1).read_text())), 0.4 + 0.3j).value
    assert rep["result"]["value"] == [v.real, v.imag]
    assert json.loads(json.dumps(rep)) == rep


def test_coeffs_table():
    code, out, _ = run("coeffs", P1, "--basis", "large_z")
    rep = json.loads(out)
    assert code == 0 and rep["basis"] == "LargeZ_W"
    assert [r["j"] for r in rep["coefficients"]] == [0, 1]
    assert all(r["method"] == "closed-form" and "abs_err" in r for r in rep["coefficients"])


def test_verify_ip1():
    code, out, _ = run("verify", P1, "--kind", "ip1", "--z", "0.4+0.3i")
    rep = json.loads(out)
    assert code == 0 and rep["pass"]
    assert rep["oracle"]["method"] == "oracle" and rep["closed_form"]["method"] == "closed-form"
    assert rep["difference"] <= rep["allowed"]


def test_verify_mc_reports_seed():
    code, out, _ = run("verify", P1, "--kind", "ip1", "--z", "-0.5+0.2i", "--mc",
                       "--mc-budget", "200000", "--seed", "3")
    rep = json.loads(out)
    assert rep["oracle"]["engine"] == "MC" and rep["oracle"]["seed"] == 3
    assert code == (0 if rep["pass"] else 1)


def test_fourier_command():
    code, out, _ = run("fourier", "--gamma", "0.4", "--n", "0", "--q", "1")
    rep = json.loads(out)
    ref = math.sin(0.4 * math.pi) * math.gamma(0.4) ** 2
    assert code == 0 and abs(rep["closed_form"]["value"][0] - ref) < 1e-12 * ref
    code, _, err = run("fourier", "--kind", "theorem2", "--q", "4")
    assert code == 2 and json.loads(err)["field"] == "v1"


def test_grid_csv(monkeypatch):
    monkeypatch.setenv("CONFORMAL_BLOCKS_THREADS", "3")
    # the grid crosses |z| = 1 at z = 1, where neither series applies
    code, out, _ = run("grid", P1, "--center", "0.5", "--radius", "0.5", "--counts", "3", "2",
                       "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["re(z)", "im(z)", "re(I)", "im(I)", "abs_err", "method"]
    body = rows[1:]
    assert len(body) == 6
    zs = [complex(float(r[0]), float(r[1])) for r in body]
    assert zs == [complex(x, y) for y in (-0.5, 0.5) for x in (0.0, 0.5, 1.0)]
    for r in body:
        if math.isnan(float(r[2])):
            assert float(r[4]) == math.inf and "error" in r[5]
        else:
            assert r[5] == "closed-form" and math.isfinite(float(r[4]))
    # ordering and values do not depend on the worker count
    monkeypatch.setenv("CONFORMAL_BLOCKS_THREADS", "1")
    _, out1, _ = run("grid", P1, "--center", "0.5", "--radius", "0.5", "--counts", "3", "2",
                     "--format", "csv")
    assert out1 == out


def test_grid_failing_point_is_flagged():
    code, out, _ = run("grid", P1, "--center", "1", "--radius", "0", "--counts", "1", "1",
                       "--format", "csv")
    row = list(csv.reader(io.StringIO(out)))[1]
    assert code == 0 and math.isnan(float(row[2])) and float(row[4]) == math.inf
    assert row[5].startswith("closed-form:error:")


def test_grid_counts_must_be_positive():
    code, _, err = run("grid", P1, "--radius", "0.1", "--counts", "0", "2")
    assert code == 2 and json.loads(err)["field"] == "counts"


def test_bad_threads_env(monkeypatch):
    monkeypatch.setenv("CONFORMAL_BLOCKS_THREADS", "0")
    code, _, err = run("grid", P1, "--radius", "0.1", "--counts", "2", "2")
    assert code == 2 and "CONFORMAL_BLOCKS_THREADS" in json.loads(err)["message"]


def test_condition_c_violation_names_clause(tmp_path):
    path = write_params(tmp_path, b=[[1.3, 0.0]], b_t=[[0.3, 0.0]])
    code, _, err = run("validate", path)
    diag = json.loads(err)
    assert code == 2 and diag["error"] == "ConditionCViolation"
    assert {v["clause"] for v in diag["violations"]} == {"c"}


def test_bad_field_names_field(tmp_path):
    code, _, err = run("eval", write_params(tmp_path, a0="x"), "--z", "0.1")
    assert code == 2 and json.loads(err)["field"] == "a0"
    d = json.loads(Path(P1).read_text())
    del d["b_t"]
    (tmp_path / "missing.json").write_text(json.dumps(d))
    code, _, err = run("eval", str(tmp_path / "missing.json"), "--z", "0.1")
    assert code == 2 and json.loads(err)["field"] == "b_t"
    code, _, err = run("eval", str(tmp_path / "nope.json"), "--z", "0.1")
    assert code == 2 and json.loads(err)["field"] == "params_file"
    code, _, err = run("eval", P1, "--z", "abc")
    assert code == 2 and json.loads(err)["field"] == "z"


def test_numeric_failure_exit_code(monkeypatch):
    def boom(*a, **k):
        raise OracleNotConverged("no convergence")
    monkeypatch.setattr(cli.blocks, "evaluate", boom)
    code, _, err = run("eval", P1, "--z", "0.1")
    assert code == 1 and json.loads(err)["error"] == "OracleNotConverged"


def test_argparse_errors_are_exit_2():
    code, _, _ = run("eval", P1)          # --z missing
    assert code == 2


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "conformal_blocks.cli", "validate", P1],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["condition_report"]["ok"]
