import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from treedtn import cli
from treedtn.errors import ToleranceNotMetError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def body_rows(out):
    return [line for line in out.splitlines() if line and not line.startswith("#")]


def test_counterexample(capsys):
    code, out, err = run(capsys, "counterexample")
    assert code == 0
    assert "u(∅,0)=0, u(∅,2)=1" in err
    rows = body_rows(out)
    assert rows[0] == "label,vertex,value"
    assert '"u(∅,2)",2,1' in rows


def test_lambda_linear_has_zero_gap(capsys):
    code, out, _ = run(capsys, "lambda", "--beta", "0", "--datum", "linear", "--eta", "-1,1",
                       "--branch", "1/3", "--depths", "2..8")
    assert code == 0
    rows = body_rows(out)[1:]
    assert len(rows) == 7
    assert all(float(r.split(",")[3]) == 0 for r in rows)
    assert "# fitted_slope: null" in out


def test_lambda_square_slope(capsys):
    code, out, _ = run(capsys, "lambda", "--beta", "0", "--datum", "square", "--eta", "0,1",
                       "--depths", "2..12", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["summary"]["fitted_slope"] == pytest.approx(data["summary"]["expected_slope"], rel=0.05)


def test_check_passes(capsys):
    code, out, _ = run(capsys, "check")
    assert code == 0
    assert "# all_passed: true" in out


def test_solve_and_trace(capsys):
    code, out, _ = run(capsys, "solve", "--m", "2", "--beta", "1/3", "--depths", "2")
    assert code == 0
    assert "1,1,5/8,0.625,0" in body_rows(out)
    code, out, _ = run(capsys, "trace", "--beta", "0", "--branch", "1/2", "--depths", "0..3")
    assert code == 0
    assert body_rows(out)[1].startswith("0,1/2,0.5,0.5,0.0")


def test_gamma_kernel_growth_walk(capsys):
    code, out, _ = run(capsys, "gamma", "--beta", "0.4", "--datum", "square", "--depths", "4..10")
    assert code == 0 and "# convergent: true" in out
    code, out, _ = run(capsys, "gamma", "--beta", "0.3", "--depths", "2..5")
    assert code == 0 and "# convergent: false" in out
    code, out, _ = run(capsys, "kernel", "--beta", "2/5", "--branch", "0", "--grid", "8")
    assert code == 0 and len(body_rows(out)) == 9
    code, out, _ = run(capsys, "growth", "--beta", "2/3", "--threshold", "100")
    assert code == 0 and "# first_n_exceeding: 7" in out
    code, out, _ = run(capsys, "walk", "--beta", "1/3", "--datum", "square", "--samples", "20000",
                       "--vertex", "1", "--depths", "20")
    assert code == 0 and body_rows(out)[1].endswith("True")


def test_output_is_deterministic(tmp_path):
    outputs = []
    path = tmp_path / "walk.csv"
    for _ in range(2):
        subprocess.run([sys.executable, "-m", "treedtn", "walk", "--samples", "5000", "--seed", "3",
                        "--depths", "15", "--out", str(path)], check=True)
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "trace", "beta": 0.25, "m": 3, "branch": "1/2",
                               "depths": "1..3"}))
    code, out, err = run(capsys, "trace", "--config", str(cfg), "--beta", "1/10")
    assert code == 0
    header = json.loads(out.splitlines()[0].removeprefix("# config: "))
    assert header["beta"] == "1/10" and header["m"] == 3
    code, out, err = run(capsys, "trace", "--config", str(cfg))
    assert "float" in err  # JSON floats are accepted with a warning
    header = json.loads(out.splitlines()[0].removeprefix("# config: "))
    assert F(header["beta"]) == F(1, 4)


def test_exit_code_precondition(capsys):
    code, _, err = run(capsys, "solve", "--beta", "1/2", "--datum", "square")
    assert code == 1 and "NoBoundedSolutionError" in err
    code, _, err = run(capsys, "kernel", "--beta", "1/4", "--m", "2")
    assert code == 1 and "HypothesisError" in err
    code, _, _ = run(capsys, "trace", "--branch", "3/2")
    assert code == 1


def test_exit_code_invariant(capsys):
    code, _, _ = run(capsys, "compare", "--tol", "-1")
    assert code == 2


def test_exit_code_tolerance(capsys, monkeypatch):
    def fail(cfg):
        raise ToleranceNotMetError("budget exhausted", estimate=0.5, error=1e-3)

    monkeypatch.setitem(cli.HANDLERS, "solve", fail)
    code, _, err = run(capsys, "solve")
    assert code == 3 and "budget exhausted" in err


def test_depth_parsing():
    assert cli.parse_depths("2..5") == [2, 3, 4, 5]
    assert cli.parse_depths("2:5") == [2, 3, 4, 5]
    assert cli.parse_depths("3,7") == [3, 7]
    assert cli.parse_depths(9) == [9]
    assert cli.parse_branch("1.0(0.1)", 2).point == F(7, 12)
