import io
import json
import subprocess
import sys

import pytest

from seppoisson.cli import main


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def test_verify_toda():
    code, text = run("verify", "--model", "toda", "--param", "N=3", "--seed", "7")
    assert code == 0
    assert "result: PASS" in text


def test_casimirs_kermack_mckendric():
    code, text = run("casimirs", "--model", "kermack_mckendric")
    assert code == 0
    assert "C_1 = 1*ln(x1) + 1*x3" in text


def test_casimirs_games_empty():
    code, text = run("casimirs", "--model", "two_by_two_game")
    assert code == 0
    assert "Casimirs: 0" in text


def test_darboux_lv():
    code, text = run("darboux", "--model", "lotka_volterra")
    assert code == 0
    assert "y1 = ln(x1)" in text


@pytest.fixture
def field_file(tmp_path):
    p = tmp_path / "field.json"
    p.write_text(json.dumps({"dimension": 3, "entries": {"1,2": "x3", "1,3": "x2", "2,3": "x3"}}))
    return str(p)


def test_negative_control(field_file):
    code, text = run("verify", "--file", field_file, "--x0", "1,2,3")
    assert code == 1
    assert "result: FAIL" in text


def test_non_skew_file_exits_1(tmp_path, capsys):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({
        "dimension": 2,
        "matrix": [["0", "1"], ["1", "0"]],
        "charts": [{"family": "power", "k": 1}] * 2,
    }))
    code, _ = run("darboux", "--file", str(p))
    assert code == 1
    assert "(1,2)" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert run("verify")[0] == 2
    assert run("verify", "--model", "kepler")[0] == 2
    assert run("verify", "--model", "toda", "--param", "N")[0] == 2
    assert run("simulate", "--model", "toda", "--dt", "-1")[0] == 2
    assert run("verify", "--file", str(tmp_path / "nope.json"))[0] == 2
    assert run("simulate", "--model", "toda", "--x0", "1,2")[0] == 2


def test_field_only_for_verify(field_file):
    assert run("casimirs", "--file", field_file)[0] == 2


def test_simulate_outside_domain():
    assert run("simulate", "--model", "lotka_volterra", "--x0", "1,-1,1", "--t-end", "0.1")[0] == 1


def test_simulate_csv(tmp_path):
    out = tmp_path / "traj.csv"
    code, text = run("simulate", "--model", "kermack_mckendric", "--t-end", "0.01", "--out", str(out))
    assert code == 0
    assert out.read_text().splitlines()[0] == "t,x1,x2,x3,H,C_1"
    assert "C_1" in text


def test_simulate_consistency():
    code, text = run("simulate", "--model", "two_by_two_game", "--t-end", "0.2", "--consistency")
    assert code == 0
    assert "darboux consistency" in text


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--model", "relativistic_toda", "--seed", "3", "--samples", "20"],
        ["casimirs", "--model", "toda", "--param", "N=4", "--seed", "5"],
        ["darboux", "--model", "circle_map", "--seed", "2"],
        ["simulate", "--model", "toda", "--t-end", "0.5"],
        ["models"],
    ],
)
def test_deterministic(argv):
    assert run(*argv) == run(*argv)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "seppoisson", "models"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "toda" in proc.stdout
