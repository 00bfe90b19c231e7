import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hthk.cli import main, trajectory_csv, write_atomic
from hthk.scenario import ScenarioError, dump_scenario, load_scenario, parse_scenario
from hthk.simulator import Mode

ROOT = Path(__file__).resolve().parents[1]
SCEN = ROOT / "scenarios"


def test_agents17_file_loads():
    sc = load_scenario(SCEN / "agents17.scenario")
    assert sc.n == 17 and sc.r[0] == 0.5 and sc.options.tie_tol == 0.0


def test_scalar_bound_broadcasts():
    sc = parse_scenario("x0 = 1 2 3 4 5\nr = 0.3\n")
    np.testing.assert_array_equal(sc.r, [0.3] * 5)


def test_repeat_token():
    sc = load_scenario(SCEN / "agents206.scenario")
    assert sc.n == 206 and sc.options.mode is Mode.FROZEN
    assert list(sc.r[:6]) == [0.01] * 5 + [1.9254]


@pytest.mark.parametrize("text,fragment", [
    ("x0 = 1 2\nr = 0 1\n", "bounds must be strictly positive"),
    ("x0 = 1 2\nr = 1 2 3\n", ":2: field 'r'"),
    ("x0 = 1 two\nr = 1\n", ":1: field 'x0': not a number"),
    ("x0 = 1\nr = 1\nbogus = 3\n", ":3: unknown field 'bogus'"),
    ("x0 = 1\nr = 1\nx0 = 2\n", ":3: field 'x0' given twice"),
    ("x0 = 1\n", "missing required field 'r'"),
    ("x0 = 1\nr = 1\nmode = sideways\n", "mode must be"),
    ("x0 = 1\nr = 1\nmax_steps = 0\n", "max_steps must be >= 1"),
    ("x0 = 1\nr = 1\nconvergence_tol = 0\n", "convergence_tol must be > 0"),
    ("n = 3\nx0 = 1\nr = 1\n", "n does not match"),
    ("x0 = 1*0\nr = 1\n", "repeat count must be positive"),
    ("x0 = 1 nan\nr = 1\n", "finite"),
    ("just words\n", "expected 'key = value'"),
])
def test_scenario_errors(text, fragment):
    with pytest.raises(ScenarioError, match=fragment.replace("*", r"\*")):
        parse_scenario(text)


def test_comments_and_blank_lines():
    sc = parse_scenario("# header\n\nx0 = 1 2  # trailing\nr = 1\n")
    assert sc.n == 2


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=8),
       st.floats(1e-6, 10), st.sampled_from(["free", "frozen"]), st.floats(0, 1e-6))
def test_round_trip_idempotent(x, r, mode, tie):
    text = f"x0 = {' '.join(repr(v) for v in x)}\nr = {r!r}\nmode = {mode}\ntie_tol = {tie!r}\n"
    once = dump_scenario(parse_scenario(text))
    twice = dump_scenario(parse_scenario(once))
    assert once == twice
    sc = parse_scenario(once)
    assert list(sc.x0) == x and sc.options.tie_tol == tie


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_simulate_and_exports(tmp_path, capsys):
    code, out, err = _run(["simulate", str(SCEN / "agents3.scenario"), "--out", str(tmp_path)], capsys)
    assert code == 0 and "simulate:" in err
    rep = json.loads(out)["report"]
    assert rep["tau_candidate"] == 0
    rows = list(csv.reader(open(tmp_path / "trajectory.csv")))
    assert rows[0] == ["t", "x_1", "x_2", "x_3"]
    assert len(rows) - 1 == rep["steps_run"] + 1
    assert rows[1][2] == "0.59999999999999998"
    assert json.loads((tmp_path / "report.json").read_text()) == json.loads(out)
    assert (tmp_path / "trajectory.svg").read_text().startswith("<svg")
    edges = (tmp_path / "digraph_initial.txt").read_text()
    assert "2 -> 1" in edges and "# 2 OpenMinded 2" in edges
    assert not [p for p in tmp_path.iterdir() if p.name.endswith(".tmp")]


def test_cli_fvct_and_leaders(capsys):
    code, out, _ = _run(["fvct", str(SCEN / "agents3.scenario")], capsys)
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["result"]["fvct"], [0, 0.5, 1], atol=1e-12)
    code, out, _ = _run(["leaders", str(SCEN / "agents206.scenario")], capsys)
    rho = sorted(o["rho"] for o in json.loads(out)["report"]["open_sccs"])
    assert code == 0 and len(rho) == 2
    assert abs(rho[0] - 0.3333) <= 1e-3 and abs(rho[1] - 0.9804) <= 1e-3


def test_cli_classify_at_step(capsys):
    code, out, _ = _run(["classify", str(SCEN / "agents17.scenario"), "--at-step", "200"], capsys)
    assert code == 0 and json.loads(out)["at_step"] == 200


def test_cli_condition_false_is_not_an_error(capsys):
    code, out, _ = _run(["check-thm2", str(SCEN / "agents206.scenario")], capsys)
    assert code == 0 and json.loads(out)["check"]["cond"] == [True, True, True, True, False]


def test_cli_thm1_needs_equilibrium(tmp_path, capsys):
    code, _, err = _run(["check-thm1", str(SCEN / "agents3.scenario")], capsys)
    assert code == 1 and "equilibrium" in err
    p = tmp_path / "eq.scenario"
    p.write_text("x0 = 0 0.5 1\nz = 0 0.5 1\nr = 0.4 1 0.25\n")
    code, out, _ = _run(["check-thm1", str(p), "--horizon", "20"], capsys)
    assert code == 0 and json.loads(out)["check"]["conclusions_verified"]


def test_cli_thm3(capsys):
    code, out, _ = _run(["check-thm3", str(SCEN / "agents3.scenario"), "--horizon", "100"], capsys)
    assert code == 0 and json.loads(out)["check"]["k_limits"][0]["achieved"]


def test_cli_exit_codes(tmp_path, capsys):
    assert _run([], capsys)[0] == 2
    assert _run(["nope"], capsys)[0] == 2
    assert _run(["simulate", str(SCEN / "agents17.scenario"), "--mode", "x"], capsys)[0] == 2
    assert _run(["simulate", str(tmp_path / "missing")], capsys)[0] == 1
    bad = tmp_path / "bad.scenario"
    bad.write_text("x0 = 1 2\nr = 1 0\n")
    code, _, err = _run(["simulate", str(bad)], capsys)
    assert code == 1 and "bounds must be strictly positive" in err
    assert _run(["simulate", str(SCEN / "agents17.scenario"), "--tol", "0"], capsys)[0] == 1


def test_cli_flag_overrides(capsys):
    code, out, _ = _run(["simulate", str(SCEN / "agents17.scenario"), "--tie-tol", "1e-12",
                         "--window", "50", "--max-steps", "1000"], capsys)
    d = json.loads(out)
    assert code == 0 and d["stability_window"] == 50 and d["report"]["tau_candidate"] == 115


def test_fuzz_reproducible(capsys):
    runs = []
    for workers in ("1", "2"):
        code, out, _ = _run(["fuzz", "--count", "12", "--seed", "5", "--workers", workers], capsys)
        assert code == 0
        runs.append(json.loads(out)["summary"])
    assert runs[0] == runs[1]
    code, out, _ = _run(["fuzz", "--count", "12", "--seed", "6"], capsys)
    assert json.loads(out)["summary"] != runs[0]
    assert runs[0]["violations"] == []


def test_csv_row_count_long_run():
    from hthk import OpinionState
    s = OpinionState([0, 0.6, 1], [0.5, 1, 0.25])
    text = trajectory_csv(s, 5000, Mode.FREE)
    assert len(text.strip().splitlines()) == 1 + 5001


def test_write_atomic_replaces(tmp_path):
    p = tmp_path / "sub" / "f.txt"
    write_atomic(p, "a")
    write_atomic(p, "b")
    assert p.read_text() == "b" and os.listdir(p.parent) == ["f.txt"]


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "hthk.cli", "fvct", str(SCEN / "agents3.scenario")],
                         capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["command"] == "fvct"
