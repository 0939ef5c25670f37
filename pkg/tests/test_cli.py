import csv
import io
import json

import pytest
from click.testing import CliRunner

from nlsnf.cli import cli


def _run(*args):
    return CliRunner().invoke(cli, list(args))


def test_verify_vanishing_examples():
    r = _run("verify-vanishing", "--d", "2", "--box", "8", "--L", "4")
    assert r.exit_code == 0
    rep = json.loads(r.output)
    assert rep["passed"] and rep["constrained_points"] > 0 and rep["config"]["L"] == 4
    r = _run("verify-vanishing", "--d", "2", "--box", "0")
    assert r.exit_code == 0 and json.loads(r.output)["vacuous"]
    assert _run("verify-vanishing", "--d", "9").exit_code == 1
    assert _run("verify-vanishing", "--nope", "1").exit_code == 1
    assert _run("no-such-command").exit_code == 1


def test_verify_vanishing_sampled():
    r = _run("verify-vanishing", "--d", "3", "--samples", "20", "--seed", "4")
    assert r.exit_code == 0 and json.loads(r.output)["mode"] == "sampled"


def _csv(text):
    return list(csv.reader(io.StringIO(text)))


def test_count_cubic_table(tmp_path):
    rep = tmp_path / "rep.json"
    r = _run("count", "--report", str(rep))
    assert r.exit_code == 0
    rows = _csv(r.output)
    assert rows[0] == ["mu", "mu2", "closed_form", "brute_force", "agree"]
    assert len(rows) == 1 + 41 * 41
    assert all(row[-1] == "True" for row in rows[1:])
    zero = next(row for row in rows[1:] if row[0] == "0" and row[1] == "0")
    assert zero[2] == "0"
    assert json.loads(rep.read_text())["config"]["command"] == "count"


def test_count_empty_range():
    r = _run("count", "--mu-min", "1", "--mu-max", "0")
    assert r.exit_code == 0
    assert r.output == "mu,mu2,closed_form,brute_force,agree\n"


def test_count_other_tables():
    r = _run("count", "--table", "divisor", "--n-max", "30")
    rows = _csv(r.output)
    assert r.exit_code == 0 and rows[12][:2] == ["12", "6"]
    r = _run("count", "--table", "constrained", "--tree", "1", "--box", "3", "--mu-min", "1", "--mu-max", "6")
    rows = _csv(r.output)
    assert r.exit_code == 0 and rows[0][0] == "tree" and all(row[-1] == "True" for row in rows[1:])
    assert _run("count", "--table", "constrained", "--tree", "7").exit_code == 1


def test_coeff_table():
    r = _run("coeff", "--d", "2", "--box", "1")
    rows = _csv(r.output)
    assert r.exit_code == 0
    assert rows[0] == ["entries", "K", "recurrence", "trees", "two_pi_power", "killed", "agree"]
    assert len(rows) > 1 and all(row[-1] == "True" for row in rows[1:])
    r = _run("coeff", "--d", "3", "--box", "1", "--kind", "G", "--no-resonant")
    assert r.exit_code == 0


def test_chains_command():
    for d in ("1", "2", "3"):
        r = _run("chains", "--d", d, "--points", "20")
        assert r.exit_code == 0, r.output
        assert json.loads(r.output)["passed"]


def test_scaling_command_flags_slope(tmp_path):
    r = _run("scaling", "--Ls", "2,4", "--slack", "100")
    assert r.exit_code == 0 and _csv(r.output)[0] == ["L", "sum_value", "bound_exponent", "fitted_slope"]
    r = _run("scaling", "--Ls", "2,4", "--slack", "0")
    assert r.exit_code == 2


def test_simulate_eps_zero(tmp_path):
    traj = tmp_path / "traj.csv"
    r = _run("simulate", "--Ls", "4", "--N", "3", "--eps", "0", "--t-max", "20", "--trajectory", str(traj))
    assert r.exit_code == 0, r.output
    rep = json.loads(r.output)
    assert rep["runs"][0]["sup_error_stated"] < 1e-10 and rep["runs"][0]["T_R"] is None
    rows = _csv(traj.read_text())
    assert rows[0] == ["L", "eps", "t", "K", "re_u", "im_u"] and len(rows) > 7


def test_simulate_needs_t_max_for_eps_zero():
    assert _run("simulate", "--eps", "0").exit_code == 1


def test_simulate_large_step_exit_3():
    r = _run("simulate", "--Ls", "4", "--N", "8", "--eps", "0.5", "--dt", "5", "--t-max", "100")
    assert r.exit_code == 3
    rep = json.loads(r.stdout)
    assert rep["status"] == "numerical_failure" and rep["diagnostics"]["mass_drift"] > 0


def test_config_file_and_determinism(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[chains]\nd = 2\npoints = 15\nseed = 9\n")
    out = tmp_path / "a.json"
    # the report embeds the resolved config, output path included
    assert _run("chains", "--config", str(ini), "--output", str(out)).exit_code == 0
    rep = json.loads(out.read_text())
    assert rep["config"]["seed"] == 9 and rep["config"]["output"] == str(out)
    a = _run("chains", "--config", str(ini))
    b = _run("chains", "--config", str(ini))
    assert a.stdout_bytes == b.stdout_bytes
    s1 = _run("simulate", "--Ls", "4", "--N", "3", "--eps", "0.6,0.3", "--t-max", "30")
    s2 = _run("simulate", "--Ls", "4", "--N", "3", "--eps", "0.6,0.3", "--t-max", "30")
    assert s1.stdout_bytes == s2.stdout_bytes


@pytest.mark.parametrize("cmd", ["verify-vanishing", "count", "coeff", "chains", "scaling", "simulate"])
def test_help(cmd):
    r = _run(cmd, "--help")
    assert r.exit_code == 0 and "--config" in r.output
