import csv
import textwrap

import pytest

from kslab import __version__
from kslab.cli import dispatch

SIMULATE = """\
version = 1

[grid]
half_length = 10
n_points = 256

[params]
a = 1
eps = {eps}
beta = {beta}

[datum]
kind = gaussian
amplitude = 1
width = 1

[solver]
t_final = 0.5
snapshot_every = 0.25
"""

BURGERS = """\
version = 1

[grid]
half_length = 6
n_points = 1024

[datum]
kind = riemann_step
u_l = 1
u_r = 0
extent = 2.5

[solver]
t_final = 1
snapshot_every = 0.02

[entropy]
pairs = square, kruzhkov_smoothed, compact_bump
k = 0.5
"""

LIMIT = """\
version = 1

[grid]
half_length = 5
n_points = 256

[datum]
kind = riemann_step
u_l = 1
u_r = 0
extent = 2

[solver]
t_final = 0.5
snapshot_every = 0.05
cfl_dispersive = 1.0

[sweep]
eps = 0.4, 0.2, 0.1
window = 0.25, 0.5, -2, 2
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return path


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_params_prints_energy_preserving_tuple(capsys):
    assert dispatch(["params", "--a", "1"]) == 0
    out = capsys.readouterr().out
    assert "2/3" in out and "-1/3" in out and "verified = True" in out


def test_params_roots_and_csv(tmp_path, capsys):
    path = tmp_path / "p.csv"
    assert dispatch(["params", "--a", "1", "--n", "1", "--alpha", "0", "--csv", str(path)]) == 0
    out = capsys.readouterr().out
    assert "X1          = -3" in out and "real solution: False" in out
    table = {(r["group"], r["name"]): r["value"] for r in rows(path)}
    assert float(table[("roots", "X1")]) == -3.0
    assert dispatch(["params", "--a", "1", "--n", "1", "--alpha", "-2"]) == 0
    assert "no real zeros" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["limit", "--config", "missing.txt"], ["params"],
    ["params", "--a", "1", "--alpha", "2"], ["check-estimates", "--run", "nowhere"],
])
def test_usage_errors_exit_two(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert dispatch(argv) == 2


def test_version(capsys):
    assert dispatch(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_simulate_then_check_estimates(tmp_path, capsys):
    cfg = write(tmp_path, "sim.ini", SIMULATE.format(eps=0.0, beta=0.0))
    out = tmp_path / "run"
    assert dispatch(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    inv = rows(out / "invariants.csv")
    assert list(inv[0]) == ["t", "mass", "E", "dissipation_integral", "linf"]
    assert [float(r["t"]) for r in inv] == [0.0, 0.25, 0.5]
    capsys.readouterr()
    assert dispatch(["check-estimates", "--run", str(out)]) == 0
    report = capsys.readouterr().out
    assert "l-2" in report and "PASS" in report and "FAIL" not in report
    est = rows(out / "estimates.csv")
    assert len(est) == 3
    assert (out / "estimates_summary.txt").read_text().startswith("l-2: PASS")


def test_simulate_rejects_bad_configs(tmp_path):
    cfg = write(tmp_path, "bad.ini", SIMULATE.format(eps=0.0, beta=1e-4))
    assert dispatch(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2
    nc = SIMULATE.format(eps=0.1, beta=1e-4).replace("a = 1\n", "a = 1\nb = 0.5\n")
    cfg = write(tmp_path, "nc.ini", nc)
    assert dispatch(["simulate", "--config", str(cfg), "--out", str(tmp_path / "y")]) == 2


def test_output_root_from_environment(tmp_path, monkeypatch):
    cfg = write(tmp_path, "gauss.ini", SIMULATE.format(eps=0.1, beta=1e-4))
    monkeypatch.setenv("KSLAB_OUT", str(tmp_path / "results"))
    assert dispatch(["simulate", "--config", str(cfg)]) == 0
    assert (tmp_path / "results" / "simulate-gauss" / "run.json").is_file()


def test_burgers_writes_entropy_report(tmp_path):
    cfg = write(tmp_path, "b.ini", BURGERS)
    out = tmp_path / "b"
    assert dispatch(["burgers", "--config", str(cfg), "--out", str(out)]) == 0
    report = rows(out / "entropy_report.csv")
    assert list(report[0]) == ["phi_id", "pair_kind", "weak_residual", "entropy_residual",
                               "verdict"]
    assert len(report) == 15
    assert {r["verdict"] for r in report} <= {"PASS", "INFO"}
    assert (out / "snapshot_0050.csv").is_file()


def test_burgers_fail_verdict_exits_one(tmp_path):
    # a negative tolerance turns every zero-residual test into a failure
    cfg = write(tmp_path, "b.ini", BURGERS + "tolerance = -1\n")
    assert dispatch(["burgers", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 1


def test_limit_outputs(tmp_path, capsys):
    cfg = write(tmp_path, "l.ini", LIMIT)
    out = tmp_path / "l"
    code = dispatch(["limit", "--config", str(cfg), "--out", str(out), "--jobs", "2"])
    report = capsys.readouterr().out
    assert code in (0, 1)
    assert ("FAIL" in report) == (code == 1)
    conv = rows(out / "convergence.csv")
    assert [float(r["eps"]) for r in conv] == [0.4, 0.2, 0.1]
    assert all(r["coupling_violated"] == "false" for r in conv)
    orders = rows(out / "orders.csv")
    assert [r["p"] for r in orders] == ["1", "2", "3"]
    assert sorted(p.name for p in out.iterdir() if p.is_dir()) == [
        "run_00_eps_0.4", "run_01_eps_0.2", "run_02_eps_0.1"]
    assert (out / "run_02_eps_0.1" / "steplog.csv").is_file()


def test_limit_coupling_flag(tmp_path, capsys):
    cfg = write(tmp_path, "l.ini", LIMIT.replace("eps = 0.4, 0.2, 0.1", "eps = 0.4, 0.2"))
    out = tmp_path / "l"
    dispatch(["limit", "--config", str(cfg), "--out", str(out), "--coupling-c", "0.5"])
    conv = rows(out / "convergence.csv")
    assert float(conv[0]["beta"]) == 0.5 * 0.4**4
