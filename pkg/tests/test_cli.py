import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from oracles import exponent_scan
from qdichotomy import cli
from qdichotomy.divergences import sandwiched
from qdichotomy.ensembles import random_density
from qdichotomy.statefile import load_channel, load_state, save_state
from qdichotomy.verify import MUTANTS, run_suite


@pytest.fixture
def states(tmp_path):
    paths = {}
    for name, m in {"p": np.diag([0.9, 0.1]), "s": np.diag([0.5, 0.5]),
                    "r": random_density(3, seed=4).matrix, "q": random_density(3, seed=5).matrix}.items():
        paths[name] = str(tmp_path / f"{name}.json")
        save_state(paths[name], m)
    return paths


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def pairs(st, first=("p", "s"), second=("p", "s")):
    return ["--rho1", st[first[0]], "--sigma1", st[first[1]], "--rho2", st[second[0]], "--sigma2", st[second[1]]]


def test_div_of_state_with_itself_prints_zero(capsys, states):
    code, out, _ = run(capsys, "div", "--kind", "sandwiched", "--alpha", 0.5, "--rho", states["r"], "--sigma", states["r"])
    assert code == 0 and out.strip() == "0"


def test_div_formats(capsys, states):
    code, out, _ = run(capsys, "div", "--kind", "umegaki", "--rho", states["p"], "--sigma", states["s"])
    assert out.strip() == "0.531004406411"
    _, out, _ = run(capsys, "div", "--kind", "petz", "--alpha", 2, "--rho", states["p"], "--sigma", states["s"],
                    "--format", "json")
    assert json.loads(out)["value"] == pytest.approx(0.713695815, abs=1e-9)
    _, out, _ = run(capsys, "div", "--kind", "fidelity", "--rho", states["p"], "--sigma", states["s"], "--format", "csv")
    assert out.splitlines()[0] == "value,kind,order"


def test_round_trip_preserves_twelve_digits(capsys, states, tmp_path):
    copy = str(tmp_path / "copy.json")
    save_state(copy, load_state(states["r"]))
    outs = [run(capsys, "div", "--kind", "sandwiched", "--alpha", 0.7, "--rho", path, "--sigma", states["q"])[1]
            for path in (states["r"], copy)]
    assert outs[0] == outs[1]
    assert float(outs[0]) == pytest.approx(sandwiched(0.7, load_state(states["r"]), load_state(states["q"])), rel=1e-11)


def test_exponent_at_rate_one(capsys, states):
    code, out, _ = run(capsys, "exponent", *pairs(states), "--r", 1)
    lines = dict(line.split() for line in out.splitlines())
    assert code == 0 and lines["exponent"] == "0" and lines["rate_threshold"] == "1"


def test_sweep_matches_scan(capsys, states):
    code, out, _ = run(capsys, "sweep", *pairs(states), "--r-start", 1, "--r-stop", 3, "--r-count", 21)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 21
    rs = [float(row["r"]) for row in rows]
    values = [float(row["exponent"]) for row in rows]
    assert rs == sorted(set(rs))
    assert values[0] == 0.0
    assert all(b >= a for a, b in zip(values, values[1:]))
    for r, v in zip(rs[::5], values[::5]):
        assert v == pytest.approx(exponent_scan([.9, .1], [.5, .5], [.9, .1], [.5, .5], r, points=200_001)[0], abs=1e-6)


def test_finite_n_table_and_channel_export(capsys, states, tmp_path):
    path = tmp_path / "channel.json"
    code, out, _ = run(capsys, "finite-n", *pairs(states), "--n-max", 3, "--r", 2, "--channel-out", path)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == cli.FINITE_HEADER
    assert [row[:2] for row in rows[1:]] == [["1", "2"], ["2", "4"], ["3", "6"]]
    assert float(rows[1][4]) == pytest.approx(0.857659, abs=1e-6)
    data = json.loads(path.read_text())
    assert data["n"] == 3 and data["m"] == 6 and data["representation"] == "types"
    assert load_channel(path).dim_in == 4


def test_mmax(capsys, states):
    code, out, _ = run(capsys, "mmax", *pairs(states), "--n", 3, "--eps", 0)
    assert code == 0 and int(out) >= 3


def test_verify_command(capsys):
    code, out, _ = run(capsys, "verify", "--trials", 10, "--dims", "2", "--format", "json")
    assert code == 0 and json.loads(out)["passed"]


def test_verify_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "run_suite", lambda seed, trials, dims, tol: run_suite(seed, trials, dims, tol, checks=MUTANTS))
    code, out, _ = run(capsys, "verify", "--trials", 10, "--dims", "2")
    assert code == 3 and "FAIL" in out


@pytest.mark.parametrize("argv,flag", [
    (["div", "--kind", "petz", "--alpha", "-1"], "--alpha"),
    (["div", "--kind", "petz"], "--alpha"),
    (["sweep", "--r-start", "2", "--r-stop", "1"], "--r-stop"),
    (["sweep", "--r-start", "1", "--r-stop", "2", "--r-count", "0"], "--r-count"),
    (["mmax", "--n", "2", "--eps", "2"], ""),
    (["verify", "--dims", "2,9"], "--dims"),
])
def test_validation_errors_exit_one(capsys, states, argv, flag):
    files = ["--rho", states["p"], "--sigma", states["s"]] if argv[0] == "div" else \
        ([] if argv[0] == "verify" else pairs(states))
    code, _, err = run(capsys, *argv, *files)
    assert code == 1
    assert len(err.strip().splitlines()) == 1
    assert flag in err


def test_missing_file_exits_one(capsys, states, tmp_path):
    code, _, err = run(capsys, "div", "--kind", "fidelity", "--rho", tmp_path / "none.json", "--sigma", states["s"])
    assert code == 1 and "--rho" in err


def test_module_entry_point(states):
    proc = subprocess.run([sys.executable, "-m", "qdichotomy", "div", "--kind", "max", "--rho", states["p"],
                           "--sigma", states["s"]], capture_output=True, text=True)
    assert proc.returncode == 0 and float(proc.stdout) == pytest.approx(np.log2(1.8))
