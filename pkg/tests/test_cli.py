import csv
import io
import json
import subprocess
import sys

import pytest

from hpmd import harness
from hpmd.cli import main
from hpmd.harness import TrialMetrics


@pytest.fixture
def config_file(tmp_path):
    def make(**kw):
        d = {"algorithm": "smd-fixed", "problem": "lipschitz_norm", "dim": 2, "T": 30,
             "n_trials": 10, "seed": 5, "output_dir": str(tmp_path / "out"), **kw}
        path = tmp_path / "config.json"
        path.write_text(json.dumps(d))
        return str(path)
    return make


def test_run(config_file, tmp_path, capsys):
    assert main(["run", "--config", config_file(), "--workers", "2", "--seed", "9"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["n_trials"] == 10 and summary["gap_ratio"] < 1
    resolved = json.loads((tmp_path / "out" / "config.json").read_text())
    assert resolved["seed"] == 9 and resolved["workers"] == 2


def test_run_output_dir_override(config_file, tmp_path):
    assert main(["run", "--config", config_file(), "--output-dir", str(tmp_path / "o2")]) == 0
    assert (tmp_path / "o2" / "trials.csv").exists()


def test_bad_config_exits_1(config_file, tmp_path):
    assert main(["run", "--config", config_file(colour="red")]) == 1
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["verify", "--config", config_file(), "--check", "lemma6"]) == 1
    assert main(["frobnicate"]) == 1
    assert main(["weights", "--algo", "smd-fixed", "--sigma", "1"]) == 1


def test_aborted_run_exits_3(config_file, monkeypatch):
    def boom(exp, schedule, trial_id):
        nan = float("nan")
        return TrialMetrics(trial_id, 0, nan, nan, nan, trial_id == 0)

    monkeypatch.setattr(harness, "_run_trial", boom)
    assert main(["run", "--config", config_file()]) == 3


def test_step_above_the_cap_is_a_config_error(config_file):
    path = config_file(problem="quadratic", algorithm="asmd", eta=1e200, n_trials=2)
    assert main(["run", "--config", path]) == 1


def test_non_finite_iterates_exit_3(config_file, monkeypatch):
    from hpmd.algorithms import NonFiniteIterateError

    def diverge(*args, **kwargs):
        raise NonFiniteIterateError(7, "smd")

    monkeypatch.setattr(harness, "run_smd", diverge)
    assert main(["verify", "--config", config_file(verify_trials=1), "--check", "lemma4"]) == 3
    assert main(["run", "--config", config_file()]) == 3


def test_verify_pass_and_report(config_file, capsys):
    assert main(["verify", "--config", config_file(verify_trials=2), "--check", "lemma4"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["check"] == "lemma4" and rep["passed"]
    assert main(["verify", "--config", config_file(), "--check", "weights"]) == 0


def test_verify_failure_exits_2(config_file, capsys, monkeypatch):
    # sigma far below the certified value of the noise fails the subgaussian check
    path = config_file(noise_scale=1.0, n_samples=20000, lambda_grid_size=8)
    real = harness.build

    def undercertified(cfg):
        exp = real(cfg)
        return exp.__class__(exp.config, exp.problem, exp.mirror, exp.noise, exp.x1,
                             exp.sigma / 3, exp.D1)

    monkeypatch.setattr(harness, "build", undercertified)
    assert main(["verify", "--config", path, "--check", "subgaussian"]) == 2
    assert json.loads(capsys.readouterr().out)["passed"] is False


def _weights_csv(capsys, *args):
    code = main(["weights", *args])
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    return code, rows


def test_weights_smd(capsys):
    code, rows = _weights_csv(capsys, "--algo", "smd-fixed", "--sigma", "1", "--eta", "1",
                              "--T", "2")
    assert code == 0
    assert rows[0] == ["t", "w_t", "margin_C1", "margin_C2"]
    assert [int(r[0]) for r in rows[1:]] == [1, 2, 3]
    assert [float(r[1]) for r in rows[1:]] == pytest.approx([301 / 7776, 7 / 216, 1 / 36],
                                                            rel=1e-15)
    assert rows[-1][3] == ""


def test_weights_asmd(capsys):
    code, rows = _weights_csv(capsys, "--algo", "asmd", "--sigma", "1", "--eta", "1",
                              "--T", "2")
    assert code == 0
    assert rows[0][-1] == "margin_C3"
    assert [float(r[1]) for r in rows[1:]] == pytest.approx([133 / 5000, 7 / 300, 1 / 60],
                                                            rel=1e-15)


def test_weights_failure_exits_2(capsys):
    code, rows = _weights_csv(capsys, "--algo", "asmd", "--sigma", "1", "--eta", "1",
                              "--T", "5", "--beta", "1")
    assert code == 2
    assert any(float(r[3]) < 0 for r in rows[1:] if r[3])


def test_bound(capsys):
    assert main(["bound", "--algo", "smd-fixed", "--params", "D1=1", "G=1", "sigma=1",
                 "eta=0.1", "T=100", "delta=0.05"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["gap_bound"] == pytest.approx(0.2 + (8 + 24 * 2.995732273553991) * 0.1)
    assert main(["bound", "--algo", "asmd", "--params", "D0=1", "G=1", "sigma=1",
                 "eta=auto", "T=100", "delta=0.05", "beta=1"]) == 0
    assert json.loads(capsys.readouterr().out)["eta"] > 0
    assert main(["bound", "--algo", "smd-fixed", "--params", "D=1"]) == 1
    assert main(["bound", "--algo", "smd-fixed", "--params", "D"]) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "hpmd", "bound", "--algo", "smd-invsqrt",
                          "--params", "D=1", "G=1", "sigma=0", "eta=1", "T=1", "delta=0.5"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["gap_bound"] == pytest.approx(2.0 + 2.0)
    out = subprocess.run([sys.executable, "-m", "hpmd", "--help"], capture_output=True,
                         text=True)
    assert out.returncode == 0 and "verify" in out.stdout
