import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import rho_p
from xkerr.cli import main
from xkerr.synthdata import GroundTruth, project_counts
from xkerr.tomo_io import write_coincidence_csv, write_coincidence_json


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return [{k: float(v) for k, v in r.items()} for r in csv.DictReader(io.StringIO(text))]


def cfg_file(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_sweep_detuning_values(capsys):
    code, out, _ = run(capsys, "sweep-detuning")
    assert code == 0
    table = {r["delta_over_2pi_mhz"]: r for r in rows(out)}
    assert len(table) == 81
    assert table[-8.0]["phi_rad"] == pytest.approx(-0.41, abs=0.01)
    assert table[-8.0]["kappa_over_kappa0"] == pytest.approx(1.36, abs=0.01)
    assert table[0.0]["kappa_over_kappa0"] == pytest.approx(4.8)
    assert table[0.0]["phi_rad"] == 0.0


def test_sweep_phase_is_odd(capsys):
    _, out, _ = run(capsys, "sweep-detuning")
    phi = np.array([r["phi_rad"] for r in rows(out)])
    assert np.allclose(phi, -phi[::-1], atol=1e-15)


def test_sweep_config_and_json(tmp_path, capsys):
    cfg = cfg_file(tmp_path, {"sweeps": [{"variable": "delta_over_2pi_mhz", "start": -4, "stop": 4, "points": 5}]})
    code, out, _ = run(capsys, "sweep-detuning", "--config", cfg, "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert [r["delta_over_2pi_mhz"] for r in doc] == [-4.0, -2.0, 0.0, 2.0, 4.0]


def test_env_default_config(tmp_path, capsys, monkeypatch):
    cfg = cfg_file(tmp_path, {"sweeps": [{"variable": "delta_over_2pi_mhz", "start": 1, "stop": 2, "points": 2}]})
    monkeypatch.setenv("XKERR_DEFAULT_CONFIG", cfg)
    _, out, _ = run(capsys, "sweep-detuning")
    assert [r["delta_over_2pi_mhz"] for r in rows(out)] == [1.0, 2.0]


def test_output_file(tmp_path, capsys):
    path = tmp_path / "o.csv"
    code, out, _ = run(capsys, "sweep-detuning", "--out", str(path))
    assert code == 0 and out == ""
    assert path.read_text().startswith("delta_over_2pi_mhz,phi_rad")


def test_conditional_phase(capsys):
    code, out, _ = run(capsys, "conditional-phase", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc[0]["n_c"] == 0.0 and doc[0]["mean_phase_rad"] == 0.0
    assert doc[0]["conditional_phase_rad"] is None
    assert all(r["conditional_phase_rad"] is not None for r in doc[1:])


def test_dwell_deterministic(tmp_path, capsys):
    cfg = cfg_file(tmp_path, {"scenario": {"n_trials": 20_000},
                              "sweeps": [{"variable": "tau_us", "start": 0.5, "stop": 3, "points": 6}]})
    _, a, _ = run(capsys, "dwell", "--config", cfg, "--seed", "5")
    _, b, _ = run(capsys, "dwell", "--config", cfg, "--seed", "5", "--threads", "3")
    _, c, _ = run(capsys, "dwell", "--config", cfg, "--seed", "6")
    assert a == b and a != c
    assert len(rows(a)) == 6


def test_identical_runs_are_byte_identical(tmp_path, capsys):
    cfg = cfg_file(tmp_path, {"seed": 4, "tomography": {"n_resamples": 3,
                                                       "simulate": {"noise": "poisson"}}})
    _, a, _ = run(capsys, "tomography", "simulate", "--config", cfg)
    _, b, _ = run(capsys, "tomography", "simulate", "--config", cfg)
    assert a == b


def test_config_errors(tmp_path, capsys):
    bad = cfg_file(tmp_path, {"cavity": {"eta": -1}})
    code, _, err = run(capsys, "sweep-detuning", "--config", bad)
    assert code == 2 and "cavity/eta" in err
    code, _, _ = run(capsys, "sweep-detuning", "--config", cfg_file(tmp_path, {"bogus": 1}))
    assert code == 2
    code, _, _ = run(capsys, "sweep-detuning", "--config", str(tmp_path / "missing.json"))
    assert code == 2
    p = tmp_path / "broken.json"
    p.write_text("{\n  ")
    code, _, err = run(capsys, "sweep-detuning", "--config", str(p))
    assert code == 2 and ":2:" in err


def test_input_errors(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("nu,phase_or_angle,count\n1,,abc\n")
    code, _, err = run(capsys, "tomography", "reconstruct", str(p))
    assert code == 3 and ":2:" in err
    code, _, _ = run(capsys, "tomography", "reconstruct", str(tmp_path / "none.csv"))
    assert code == 3
    z = tmp_path / "zero.json"
    z.write_text(json.dumps({"n": [0.0] * 16}))
    code, _, _ = run(capsys, "tomography", "reconstruct", str(z))
    assert code == 3


def test_nonconvergence_exit(tmp_path, capsys):
    cfg = cfg_file(tmp_path, {"tomography": {"max_fev": 1, "n_resamples": 0}})
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "tomography", "simulate", "--config", cfg, "--out", str(out))
    assert code == 4 and "not converged" in err
    assert json.loads(out.read_text())["provenance"]["converged"] is False


def test_simulate_maximally_mixed(tmp_path, capsys):
    cfg = cfg_file(tmp_path, {"tomography": {"n_resamples": 0,
                                             "simulate": {"state": "maximally_mixed"}}})
    code, out, _ = run(capsys, "tomography", "simulate", "--config", cfg)
    assert code == 0
    m = json.loads(out)["metrics"]
    assert m["concurrence"] == pytest.approx(0.0, abs=1e-6)
    assert m["purity"] == pytest.approx(0.25, abs=1e-6)


def test_simulate_physics_state(tmp_path, capsys):
    cfg = cfg_file(tmp_path, {"tomography": {"n_resamples": 0}})
    ds = tmp_path / "ds.json"
    code, out, _ = run(capsys, "tomography", "simulate", "--config", cfg, "--dataset-out", str(ds))
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["metrics"]["nonlinear_phase_rad"]) == pytest.approx(0.45, abs=0.01)
    assert "ground_truth" in doc["provenance"]
    # the written dataset reconstructs to the same state
    code, out2, _ = run(capsys, "tomography", "reconstruct", str(ds), "--config", cfg)
    assert code == 0
    assert json.loads(out2)["metrics"]["concurrence"] == pytest.approx(doc["metrics"]["concurrence"], abs=1e-4)


@pytest.mark.parametrize("writer, suffix", [(write_coincidence_csv, ".csv"), (write_coincidence_json, ".json")])
def test_reconstruct_printed_state(tmp_path, capsys, writer, suffix):
    path = tmp_path / ("rho_p" + suffix)
    writer(path, project_counts(GroundTruth(rho_p(), counts_scale=4000)))
    cfg = cfg_file(tmp_path, {"tomography": {"n_resamples": 5}})
    code, out, _ = run(capsys, "tomography", "reconstruct", str(path), "--config", cfg)
    assert code == 0
    doc = json.loads(out)
    assert doc["metrics"]["concurrence"] == pytest.approx(0.082, abs=0.005)
    assert doc["metrics"]["purity"] == pytest.approx(0.92, abs=0.01)
    assert len(doc["provenance"]["input_sha256"]) == 64
    assert doc["bootstrap"]["n_resamples"] + doc["bootstrap"]["n_failed"] == 5


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "xkerr.cli", "sweep-detuning", "--format", "json"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert len(json.loads(res.stdout)) == 81
    res = subprocess.run([sys.executable, "-m", "xkerr.cli", "tomography", "reconstruct", "/nonexistent.csv"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 3
