import json

import numpy as np
import pytest

from cauchydirac import cli
from cauchydirac.fieldio import load_field, read_header


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


SMALL = {
    "schema_version": 1, "name": "small", "grid": {"n": 16, "extent": 3.0},
    "solver": {"steps": 10, "store_every": 5, "t1": 1.4},
    "budgets": {"causal_leakage": 2e-2},
}


def test_free_states_are_identical(tmp_path):
    cfg = {**SMALL, "name": "free", "potential": {"kind": "zero"}}
    code = cli.main(["evolve", str(_write(tmp_path, cfg)), "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_OK
    fields = tmp_path / "o" / "free" / "fields"
    manifest = json.loads((fields / "manifest.json").read_text())
    blobs = []
    for entry in manifest["states"]:
        path = fields / entry["file"]
        _, offset = read_header(path)
        blobs.append(path.read_bytes()[offset:])
    assert len(blobs) == 3 and all(b == blobs[0] for b in blobs)


def test_evolve_artifacts_and_reproducibility(tmp_path, capsys):
    path = _write(tmp_path, SMALL)
    assert cli.main(["evolve", str(path), "--out", str(tmp_path / "a")]) == cli.EXIT_OK
    assert cli.main(["evolve", str(path), "--out", str(tmp_path / "b")]) == cli.EXIT_OK
    a = (tmp_path / "a" / "small" / "summary.json").read_bytes()
    b = (tmp_path / "b" / "small" / "summary.json").read_bytes()
    assert a == b
    summary = json.loads(a)
    assert summary["results"]["unitarity_drift"]["value"] <= 1e-3
    out = tmp_path / "a" / "small"
    norms = np.loadtxt(out / "norms.csv", delimiter=",", skiprows=1)
    assert norms.shape == (3, 3)
    leak = np.loadtxt(out / "leakage.csv", delimiter=",", skiprows=1)
    assert leak.shape == (3, 2)
    final = load_field(out / "fields" / "final_surface.cdf")
    assert final.surface.flat_time == pytest.approx(1.4)
    assert (out / "timings.json").exists()
    assert "unitarity_drift" in capsys.readouterr().out


def test_budget_breach_exit_code(tmp_path):
    cfg = {**SMALL, "name": "tight", "budgets": {"unitarity_drift": 1e-30}}
    assert cli.main(["evolve", str(_write(tmp_path, cfg)), "--out", str(tmp_path)]) == cli.EXIT_CHECK
    assert (tmp_path / "tight" / cli.FAILURE_MARKER).exists()


def test_tolerance_scale_relaxes_budgets(tmp_path):
    cfg = {**SMALL, "name": "scaled", "budgets": {"causal_leakage": 1e-6}}
    path = str(_write(tmp_path, cfg))
    assert cli.main(["evolve", path, "--out", str(tmp_path)]) == cli.EXIT_CHECK
    assert cli.main(["evolve", path, "--out", str(tmp_path), "--tolerance-scale", "1e5"]) == cli.EXIT_OK


def test_invalid_surface_exit_code(tmp_path, capsys):
    cfg = {"schema_version": 1, "name": "bad",
           "surface": {"family": "tilted", "params": {"slope": [1.2, 0, 0]}}}
    assert cli.main(["evolve", str(_write(tmp_path, cfg))]) == cli.EXIT_CONFIG
    assert "surface.params.slope" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert cli.main(["evolve", str(tmp_path / "nope.json")]) == cli.EXIT_CONFIG


def test_runtime_error_exit_code(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("kernel exploded")

    monkeypatch.setattr(cli, "run_evolve", boom)
    path = _write(tmp_path, {**SMALL, "name": "boom"})
    assert cli.main(["evolve", str(path), "--out", str(tmp_path)]) == cli.EXIT_RUNTIME
    assert "kernel exploded" in (tmp_path / "boom" / cli.FAILURE_MARKER).read_text()


def test_check_command(tmp_path):
    path = _write(tmp_path, {"schema_version": 1, "name": "chk"})
    code = cli.main(["check", str(path), "--suite", "algebra", "--suite", "geometry", "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    report = json.loads((tmp_path / "chk" / "checks.json").read_text())
    assert set(report["suites"]) == {"algebra", "geometry"}
    assert report["suites"]["algebra"]["runtime"] < 5


def test_transform_command(tmp_path):
    path = _write(tmp_path, {**SMALL, "name": "tr"})
    code = cli.main(["transform", str(path), "--from", "Sigma", "--to", "M", "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    report = json.loads((tmp_path / "tr" / "transform_Sigma_to_M.json").read_text())
    assert report["plan"]["fast"] is True
    assert report["target_norm"] == pytest.approx(report["source_norm"], rel=1e-12)
    shell = load_field(tmp_path / "tr" / "fields" / "transform_Sigma_to_M.cdf")
    assert shell.bundle_residual() < 1e-12


def test_threads_clamped(tmp_path, capsys):
    import numba

    path = _write(tmp_path, {**SMALL, "name": "thr"})
    code = cli.main(["transform", str(path), "--from", "Sigma", "--to", "3", "--out", str(tmp_path),
                     "--threads", str(numba.config.NUMBA_NUM_THREADS + 4)])
    assert code == cli.EXIT_OK
    assert "exceeds" in capsys.readouterr().err


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "cauchydirac", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "evolve" in res.stdout
