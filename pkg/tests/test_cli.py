import csv
import json
from pathlib import Path

import numpy as np
import pytest

from graphheat.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _run(*argv):
    return main(list(argv))


def test_spectrum_interval(tmp_path):
    rc = _run(
        "spectrum", "--graph", str(CONFIGS / "interval.toml"),
        "--h", str(1 / 512), "--modes", "12", "--out", str(tmp_path),
    )
    assert rc == 0
    with open(tmp_path / "spectrum.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    lams = np.array([float(r[1]) for r in rows])
    exact = -np.array([((k - 1) * np.pi) ** 2 for k in range(1, 13)])
    rel = np.abs(lams - exact) / np.maximum(1.0, np.abs(exact))
    assert rel.max() < 1e-3
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert "config_sha256" in manifest and manifest["version"]


def test_deterministic_outputs(tmp_path):
    outs = []
    for sub in ("a", "b"):
        d = tmp_path / sub
        rc = _run(
            "convolve", "--graph", str(CONFIGS / "interval.toml"),
            "--h", "0.01", "--modes", "10", "--seed", "3",
            "--T", "0.5", "--dt", "0.005", "--paths", "20", "--out", str(d),
        )
        assert rc == 0
        outs.append((d / "convolution_variance.csv").read_bytes())
    assert outs[0] == outs[1]


def test_verify_appendix(tmp_path):
    rc = _run(
        "verify-appendix", "--graph", str(CONFIGS / "star3.toml"),
        "--seed", "0", "--trials", "25", "--out", str(tmp_path),
    )
    assert rc == 0
    with open(tmp_path / "surjectivity.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    assert len(rows) == 25
    assert all(float(r[3]) < 1e-9 for r in rows)
    assert all(float(r[2]) < 1.0 for r in rows)


def test_missing_seed_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        _run(
            "convolve", "--graph", str(CONFIGS / "interval.toml"),
            "--out", str(tmp_path),
        )
    assert exc.value.code != 0


def test_bad_graph_file_exit_code(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('[graph]\nvertices = ["a", "b"]\nextra = 1\n[[edge]]\nends = ["a","b"]\nlength = 1.0\n')
    rc = _run("spectrum", "--graph", str(bad), "--out", str(tmp_path))
    assert rc == 1


def test_bad_noise_spec_exit_code(tmp_path):
    rc = _run(
        "convolve", "--graph", str(CONFIGS / "interval.toml"),
        "--h", "0.02", "--modes", "8", "--seed", "1",
        "--noise", "cauchy", "--out", str(tmp_path),
    )
    assert rc == 1


def test_solve_and_feller_outputs(tmp_path):
    rc = _run(
        "solve", "--graph", str(CONFIGS / "path2.toml"),
        "--h", "0.02", "--modes", "15", "--seed", "2",
        "--T", "0.5", "--dt", "0.01", "--drift", "cubic", "--out", str(tmp_path),
    )
    assert rc == 0
    rep = json.loads((tmp_path / "feller.json").read_text())
    assert np.isfinite(rep["ratio"])
    with open(tmp_path / "solution.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:2] == ["t", "m_norm"]


def test_regularity_command(tmp_path):
    rc = _run(
        "regularity", "--graph", str(CONFIGS / "interval.toml"),
        "--h", str(1 / 1024), "--modes", "120", "--seed", "5",
        "--alpha", "0.2,0.35", "--T", "1.0", "--dt", "0.01",
        "--paths", "50", "--empirical", "--out", str(tmp_path),
    )
    assert rc == 0
    rep = json.loads((tmp_path / "regularity.json").read_text())
    assert rep["0.2"]["verdict"] == "converging"
    assert rep["0.35"]["verdict"] == "diverging"
    assert "empirical_fit" in rep
