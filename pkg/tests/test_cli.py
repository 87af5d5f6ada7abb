import os
import subprocess
import sys

import numpy as np
import pytest

from nearcloak import config as cfgmod
from nearcloak.cli import main

COARSE = [
    "--h", "0.2",
    "--rho", "0.05,0.02",
    "--set", "experiment.domain_radius=2.5",
    "--set", "experiment.n_theta=64",
    "--set", "oracles.ls_h=0.24,0.12",
    "--set", "oracles.mie_nodes=64",
    "--set", "regular.nodes=64",
    "--set", "small.nodes=32",
    "--set", "cloak.samples=8",
]  # fmt: skip


def test_empty_config_reports_missing_experiment(tmp_path, capsys):
    p = tmp_path / "empty.ini"
    p.write_text("")
    assert main(["--config", str(p)]) == 2
    assert "no experiment specified" in capsys.readouterr().err


def test_unknown_key_is_config_error(tmp_path, capsys):
    p = tmp_path / "bad.ini"
    p.write_text("[run]\nexperiment = oracles\n[experiment]\nomgea = 2\n")
    assert main(["--config", str(p)]) == 2
    assert "unknown config key" in capsys.readouterr().err


def test_bad_set_syntax(capsys):
    assert main(["--experiment", "oracles", "--set", "omega=3"]) == 2
    assert main(["--experiment", "oracles", "--set", "experiment.nope=3"]) == 2


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "nope.ini")]) == 2


def test_invalid_values_rejected():
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.parse_config("[experiment]\nomega = -1\n")
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.parse_config("[experiment]\nrho = 0.1, 1.5\n")
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.parse_config("[run]\nexperiment = everything\n")
    with pytest.raises(cfgmod.ConfigError):
        cfgmod.parse_config("[experiment]\nh = abc\n")


def test_overlapping_obstacles_exit_2(tmp_path):
    args = ["--experiment", "rate", "--out", str(tmp_path), "--rho", "0.3"]
    args += ["--set", "small.centers=0,0; 0.5,0", "--set", "small.d0_min=0.4"]
    assert main(args) == 2


def test_default_config_loads_and_matches_shipped_copy():
    pkg = cfgmod.load_config()
    assert pkg.experiment == "all"
    here = os.path.join(os.path.dirname(__file__), "..", "configs", "default.ini")
    assert cfgmod.load_config(here) == pkg


def test_override_precedence():
    cfg = cfgmod.parse_config("[experiment]\nomega = 3\n", {"experiment.omega": "4.5"})
    assert cfg.omega == 4.5


def test_coarse_run_and_determinism(tmp_path, capsys):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["--experiment", "all", "--out", str(out)] + COARSE) == 0
        outs.append(out)
    text = capsys.readouterr().out
    assert "oracles: pass" in text and "rate: pass" in text and "cloak: pass" in text
    names = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*.csv"))
    assert len(names) >= 8
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
    rows = (outs[0] / "rate_report.csv").read_text().splitlines()
    assert rows[0].startswith("rho,")
    assert len(rows) == 3


def test_module_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "nearcloak", "--experiment", "oracles", "--out", str(tmp_path)] + COARSE,
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0, r.stderr
    assert r.stdout.strip() == "oracles: pass"


def test_pure_python_backend_gives_same_report(tmp_path):
    env = dict(os.environ, NEARCLOAK_PURE_PYTHON="1")
    code = "from nearcloak import kernels; print(kernels.BACKEND)"
    r = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert r.stdout.strip() == "python"
    outs = []
    for k, e in enumerate((env, dict(os.environ, NEARCLOAK_PURE_PYTHON="0"))):
        out = tmp_path / f"b{k}"
        subprocess.run(
            [sys.executable, "-m", "nearcloak", "--experiment", "rate", "--out", str(out)] + COARSE,
            env=e,
            check=True,
            capture_output=True,
        )
        outs.append(np.loadtxt(out / "rate_report.csv", delimiter=",", skiprows=1, usecols=(2, 3)))
    assert np.allclose(outs[0], outs[1], rtol=1e-9, atol=0)


def test_underresolved_oracle_fails_with_exit_1(tmp_path, capsys):
    args = ["--experiment", "oracles", "--out", str(tmp_path)] + COARSE
    args += ["--set", "oracles.mie_nodes=16", "--set", "oracles.mie_omega=10"]
    assert main(args) == 1
    assert "oracles: FAIL" in capsys.readouterr().out
    row = next(r for r in (tmp_path / "oracle_report.csv").read_text().splitlines() if r.startswith("mie_rel_l2,"))
    assert row.endswith(",0")
