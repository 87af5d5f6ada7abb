"""Acceptance gate: one test per criterion, tolerances pinned below.

Criteria 1-3 call the library directly. Criteria 4-7 read the outputs of
two command-line runs of the default configuration (about three minutes
each on one core).
"""

import csv
import subprocess
import sys

import numpy as np
import pytest

from nearcloak import farfield as ff
from nearcloak import geometry as geo
from nearcloak.config import load_config
from nearcloak.experiments import gauss_defect, jump_defect, ls_experiment, mie_experiment

# criterion 1
MIE_REL_L2 = 1e-6
MIE_SECONDS = 5.0
# criterion 2
GAUSS_TOL = 1e-8
JUMP_TOL = 1e-3
# criterion 3
LS_REDUCTION = 2.0
LS_SECONDS = 120.0
# criterion 4
RATE_SPREAD = 0.15
RATE_SECONDS = 30 * 60.0
# criterion 5
MIN_FD_ORDER = 1.8
CLOAK_FLOOR_FACTOR = 10.0
# criterion 6
INVARIANT_FLOOR_FACTOR = 10.0


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _quantities(path):
    return {r["quantity"]: float(r["value"]) for r in _rows(path)}


@pytest.fixture(scope="session")
def default_runs(tmp_path_factory):
    """Two independent runs of the default configuration."""
    runs = []
    for k in range(2):
        out = tmp_path_factory.mktemp(f"default_run{k}")
        proc = subprocess.run(
            [sys.executable, "-m", "nearcloak", "--experiment", "all", "--out", str(out)],
            capture_output=True,
            text=True,
        )
        runs.append((out, proc))
    return runs


@pytest.fixture(scope="session")
def run_dir(default_runs):
    out, proc = default_runs[0]
    if not (out / "oracle_report.csv").exists():
        pytest.fail(f"default run produced no reports (exit {proc.returncode}): {proc.stderr[-2000:]}")
    return out


def test_criterion_1_mie_disc_agreement():
    err, secs, _ = mie_experiment(omega=1.0, radius=1.0, n_nodes=256, n_theta=256)
    print(f"relative L2 error {err:.3e}, {secs:.2f} s")
    assert err < MIE_REL_L2
    assert secs < MIE_SECONDS


def test_criterion_2_gauss_identity_and_jump():
    omega = load_config().omega
    disc = geo.make_disc((0.3, -0.2), 1.0, 64)
    kite = geo.make_kite((0.0, 0.0), 1.0, 128)
    defects = {
        "gauss_disc": gauss_defect(disc),
        "gauss_kite": gauss_defect(kite),
        "jump_disc": jump_defect(disc, omega),
        "jump_kite": jump_defect(kite, omega),
    }
    print(defects)
    assert defects["gauss_disc"] < GAUSS_TOL
    assert defects["gauss_kite"] < GAUSS_TOL
    assert defects["jump_disc"] < JUMP_TOL
    assert defects["jump_kite"] < JUMP_TOL


def test_criterion_3_lippmann_schwinger_self_convergence():
    cfg = load_config()
    assert tuple(cfg.ls_h) == (0.12, 0.06, 0.03)
    families, secs = ls_experiment(cfg)
    diffs = [max(ff.l2_diff(a, b) for a, b in zip(families[i], families[i + 1])) for i in range(2)]
    print(f"changes {diffs}, ratio {diffs[0] / diffs[1]:.3f}, {secs:.1f} s")
    assert diffs[0] / diffs[1] >= LS_REDUCTION
    assert secs < LS_SECONDS


@pytest.mark.slow
def test_criterion_4_rate_sweep(run_dir):
    rows = _rows(run_dir / "rate_report.csv")
    rho = np.array([float(r["rho"]) for r in rows])
    norms = np.array([float(r["norm"]) for r in rows])
    assert np.allclose(rho, [0.08, 0.04, 0.02, 0.01])
    products = norms * np.abs(np.log(rho))
    spread = products.max() / products.min() - 1
    timings = dict(line.split() for line in (run_dir / "timings.txt").read_text().splitlines())
    print(f"delta |ln rho| = {products}, spread {spread:.4f}, {timings['rate']} s")
    assert spread <= RATE_SPREAD
    assert np.all(np.diff(norms) < 0)
    assert float(timings["rate"]) < RATE_SECONDS


@pytest.mark.slow
def test_criterion_5_cloak_invariance(run_dir):
    q = _quantities(run_dir / "cloak_report.csv")
    rows = _rows(run_dir / "rate_report.csv")
    e = np.array([float(r["e_rho"]) for r in rows])
    norms = np.array([float(r["norm"]) for r in rows])
    c = float(np.dot(e, norms) / np.dot(e, e))
    envelope = c / abs(np.log(q["rho"]))
    print(
        f"order {q['fd_order']:.3f}, residual {q['residual']:.3e} vs floor {q['floor']:.3e}, "
        f"distance {q['farfield_distance']:.5f} vs envelope {envelope:.5f}"
    )
    assert q["fd_order"] >= MIN_FD_ORDER
    assert q["residual"] <= CLOAK_FLOOR_FACTOR * q["floor"]
    assert q["farfield_distance"] <= envelope


@pytest.mark.slow
def test_criterion_6_physics_invariants(run_dir):
    rows = {r["check"]: float(r["value"]) for r in _rows(run_dir / "oracle_report.csv")}
    checked = 0
    for prefix in ("mie", "ls", "scene_reference", "scene_full"):
        floor = max(rows[f"{prefix}_floor"], 1e-13)
        for kind in ("reciprocity", "optical"):
            value = rows[f"{prefix}_{kind}"]
            print(f"{prefix}_{kind} {value:.3e} vs floor {floor:.3e}")
            assert value <= INVARIANT_FLOOR_FACTOR * floor
            checked += 1
    # single-direction solves of the sweep and the cloak: optical theorem only
    omega = load_config().omega
    floor = rows["scene_full_floor"]
    for path in sorted(run_dir.glob("farfield_*.csv")):
        a = ff.read_farfield_csv(path, omega, load_config().incident_angle)
        assert ff.optical_theorem_check(a) <= INVARIANT_FLOOR_FACTOR * floor, path.name
        checked += 1
    assert checked >= 8 + 6


@pytest.mark.slow
def test_criterion_7_determinism(default_runs):
    (a, pa), (b, pb) = default_runs
    assert pa.returncode == pb.returncode
    names = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    assert {p.relative_to(b) for p in b.rglob("*.csv")} == set(names)
    assert len(names) >= 10
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), str(name)


@pytest.mark.slow
def test_default_run_exit_status(default_runs):
    for _, proc in default_runs:
        assert proc.returncode == 0, proc.stdout + proc.stderr
        assert proc.stdout.split() == ["oracles:", "pass", "rate:", "pass", "cloak:", "pass"]
