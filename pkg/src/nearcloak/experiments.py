"""Oracle suite, rho-rate sweep and cloak-invariance experiment.

Every experiment returns a report object with ``csv_header`` and
``csv_rows()``; :func:`emit_csv` serializes them deterministically
(fixed column order, 12 significant digits, LF line endings). Wall-clock
timings are kept out of the CSV files so that reruns are byte-identical.
"""

import logging
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import farfield as ff
from . import geometry as geo
from . import potentials as pot
from . import solver as slv
from .config import ExperimentConfig
from .media import BackgroundMedium, PolyBump, Profile, gauge_reduce
from .transform import BlowupMap, isotropic_residual, pullback_residual

logger = logging.getLogger(__name__)

# floors below this are roundoff, not discretization
FLOOR_MIN = 1e-13
FLOOR_FACTOR = 10.0
MIE_TOL = 1e-6
MIE_TIME = 5.0
GAUSS_TOL = 1e-8
JUMP_TOL = 1e-3
LS_RATIO_MIN = 2.0
LS_TIME = 120.0
RATE_SPREAD = 0.15
MIN_ORDER = 1.8


class ExperimentError(RuntimeError):
    """An experiment could not produce a trustworthy result (e.g. near resonance)."""


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def emit_csv(report, path) -> Path:
    """Write ``report`` (anything with ``csv_header`` and ``csv_rows()``) to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(csv_text(report.csv_header, report.csv_rows()))
    return path


@dataclass
class Table:
    """Plain CSV-able table."""

    csv_header: tuple
    rows: list

    def csv_rows(self):
        return self.rows


def _solve(system) -> slv.SolutionBundle:
    bundle = slv.solve(system)
    if bundle.near_resonant:
        raise ExperimentError(f"near-resonant configuration: condition estimate {bundle.condition:.3e}")
    return bundle


def _floor(a_fine, a_coarse) -> float:
    """Relative far-field change under one refinement, worst over directions."""
    worst = 0.0
    for f, c in zip(a_fine, a_coarse):
        worst = max(worst, ff.l2_diff(f, c) / max(ff.l2_norm(f), 1e-300))
    return max(worst, FLOOR_MIN)


def invariant_defects(fields):
    """``(reciprocity, worst optical-theorem defect)`` of a direction family."""
    return ff.reciprocity_defect(fields), max(ff.optical_theorem_check(f) for f in fields)


# ------------------------------------------------------------------ oracles


@dataclass(frozen=True)
class OracleResult:
    name: str
    value: float
    tolerance: float
    relation: str = "<="

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        if self.relation == "<=":
            return self.value <= self.tolerance
        return self.value >= self.tolerance


@dataclass
class OracleReport:
    results: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)
    csv_header = ("check", "value", "tolerance", "relation", "passed")

    def add(self, name, value, tol, relation="<="):
        r = OracleResult(name, float(value), float(tol), relation)
        self.results.append(r)
        logger.info("%-32s %.3e %s %.3e  %s", name, value, relation, tol, "pass" if r.passed else "FAIL")
        return r

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name) -> OracleResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def csv_rows(self):
        return [(r.name, r.value, r.tolerance, r.relation, r.passed) for r in self.results]


def mie_experiment(omega=1.0, radius=1.0, n_nodes=256, n_theta=256, n_directions=8):
    """Boundary-integral solve for a sound-soft disc against the series solution.

    Returns ``(relative L2 error, seconds, fields)`` for the first direction.
    """
    t0 = time.perf_counter()
    gauge = gauge_reduce(BackgroundMedium(), omega)
    disc = geo.make_disc((0.0, 0.0), radius, n_nodes, label="disc")
    thetas = ff.uniform_thetas(n_theta)
    angles = 2 * np.pi * np.arange(n_directions) / n_directions
    bundle = _solve(slv.assemble_reference(gauge, None, [disc], slv.directions_to_xi(angles, omega)))
    fields = ff.farfield_all(bundle, thetas)
    mie = ff.mie_disc_oracle(radius, omega, angles[0], thetas)
    err = ff.l2_diff(fields[0], mie) / ff.l2_norm(mie)
    return err, time.perf_counter() - t0, fields


def gauss_defect(curve) -> float:
    return float(np.max(np.abs(pot.static_double_layer_on(curve).matrix.sum(axis=1) + 0.5)))


def jump_defect(curve, omega, d=0.005) -> float:
    """Double-layer jump recovered by linear extrapolation from ``d`` and ``2d`` off the curve."""
    psi = np.cos(curve.t) + 0.5 * np.sin(2 * curve.t) + 0.25
    sel = np.arange(0, curve.n_nodes, max(1, curve.n_nodes // 16))
    x, nu = curve.points[sel], curve.normals[sel]

    def dl(pts):
        return pot.layer_off(curve, pts, "double", omega).matrix @ psi

    ext = 2 * dl(x + d * nu) - dl(x + 2 * d * nu)
    inn = 2 * dl(x - d * nu) - dl(x - 2 * d * nu)
    return float(np.max(np.abs((ext - inn) - psi[sel])))


def ls_medium(radius, sigma_amp, eta_amp) -> BackgroundMedium:
    return BackgroundMedium(
        Profile((PolyBump(sigma_amp, radius),), radius), Profile((PolyBump(eta_amp, radius),), radius)
    )


def ls_experiment(cfg: ExperimentConfig, n_directions=8):
    """Pure-medium far fields at the configured cell sizes.

    Returns ``(list of field families, seconds)``; one family per ``h``.
    """
    t0 = time.perf_counter()
    r = cfg.ls_radius
    gauge = gauge_reduce(ls_medium(r, cfg.ls_sigma_amplitude, cfg.ls_eta_amplitude), cfg.omega)
    thetas = ff.uniform_thetas(cfg.n_theta)
    angles = 2 * np.pi * np.arange(n_directions) / n_directions
    families = []
    for h in cfg.ls_h:
        grid = geo.build_grid([], (-r, r, -r, r), h, domain_radius=r)
        b = _solve(slv.assemble_reference(gauge, grid, [], slv.directions_to_xi(angles, cfg.omega)))
        families.append(ff.farfield_all(b, thetas))
    return families, time.perf_counter() - t0


def default_families(cfg: ExperimentConfig, h, rho=None):
    """Far fields of the configured scene for all incident directions.

    ``rho=None`` gives the reference scene without small obstacles.
    """
    gauge = gauge_reduce(cfg.medium(), cfg.omega)
    obst = cfg.obstacles()
    regular = list(obst.regular)
    xi = slv.directions_to_xi(cfg.incident_angles(), cfg.omega)
    thetas = ff.uniform_thetas(cfg.n_theta)
    if rho is None:
        grid = geo.build_grid(regular, cfg.box(), h, domain_radius=cfg.domain_radius)
        b = _solve(slv.assemble_reference(gauge, grid, regular, xi))
    else:
        small = geo.scale_small_obstacles(obst, rho)
        grid = _grid_quiet(regular + small, cfg, h)
        b = _solve(slv.assemble_full(gauge, grid, regular, small, slv.CouplingParam(rho), xi))
    return ff.farfield_all(b, thetas)


def _grid_quiet(curves, cfg, h):
    with warnings.catch_warnings():
        # small obstacles below the cell size are expected; they are excluded by mask only
        warnings.filterwarnings("ignore", message="cell size .* exceeds the diameter")
        return geo.build_grid(curves, cfg.box(), h, domain_radius=cfg.domain_radius)


def near_identity_pullback(omega=2.0, steps=(0.004, 0.002, 0.001)):
    """Plane wave pulled through the near-identity map ``rho=0.45, r1=0.5, r2=1``.

    Returns ``(transformed residual, untransformed FD residual)`` at the
    smallest step; homogeneous medium, so the exact field is known.
    """
    bm = BlowupMap((0.0, 0.0), 0.45, 0.5, 1.0)
    med = BackgroundMedium()
    ang = np.linspace(0, 2 * np.pi, 16, endpoint=False)
    pts_t = 0.75 * np.column_stack([np.cos(ang), np.sin(ang)])

    def u(x):
        return np.exp(1j * omega * (0.6 * x[..., 0] + 0.8 * x[..., 1]))

    rt = pullback_residual(u, med, bm, omega, pts_t, steps[-1])
    ru = isotropic_residual(u, med, omega, bm.inverse(pts_t), steps[-1])
    return float(np.max(np.abs(rt))), float(np.max(np.abs(ru)))


def run_oracle_suite(cfg: ExperimentConfig) -> OracleReport:
    rep = OracleReport()
    # boundary-integral path against separation of variables
    err, secs, fields = mie_experiment(cfg.mie_omega, cfg.mie_radius, cfg.mie_nodes, cfg.n_theta)
    rep.timings["mie"] = secs
    rep.add("mie_rel_l2", err, MIE_TOL)
    _, _, coarse = mie_experiment(cfg.mie_omega, cfg.mie_radius, cfg.mie_nodes // 2, cfg.n_theta)
    floor = _floor(fields, coarse)
    mie = ff.mie_disc_oracle(cfg.mie_radius, cfg.mie_omega, 0.0, ff.uniform_thetas(cfg.n_theta))
    rep.add("mie_series_optical", ff.optical_theorem_check(mie), 1e-8)
    rec, opt = invariant_defects(fields)
    rep.add("mie_floor", floor, np.inf)
    rep.add("mie_reciprocity", rec, FLOOR_FACTOR * floor)
    rep.add("mie_optical", opt, FLOOR_FACTOR * floor)
    # layer identities
    disc = geo.make_disc((0.3, -0.2), 1.0, 64)
    kite = geo.make_kite((0.0, 0.0), 1.0, 128)
    rep.add("gauss_disc", gauss_defect(disc), GAUSS_TOL)
    rep.add("gauss_kite", gauss_defect(kite), GAUSS_TOL)
    rep.add("jump_disc", jump_defect(disc, cfg.omega), JUMP_TOL)
    rep.add("jump_kite", jump_defect(kite, cfg.omega), JUMP_TOL)
    # volume potential self-convergence
    families, secs = ls_experiment(cfg)
    rep.timings["ls"] = secs
    diffs = [
        max(ff.l2_diff(a, b) for a, b in zip(families[i], families[i + 1])) for i in range(len(families) - 1)
    ]
    rep.plots["ls_convergence"] = Table(("x", "y"), [(h, d) for h, d in zip(cfg.ls_h[1:], diffs)])
    for i in range(len(diffs) - 1):
        rep.add(f"ls_reduction_{i}", diffs[i] / diffs[i + 1], LS_RATIO_MIN, ">=")
    floor = _floor(families[-1], families[-2])
    rec, opt = invariant_defects(families[-1])
    rep.add("ls_floor", floor, np.inf)
    rep.add("ls_reciprocity", rec, FLOOR_FACTOR * floor)
    rep.add("ls_optical", opt, FLOOR_FACTOR * floor)
    # configured scene, reference and full with the largest rho
    for tag, rho in (("scene_reference", None), ("scene_full", max(cfg.rho))):
        t0 = time.perf_counter()
        fine = default_families(cfg, cfg.h, rho)
        coarse = default_families(cfg, 2 * cfg.h, rho)
        rep.timings[tag] = time.perf_counter() - t0
        floor = _floor(fine, coarse)
        rec, opt = invariant_defects(fine)
        rep.add(f"{tag}_floor", floor, np.inf)
        rep.add(f"{tag}_reciprocity", rec, FLOOR_FACTOR * floor)
        rep.add(f"{tag}_optical", opt, FLOOR_FACTOR * floor)
    rt, ru = near_identity_pullback(cfg.omega)
    rep.add("pullback_near_identity", rt, FLOOR_FACTOR * ru)
    return rep


# ------------------------------------------------------------------ rate sweep


@dataclass
class RateReport:
    rho: np.ndarray
    norms: np.ndarray
    reference: ff.FarField
    fields: list
    dim: int = 2
    csv_header = ("rho", "e_rho", "norm", "ratio")

    @property
    def e_rho(self) -> np.ndarray:
        return np.array([slv.CouplingParam(r, self.dim).e_rho for r in self.rho])

    @property
    def ratios(self) -> np.ndarray:
        """``delta(rho) / e(rho)``, i.e. ``delta |ln rho|`` in 2D."""
        return self.norms / self.e_rho

    @property
    def fitted_c(self) -> float | None:
        if len(self.rho) < 2:
            return None
        e = self.e_rho
        return float(np.dot(e, self.norms) / np.dot(e, e))

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios))

    @property
    def max_deviation(self) -> float:
        """Largest pairwise ``ratio_i / ratio_j - 1``."""
        r = self.ratios
        return float(r.max() / r.min() - 1.0)

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.norms) < 0))

    def csv_rows(self):
        return [(r, e, n, q) for r, e, n, q in zip(self.rho, self.e_rho, self.norms, self.ratios)]

    def summary(self) -> Table:
        rows = [("max_pair_deviation", self.max_deviation), ("monotone", self.monotone), ("max_ratio", self.max_ratio)]
        if self.fitted_c is not None:
            rows.insert(0, ("fitted_c", self.fitted_c))
        return Table(("quantity", "value"), rows)


def _single_solve(cfg, gauge, rho, angle):
    obst = cfg.obstacles()
    regular = list(obst.regular)
    xi = slv.directions_to_xi([angle], cfg.omega)
    if rho is None:
        grid = geo.build_grid(regular, cfg.box(), cfg.h, domain_radius=cfg.domain_radius)
        return _solve(slv.assemble_reference(gauge, grid, regular, xi))
    small = geo.scale_small_obstacles(obst, rho)
    grid = _grid_quiet(regular + small, cfg, cfg.h)
    return _solve(slv.assemble_full(gauge, grid, regular, small, slv.CouplingParam(rho), xi))


def run_rate_sweep(cfg: ExperimentConfig) -> RateReport:
    gauge = gauge_reduce(cfg.medium(), cfg.omega)
    thetas = ff.uniform_thetas(cfg.n_theta)
    ref = ff.farfield_all(_single_solve(cfg, gauge, None, cfg.incident_angle), thetas)[0]
    fields, norms = [], []
    for rho in cfg.rho:
        f = ff.farfield_all(_single_solve(cfg, gauge, rho, cfg.incident_angle), thetas)[0]
        fields.append(f)
        norms.append(ff.l2_diff(f, ref))
        logger.info("rho=%g  delta=%.6e  delta/e=%.6f", rho, norms[-1], norms[-1] * abs(np.log(rho)))
    return RateReport(np.asarray(cfg.rho, dtype=float), np.asarray(norms), ref, fields)


# ------------------------------------------------------------------ cloak


@dataclass
class CloakReport:
    rho: float
    steps: np.ndarray
    transformed: np.ndarray
    untransformed: np.ndarray
    distance: float
    envelope: float
    cloaked: ff.FarField
    n_points: int
    csv_header = ("quantity", "value")

    @property
    def order(self) -> float:
        """Observed order from successive differences of the transformed residual."""
        d1 = np.max(np.abs(self.transformed[0] - self.transformed[1]))
        d2 = np.max(np.abs(self.transformed[1] - self.transformed[2]))
        return float(np.log2(d1 / d2))

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.transformed[-1])))

    @property
    def floor(self) -> float:
        return float(max(np.max(np.abs(self.untransformed[-1])), FLOOR_MIN))

    @property
    def passed(self) -> bool:
        return (
            self.order >= MIN_ORDER
            and self.residual <= FLOOR_FACTOR * self.floor
            and self.distance <= self.envelope
        )

    def csv_rows(self):
        return [
            ("rho", self.rho),
            ("n_points", self.n_points),
            ("fd_order", self.order),
            ("residual", self.residual),
            ("floor", self.floor),
            ("residual_over_floor", self.residual / self.floor),
            ("farfield_distance", self.distance),
            ("envelope", self.envelope),
            ("passed", self.passed),
        ]

    def convergence_table(self) -> Table:
        rows = [
            (s, float(np.max(np.abs(t))), float(np.max(np.abs(u))))
            for s, t, u in zip(self.steps, self.transformed, self.untransformed)
        ]
        return Table(("step", "transformed", "untransformed"), rows)


def cloak_sample_points(grid, bm: BlowupMap, max_step, n_samples, exclude=()):
    """Cell centers ``x`` whose FD stencil around ``F(x)`` stays in the image annulus."""
    x = grid.centers
    d = np.linalg.norm(x - np.asarray(bm.center), axis=1)
    keep = (d >= 2 * bm.rho) & (d <= bm.r2)
    x = x[keep]
    xt = bm.forward(x)
    rt = np.linalg.norm(xt - np.asarray(bm.center), axis=1)
    ok = (rt >= bm.r1 + 2.5 * max_step) & (rt <= bm.r2 - 2.5 * max_step)
    for c in exclude:
        ok &= c.distance_to(xt) > 0.1
    x = x[ok]
    if len(x) > n_samples:
        x = x[np.linspace(0, len(x) - 1, n_samples).round().astype(int)]
    return x


def run_cloak_invariance(cfg: ExperimentConfig, envelope_c: float, reference: ff.FarField | None = None) -> CloakReport:
    gauge = gauge_reduce(cfg.medium(), cfg.omega)
    medium = cfg.medium()
    rho = cfg.cloak_rho
    thetas = ff.uniform_thetas(cfg.n_theta)
    if reference is None:
        reference = ff.farfield_all(_single_solve(cfg, gauge, None, cfg.incident_angle), thetas)[0]
    bundle = _single_solve(cfg, gauge, rho, cfg.incident_angle)
    cloaked = ff.farfield_all(bundle, thetas)[0]
    obst = cfg.obstacles()
    maps = [BlowupMap(tuple(s.center), rho, cfg.cloak_r1, cfg.cloak_r2) for s in obst.small]
    for i, a in enumerate(maps):
        if any(c.contains(np.asarray(a.center)[None]).any() or c.distance_to(np.asarray(a.center)[None])[0] < a.r2 for c in obst.regular):
            raise ExperimentError(f"cloak disc {i} intersects the regular obstacle")
        for b in maps[i + 1 :]:
            if np.linalg.norm(np.subtract(a.center, b.center)) <= a.r2 + b.r2:
                raise ExperimentError("cloak discs overlap")
    grid = bundle.layout.grid
    s_max = min(m.b for m in maps) * grid.h / 5
    steps = s_max / np.array([1.0, 2.0, 4.0])

    def u(x):
        return slv.physical_field(bundle, x, check=False)[:, 0]

    transformed = [[] for _ in steps]
    untransformed = [[] for _ in steps]
    n_points = 0
    for bm in maps:
        pts = cloak_sample_points(grid, bm, s_max, cfg.cloak_samples, obst.regular)
        n_points += len(pts)
        pts_t = bm.forward(pts)
        for k, s in enumerate(steps):
            transformed[k].append(pullback_residual(u, medium, bm, cfg.omega, pts_t, s))
            untransformed[k].append(isotropic_residual(u, medium, cfg.omega, pts, s))
    transformed = np.array([np.concatenate(t) for t in transformed])
    untransformed = np.array([np.concatenate(t) for t in untransformed])
    distance = ff.l2_diff(cloaked, reference)
    envelope = envelope_c * slv.CouplingParam(rho).e_rho
    return CloakReport(rho, steps, transformed, untransformed, distance, envelope, cloaked, n_points)


# ------------------------------------------------------------------ driver


def _write_farfield(a: ff.FarField, path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    ff.write_farfield_csv(a, path)


def run(cfg: ExperimentConfig, out_dir, experiment: str) -> dict:
    """Run ``experiment`` and write its outputs. Returns ``{name: passed}``."""
    out = Path(out_dir)
    plots = out / "plot_data"
    out.mkdir(parents=True, exist_ok=True)
    status = {}
    timings = {}
    rate = None
    if experiment in ("oracles", "all"):
        rep = run_oracle_suite(cfg)
        emit_csv(rep, out / "oracle_report.csv")
        for name, table in rep.plots.items():
            emit_csv(table, plots / f"{name}.csv")
        timings.update(rep.timings)
        status["oracles"] = rep.passed
    if experiment in ("rate", "cloak", "all"):
        t0 = time.perf_counter()
        rate = run_rate_sweep(cfg)
        timings["rate"] = time.perf_counter() - t0
        emit_csv(rate, out / "rate_report.csv")
        emit_csv(rate.summary(), out / "rate_fit.csv")
        emit_csv(Table(("x", "y"), [(e, n) for e, n in zip(rate.e_rho, rate.norms)]), plots / "rate_fit.csv")
        _write_farfield(rate.reference, out / "farfield_reference.csv")
        for r, f in zip(rate.rho, rate.fields):
            _write_farfield(f, out / f"farfield_rho{r:g}.csv")
        ok = rate.monotone
        if len(rate.rho) >= 2:
            ok = ok and rate.max_deviation <= RATE_SPREAD
        status["rate"] = ok
    if experiment in ("cloak", "all"):
        t0 = time.perf_counter()
        c = rate.fitted_c if rate.fitted_c is not None else rate.max_ratio
        cl = run_cloak_invariance(cfg, c, rate.reference)
        timings["cloak"] = time.perf_counter() - t0
        emit_csv(cl, out / "cloak_report.csv")
        emit_csv(cl.convergence_table(), plots / "pullback_convergence.csv")
        _write_farfield(cl.cloaked, out / "farfield_cloaked.csv")
        status["cloak"] = cl.passed
    with open(out / "timings.txt", "w") as fh:
        for k in sorted(timings):
            fh.write(f"{k} {timings[k]:.2f}\n")
    return status
