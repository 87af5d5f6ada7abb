"""Experiment configuration: ``[section]`` headers, ``key = value`` lines, ``#`` comments."""

import configparser
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import geometry as geo
from .media import BackgroundMedium, GaussianBump, PolyBump, Profile

EXPERIMENTS = ("oracles", "rate", "cloak", "all")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration; maps to exit status 2."""


def _floats(text, name):
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"{name}: expected numbers, got {text!r}") from exc


def _groups(text, size, name):
    """``a b c d; e f g h`` -> list of tuples of ``size`` floats."""
    out = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        vals = _floats(chunk, name)
        if len(vals) != size:
            raise ConfigError(f"{name}: each entry needs {size} numbers, got {chunk.strip()!r}")
        out.append(tuple(vals))
    return out


@dataclass(frozen=True)
class BumpSpec:
    amplitude: float
    width: float
    center: tuple


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str | None = None
    omega: float = 2.0
    domain_radius: float = 3.0
    h: float = 0.06
    n_theta: int = 256
    incident_angle: float = 0.0
    n_directions: int = 8
    rho: tuple = (0.08, 0.04, 0.02, 0.01)
    profile: str = "gaussian"
    sigma_bumps: tuple = (BumpSpec(0.4, 0.8, (0.5, 0.5)),)
    eta_bumps: tuple = (BumpSpec(0.3, 0.8, (0.5, 0.5)),)
    regular_shape: str = "kite"
    regular_center: tuple = (-1.2, 0.0)
    regular_scale: float = 0.6
    regular_nodes: int = 192
    small_centers: tuple = ((1.3, 0.4), (1.1, -0.8))
    small_template: str = "disc"
    small_nodes: int = 64
    d0_min: float = 0.5
    cloak_rho: float = 0.03
    cloak_r1: float = 0.25
    cloak_r2: float = 0.5
    cloak_samples: int = 24
    mie_omega: float = 1.0
    mie_radius: float = 1.0
    mie_nodes: int = 256
    ls_h: tuple = (0.12, 0.06, 0.03)
    ls_radius: float = 1.0
    ls_sigma_amplitude: float = 0.3
    ls_eta_amplitude: float = 0.5
    out: str = "out"
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.experiment is not None and self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if not self.omega > 0:
            raise ConfigError("omega must be positive")
        if not self.h > 0:
            raise ConfigError("h must be positive")
        if self.n_theta < 64:
            raise ConfigError("n_theta must be at least 64")
        if self.n_directions % 2 or self.n_theta % self.n_directions:
            raise ConfigError("n_directions must be even and divide n_theta")
        rho = np.asarray(self.rho, dtype=float)
        if rho.size == 0 or np.any(rho <= 0) or np.any(rho >= 1):
            raise ConfigError("rho values must lie in (0, 1)")
        if np.any(np.diff(rho) >= 0):
            raise ConfigError("rho list must be strictly decreasing")
        if self.profile not in ("gaussian", "poly"):
            raise ConfigError(f"unknown profile {self.profile!r}")
        if self.regular_shape not in ("kite", "disc", "ellipse", "none"):
            raise ConfigError(f"unknown regular shape {self.regular_shape!r}")
        if self.small_template not in ("disc", "ellipse", "kite"):
            raise ConfigError(f"unknown small template {self.small_template!r}")
        if not 0 < self.cloak_rho < self.cloak_r1 < self.cloak_r2:
            raise ConfigError("cloak radii must satisfy 0 < rho < r1 < r2")

    # -- derived objects

    def medium(self) -> BackgroundMedium:
        def prof(specs):
            if self.profile == "gaussian":
                bumps = tuple(GaussianBump(s.amplitude, s.width, s.center) for s in specs)
            else:
                bumps = tuple(PolyBump(s.amplitude, s.width, s.center) for s in specs)
            return Profile(bumps, self.domain_radius)

        return BackgroundMedium(prof(self.sigma_bumps), prof(self.eta_bumps))

    def regular_curves(self) -> list:
        c, s, n = self.regular_center, self.regular_scale, self.regular_nodes
        if self.regular_shape == "none":
            return []
        if self.regular_shape == "kite":
            return [geo.make_kite(c, s, n, label="G")]
        if self.regular_shape == "disc":
            return [geo.make_disc(c, s, n, label="G")]
        return [geo.make_ellipse(c, s, 0.6 * s, n, label="G")]

    def small_template_curve(self):
        n = self.small_nodes
        if self.small_template == "disc":
            return geo.make_disc((0.0, 0.0), 1.0, n)
        if self.small_template == "ellipse":
            return geo.make_ellipse((0.0, 0.0), 1.0, 0.6, n)
        # kite recentred so its bounding disc is about the origin
        return geo.make_kite((0.0, 0.0), 1.0 / 2.3, n)

    def obstacles(self) -> geo.ObstacleConfig:
        tpl = self.small_template_curve()
        small = tuple(geo.SmallObstacle(np.array(c, dtype=float), tpl) for c in self.small_centers)
        try:
            cfg = geo.ObstacleConfig(tuple(self.regular_curves()), small, self.d0_min)
            geo.scale_small_obstacles(cfg, float(max(self.rho)))
        except geo.GeometryError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    def incident_angles(self) -> np.ndarray:
        return self.incident_angle + 2 * np.pi * np.arange(self.n_directions) / self.n_directions

    def box(self):
        r = self.domain_radius
        return (-r, r, -r, r)


_KEYS = {
    # section, key -> field, parser
    ("run", "experiment"): ("experiment", str),
    ("run", "out"): ("out", str),
    ("experiment", "omega"): ("omega", float),
    ("experiment", "domain_radius"): ("domain_radius", float),
    ("experiment", "h"): ("h", float),
    ("experiment", "n_theta"): ("n_theta", int),
    ("experiment", "incident_angle"): ("incident_angle", float),
    ("experiment", "n_directions"): ("n_directions", int),
    ("experiment", "rho"): ("rho", "floats"),
    ("medium", "profile"): ("profile", str),
    ("medium", "sigma_bumps"): ("sigma_bumps", "bumps"),
    ("medium", "eta_bumps"): ("eta_bumps", "bumps"),
    ("regular", "shape"): ("regular_shape", str),
    ("regular", "center"): ("regular_center", "point"),
    ("regular", "scale"): ("regular_scale", float),
    ("regular", "nodes"): ("regular_nodes", int),
    ("small", "centers"): ("small_centers", "points"),
    ("small", "template"): ("small_template", str),
    ("small", "nodes"): ("small_nodes", int),
    ("small", "d0_min"): ("d0_min", float),
    ("cloak", "rho"): ("cloak_rho", float),
    ("cloak", "r1"): ("cloak_r1", float),
    ("cloak", "r2"): ("cloak_r2", float),
    ("cloak", "samples"): ("cloak_samples", int),
    ("oracles", "mie_omega"): ("mie_omega", float),
    ("oracles", "mie_radius"): ("mie_radius", float),
    ("oracles", "mie_nodes"): ("mie_nodes", int),
    ("oracles", "ls_h"): ("ls_h", "floats"),
    ("oracles", "ls_radius"): ("ls_radius", float),
    ("oracles", "ls_sigma_amplitude"): ("ls_sigma_amplitude", float),
    ("oracles", "ls_eta_amplitude"): ("ls_eta_amplitude", float),
}


def _parse_value(kind, text, name):
    try:
        if kind is str:
            return text.strip()
        if kind in (int, float):
            return kind(text)
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {text!r}") from exc
    if kind == "floats":
        return tuple(_floats(text, name))
    if kind == "point":
        vals = _floats(text, name)
        if len(vals) != 2:
            raise ConfigError(f"{name}: expected two numbers")
        return tuple(vals)
    if kind == "points":
        return tuple(_groups(text, 2, name))
    if kind == "bumps":
        return tuple(BumpSpec(a, w, (cx, cy)) for a, w, cx, cy in _groups(text, 4, name))
    raise AssertionError(kind)


def parse_config(text: str, overrides=None) -> ExperimentConfig:
    """Build a config from file text plus ``{"section.key": "value"}`` overrides."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc
    values = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            spec = _KEYS.get((section, key))
            if spec is None:
                raise ConfigError(f"unknown config key [{section}] {key}")
            values[spec[0]] = _parse_value(spec[1], raw, f"{section}.{key}")
    for dotted, raw in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        spec = _KEYS.get((section, key))
        if spec is None:
            raise ConfigError(f"unknown override {dotted}")
        values[spec[0]] = _parse_value(spec[1], str(raw), dotted)
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, overrides=None) -> ExperimentConfig:
    if path is None:
        text = resources.files("nearcloak").joinpath("data/default.ini").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **kw)
