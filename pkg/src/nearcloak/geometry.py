"""Parametrized closed curves, obstacle configurations and the volume grid.

Curves are 2pi-periodic, counterclockwise, and carry analytic first and
second derivatives so that the Nystrom quadrature in
:mod:`nearcloak.potentials` can be spectrally accurate. The outward unit
normal of a counterclockwise curve is ``(x2', -x1') / |x'|``.
"""

import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

CurveMap = Callable[[np.ndarray], np.ndarray]


class GeometryError(ValueError):
    """Invalid curve or obstacle configuration."""


@dataclass(frozen=True)
class BoundaryCurve:
    """Smooth closed curve ``t -> param(t)`` sampled at ``n_nodes`` nodes.

    ``param``, ``deriv1`` and ``deriv2`` map an array of parameters of shape
    ``(m,)`` to points of shape ``(m, 2)``.
    """

    param: CurveMap
    deriv1: CurveMap
    deriv2: CurveMap
    n_nodes: int
    label: str = ""

    def __post_init__(self):
        if self.n_nodes <= 0 or self.n_nodes % 2:
            raise GeometryError(f"n_nodes must be a positive even integer, got {self.n_nodes}")
        if np.any(self.speed <= 0):
            raise GeometryError("curve has a stationary point")

    @cached_property
    def t(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_nodes) / self.n_nodes

    @cached_property
    def points(self) -> np.ndarray:
        return np.asarray(self.param(self.t), dtype=float)

    @cached_property
    def d1(self) -> np.ndarray:
        return np.asarray(self.deriv1(self.t), dtype=float)

    @cached_property
    def d2(self) -> np.ndarray:
        return np.asarray(self.deriv2(self.t), dtype=float)

    @cached_property
    def speed(self) -> np.ndarray:
        return np.hypot(self.d1[:, 0], self.d1[:, 1])

    @cached_property
    def normals(self) -> np.ndarray:
        """Outward unit normals at the nodes."""
        return np.column_stack([self.d1[:, 1], -self.d1[:, 0]]) / self.speed[:, None]

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights for arc-length integration."""
        return self.speed * (2 * np.pi / self.n_nodes)

    @property
    def node_spacing(self) -> float:
        return float(np.max(self.weights))

    def perimeter(self) -> float:
        return float(np.sum(self.weights))

    def area(self) -> float:
        """Enclosed area via Green's theorem, ``(1/2) oint x dy - y dx``."""
        x, y = self.points.T
        dx, dy = self.d1.T
        return float(0.5 * np.sum((x * dy - y * dx)) * 2 * np.pi / self.n_nodes)

    def centroid(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def bounding_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.points - self.centroid(), axis=1)))

    def with_nodes(self, n_nodes: int) -> "BoundaryCurve":
        return BoundaryCurve(self.param, self.deriv1, self.deriv2, n_nodes, self.label)

    def translated(self, shift) -> "BoundaryCurve":
        shift = np.asarray(shift, dtype=float)
        p, d1, d2 = self.param, self.deriv1, self.deriv2
        return BoundaryCurve(lambda t: p(t) + shift, d1, d2, self.n_nodes, self.label)

    def contains(self, pts) -> np.ndarray:
        """Winding-number test; points on the node polygon count as inside."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.zeros(len(pts), dtype=bool)
        nodes = self.points
        for start in range(0, len(pts), 2048):
            block = pts[start : start + 2048]
            rel = nodes[None, :, :] - block[:, None, :]
            ang = np.arctan2(rel[..., 1], rel[..., 0])
            dang = np.diff(np.concatenate([ang, ang[:, :1]], axis=1), axis=1)
            dang = (dang + np.pi) % (2 * np.pi) - np.pi
            winding = np.abs(np.sum(dang, axis=1)) / (2 * np.pi)
            on_node = np.min(np.hypot(rel[..., 0], rel[..., 1]), axis=1) < 1e-14
            out[start : start + 2048] = (winding > 0.5) | on_node
        return out

    def distance_to(self, pts) -> np.ndarray:
        """Distance from points to the nearest node."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.empty(len(pts))
        for start in range(0, len(pts), 2048):
            block = pts[start : start + 2048]
            diff = block[:, None, :] - self.points[None, :, :]
            out[start : start + 2048] = np.min(np.hypot(diff[..., 0], diff[..., 1]), axis=1)
        return out


def _check_nodes(n_nodes, minimum=8):
    if int(n_nodes) != n_nodes or n_nodes < minimum or n_nodes % 2:
        raise GeometryError(f"n_nodes must be an even integer >= {minimum}, got {n_nodes}")


def make_disc(center, radius, n_nodes, label="disc") -> BoundaryCurve:
    if not radius > 0:
        raise GeometryError(f"radius must be positive, got {radius}")
    _check_nodes(n_nodes)
    c = np.asarray(center, dtype=float)
    r = float(radius)
    return BoundaryCurve(
        lambda t: c + r * np.column_stack([np.cos(t), np.sin(t)]),
        lambda t: r * np.column_stack([-np.sin(t), np.cos(t)]),
        lambda t: -r * np.column_stack([np.cos(t), np.sin(t)]),
        int(n_nodes),
        label,
    )


def make_ellipse(center, semi_x, semi_y, n_nodes, label="ellipse") -> BoundaryCurve:
    if not (semi_x > 0 and semi_y > 0):
        raise GeometryError("ellipse semi-axes must be positive")
    _check_nodes(n_nodes)
    c = np.asarray(center, dtype=float)
    a, b = float(semi_x), float(semi_y)
    return BoundaryCurve(
        lambda t: c + np.column_stack([a * np.cos(t), b * np.sin(t)]),
        lambda t: np.column_stack([-a * np.sin(t), b * np.cos(t)]),
        lambda t: -np.column_stack([a * np.cos(t), b * np.sin(t)]),
        int(n_nodes),
        label,
    )


def make_kite(center, scale, n_nodes, label="kite") -> BoundaryCurve:
    """Non-convex kite ``(cos t + 0.65 cos 2t - 0.65, 1.5 sin t)``."""
    if not scale > 0:
        raise GeometryError(f"scale must be positive, got {scale}")
    _check_nodes(n_nodes)
    c = np.asarray(center, dtype=float)
    s = float(scale)
    return BoundaryCurve(
        lambda t: c + s * np.column_stack([np.cos(t) + 0.65 * np.cos(2 * t) - 0.65, 1.5 * np.sin(t)]),
        lambda t: s * np.column_stack([-np.sin(t) - 1.3 * np.sin(2 * t), 1.5 * np.cos(t)]),
        lambda t: s * np.column_stack([-np.cos(t) - 2.6 * np.cos(2 * t), -1.5 * np.sin(t)]),
        int(n_nodes),
        label,
    )


def scaled_curve(template: BoundaryCurve, center, rho, label="") -> BoundaryCurve:
    """``center + rho * template``; the template is given about the origin."""
    c = np.asarray(center, dtype=float)
    p, d1, d2 = template.param, template.deriv1, template.deriv2
    return BoundaryCurve(
        lambda t: c + rho * p(t),
        lambda t: rho * d1(t),
        lambda t: rho * d2(t),
        template.n_nodes,
        label or template.label,
    )


@dataclass(frozen=True)
class SmallObstacle:
    center: np.ndarray
    template: BoundaryCurve


@dataclass(frozen=True)
class ObstacleConfig:
    """Regular obstacle components plus small components ``z_k + rho O_k``."""

    regular: tuple = ()
    small: tuple = ()
    d0_min: float = 0.0

    def __post_init__(self):
        centers = [np.asarray(s.center, dtype=float) for s in self.small]
        for i in range(len(centers)):
            for j in range(i + 1, len(centers)):
                d = float(np.linalg.norm(centers[i] - centers[j]))
                if d <= 0 or d < self.d0_min:
                    raise GeometryError(
                        f"small obstacle centers {i} and {j} are {d:.3g} apart (< d0_min={self.d0_min})"
                    )
        check_disjoint(list(self.regular))

    def translated(self, shift) -> "ObstacleConfig":
        shift = np.asarray(shift, dtype=float)
        return ObstacleConfig(
            tuple(c.translated(shift) for c in self.regular),
            tuple(SmallObstacle(np.asarray(s.center) + shift, s.template) for s in self.small),
            self.d0_min,
        )


def curves_overlap(a: BoundaryCurve, b: BoundaryCurve) -> bool:
    """Cheap overlap proxy for two closed curves.

    Bounding circles that do not intersect settle the question; otherwise
    the curves overlap if any node of one lies inside the other, or if their
    node sets come closer than the coarser node spacing.
    """
    gap = np.linalg.norm(a.centroid() - b.centroid())
    if gap > a.bounding_radius() + b.bounding_radius():
        return False
    if a.contains(b.points).any() or b.contains(a.points).any():
        return True
    return bool(np.min(a.distance_to(b.points)) < max(a.node_spacing, b.node_spacing))


def check_disjoint(curves: Sequence[BoundaryCurve]) -> None:
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            if curves_overlap(curves[i], curves[j]):
                raise GeometryError(
                    f"obstacle curves {curves[i].label or i!s} and {curves[j].label or j!s} overlap"
                )


def scale_small_obstacles(cfg: ObstacleConfig, rho: float) -> list:
    """Small obstacle boundaries ``z_k + rho * O_k``, checked for overlap."""
    if not rho > 0:
        raise GeometryError(f"rho must be positive, got {rho}")
    curves = [
        scaled_curve(s.template, s.center, rho, label=f"small{k}") for k, s in enumerate(cfg.small)
    ]
    check_disjoint(list(cfg.regular) + curves)
    return curves


@dataclass(frozen=True)
class VolumeGrid:
    """Uniform square cells covering the box; ``mask`` marks cells of Omega.

    Cell ``(i, j)`` has center ``(x0 + (i + 1/2) h, y0 + (j + 1/2) h)``.
    ``index`` holds the integer coordinates of the active cells, which
    define the ordering of the volume unknowns.
    """

    box: tuple
    h: float
    nx: int
    ny: int
    mask: np.ndarray = field(repr=False)
    domain_radius: float | None = None
    domain_center: tuple = (0.0, 0.0)

    @cached_property
    def all_centers(self) -> np.ndarray:
        x0, _, y0, _ = self.box
        ii, jj = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        return np.column_stack([x0 + (ii.ravel() + 0.5) * self.h, y0 + (jj.ravel() + 0.5) * self.h])

    @cached_property
    def index(self) -> np.ndarray:
        ii, jj = np.nonzero(self.mask)
        return np.column_stack([ii, jj])

    @cached_property
    def centers(self) -> np.ndarray:
        x0, _, y0, _ = self.box
        return np.column_stack(
            [x0 + (self.index[:, 0] + 0.5) * self.h, y0 + (self.index[:, 1] + 0.5) * self.h]
        )

    @property
    def n_cells(self) -> int:
        return int(self.mask.sum())

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    def cell_of(self, pts) -> np.ndarray:
        """Integer cell coordinates containing each point."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x0, _, y0, _ = self.box
        return np.floor((pts - [x0, y0]) / self.h).astype(int)


def build_grid(obstacles: Sequence[BoundaryCurve], box, h, domain_radius=None, domain_center=(0.0, 0.0)):
    """Uniform grid on ``box = (xmin, xmax, ymin, ymax)`` masked to Omega.

    Cells are dropped when their center lies inside an obstacle or, if
    ``domain_radius`` is given, outside the disc bounding the medium.
    """
    if not h > 0:
        raise GeometryError(f"cell size must be positive, got {h}")
    xmin, xmax, ymin, ymax = map(float, box)
    nx = int(round((xmax - xmin) / h))
    ny = int(round((ymax - ymin) / h))
    if nx < 1 or ny < 1:
        raise GeometryError("box smaller than one cell")
    box = (xmin, xmin + nx * h, ymin, ymin + ny * h)
    grid = VolumeGrid(box, float(h), nx, ny, np.ones((nx, ny), dtype=bool), domain_radius, tuple(domain_center))
    centers = grid.all_centers
    keep = np.ones(len(centers), dtype=bool)
    if domain_radius is not None:
        keep &= np.linalg.norm(centers - np.asarray(domain_center), axis=1) < domain_radius
    for curve in obstacles:
        if 2 * curve.bounding_radius() < h:
            warnings.warn(
                f"cell size {h} exceeds the diameter of obstacle {curve.label!r}; it is not resolved by the grid",
                stacklevel=2,
            )
        near = np.linalg.norm(centers - curve.centroid(), axis=1) <= curve.bounding_radius() + 1e-12
        if near.any():
            idx = np.nonzero(near)[0]
            keep[idx[curve.contains(centers[idx])]] = False
    mask = keep.reshape(nx, ny)
    logger.debug("grid %dx%d, h=%g: %d active cells", nx, ny, h, int(mask.sum()))
    return VolumeGrid(box, float(h), nx, ny, mask, domain_radius, tuple(domain_center))
