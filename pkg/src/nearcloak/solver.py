"""Coupled volume/boundary integral system for sound-soft scattering.

Unknowns are the gauge-level field ``v`` on the cells of Omega and
densities ``psi`` on every obstacle boundary. With the representation

    v = v_i - omega^2 K v + sum_c (DL_c - i kappa_c SL_c) psi_c

(``kappa_c = 1`` on the regular obstacle, the coupling parameter on the
small ones) the rows are

    v + omega^2 K v - sum_c (DL_c - i kappa_c SL_c) psi_c = v_i          on Omega
    psi_c + 2 (D - i kappa S) psi_c - 2 omega^2 gamma K v + 2 cross = -2 v_i   on curve c

which is the ``(A + K) u = p`` normalization.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgWarning, lapack, lu_factor, lu_solve

from .geometry import BoundaryCurve, VolumeGrid
from .media import GaugePotential
from .potentials import combined_on, cross_layer, layer_off, volume_matrix

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
RESIDUAL_LIMIT = 1e-10
_EVAL_CHUNK = 256


class SolverError(RuntimeError):
    """Factorization failed or the solve did not meet its residual contract."""


class NearResonanceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CouplingParam:
    """``e(rho)`` magnitude and ``kappa = 1 / e(rho)``.

    2D: ``e = 1 / |ln rho|``; 3D: ``e = rho``.
    """

    rho: float
    dim: int = 2

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")

    @property
    def e_rho(self) -> float:
        return 1.0 / abs(np.log(self.rho)) if self.dim == 2 else self.rho

    @property
    def kappa(self) -> float:
        return 1.0 / self.e_rho


def directions_to_xi(thetas, omega):
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    return omega * np.column_stack([np.cos(thetas), np.sin(thetas)])


def incident_plane_wave(xi, points, omega=None):
    """``exp(i x . xi)``; ``xi`` of shape ``(2,)`` or ``(m, 2)`` gives ``(n,)`` or ``(n, m)``."""
    xi = np.asarray(xi, dtype=float)
    if omega is not None and np.any(np.abs(np.linalg.norm(np.atleast_2d(xi), axis=1) - omega) > 1e-12):
        raise ValueError("|xi| must equal omega")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.exp(1j * points @ xi.T)


@dataclass(frozen=True)
class Layout:
    """Everything the post-processing needs, without the dense matrix."""

    gauge: GaugePotential
    grid: VolumeGrid | None
    sigma_curves: tuple
    gamma_curves: tuple
    coupling: CouplingParam | None

    @property
    def omega(self) -> float:
        return self.gauge.omega

    @property
    def n_cells(self) -> int:
        return 0 if self.grid is None else self.grid.n_cells

    @property
    def curves(self) -> list:
        return list(self.sigma_curves) + list(self.gamma_curves)

    @property
    def kappas(self) -> list:
        k = self.coupling.kappa if self.coupling is not None else 1.0
        return [1.0] * len(self.sigma_curves) + [k] * len(self.gamma_curves)

    def curve_slices(self) -> list:
        out, start = [], self.n_cells
        for c in self.curves:
            out.append(slice(start, start + c.n_nodes))
            start += c.n_nodes
        return out

    @property
    def size(self) -> int:
        return self.n_cells + sum(c.n_nodes for c in self.curves)


@dataclass
class BlockSystem:
    layout: Layout
    matrix: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)
    xi: np.ndarray


def _rhs(layout: Layout, xi) -> np.ndarray:
    xi = np.atleast_2d(xi)
    parts = []
    if layout.grid is not None:
        parts.append(incident_plane_wave(xi, layout.grid.centers))
    for c in layout.curves:
        parts.append(-2.0 * incident_plane_wave(xi, c.points))
    return np.vstack(parts)


def _assemble(layout: Layout, xi) -> BlockSystem:
    omega = layout.omega
    n = layout.size
    nv = layout.n_cells
    slices = layout.curve_slices()
    kappas = layout.kappas
    curves = layout.curves
    mat = np.zeros((n, n), dtype=complex)
    if nv:
        grid = layout.grid
        volume_matrix(grid, layout.gauge, out=mat[:nv, :nv], scale=omega**2)
        mat[np.arange(nv), np.arange(nv)] += 1.0
        for c, s, k in zip(curves, slices, kappas):
            mat[:nv, s] = -layer_off(c, grid.centers, "combined", omega, k).matrix
    for ct, st in zip(curves, slices):
        if nv:
            mat[st, :nv] = volume_matrix(layout.grid, layout.gauge, targets=ct.points, scale=-2.0 * omega**2)
        for cs, ss, k in zip(curves, slices, kappas):
            if cs is ct:
                block = 2.0 * combined_on(cs, omega, k)
                block[np.diag_indices_from(block)] += 1.0
                mat[st, ss] = block
            else:
                mat[st, ss] = 2.0 * cross_layer(cs, ct, omega, k)
    logger.info("assembled %d x %d system (%d cells, %d curves)", n, n, nv, len(curves))
    return BlockSystem(layout, mat, _rhs(layout, xi), np.atleast_2d(xi))


def _check_curves(curves):
    for c in curves:
        if not isinstance(c, BoundaryCurve):
            raise TypeError("curves must be BoundaryCurve instances")


def assemble_full(gauge, grid, sigma_curves, gamma_curves, coupling: CouplingParam, xi) -> BlockSystem:
    """System with the regular obstacle ``Sigma`` and the small boundaries ``Gamma_rho``."""
    _check_curves(list(sigma_curves) + list(gamma_curves))
    layout = Layout(gauge, grid, tuple(sigma_curves), tuple(gamma_curves), coupling)
    return _assemble(layout, xi)


def assemble_reference(gauge, grid, sigma_curves, xi) -> BlockSystem:
    """System without small obstacles; ``grid`` should cover ``B`` minus ``G`` only."""
    _check_curves(sigma_curves)
    return _assemble(Layout(gauge, grid, tuple(sigma_curves), (), None), xi)


def a_factor_blocks(layout: Layout):
    """Row-1 double-layer blocks ``DL_{c, Omega}`` of the triangular factor ``A``."""
    return [layer_off(c, layout.grid.centers, "double", layout.omega).matrix for c in layout.curves]


def a_factor(layout: Layout, inverse=False) -> np.ndarray:
    """``A = [[I, -DL_Sigma, -DL_Gamma], [0, I, 0], [0, 0, I]]`` or its explicit inverse.

    The inverse is the same matrix with the sign of the double-layer
    blocks flipped.
    """
    n = layout.size
    nv = layout.n_cells
    a = np.eye(n, dtype=complex)
    sign = 1.0 if inverse else -1.0
    for block, s in zip(a_factor_blocks(layout), layout.curve_slices()):
        a[:nv, s] = sign * block
    return a


@dataclass(frozen=True)
class SolutionBundle:
    """Solved unknowns; trailing axis runs over incident directions."""

    layout: Layout
    xi: np.ndarray
    v: np.ndarray = field(repr=False)
    densities: tuple = field(repr=False)
    residual: float = 0.0
    condition: float = 1.0

    @property
    def psi1(self) -> np.ndarray:
        k = len(self.layout.sigma_curves)
        return np.concatenate(self.densities[:k], axis=0) if k else np.zeros((0, len(self.xi)))

    @property
    def psi2(self) -> np.ndarray:
        k = len(self.layout.sigma_curves)
        rest = self.densities[k:]
        return np.concatenate(rest, axis=0) if rest else np.zeros((0, len(self.xi)))

    @property
    def near_resonant(self) -> bool:
        return self.condition > CONDITION_LIMIT

    def column(self, j) -> "SolutionBundle":
        return SolutionBundle(
            self.layout,
            self.xi[j : j + 1],
            self.v[:, j : j + 1],
            tuple(d[:, j : j + 1] for d in self.densities),
            self.residual,
            self.condition,
        )


def _row_abs_sum_max(mat):
    best = 0.0
    for s in range(0, mat.shape[0], 1024):
        best = max(best, float(np.abs(mat[s : s + 1024]).sum(axis=1).max()))
    return best


def solve(system: BlockSystem, check_residual=True) -> SolutionBundle:
    """Dense LU solve of every right-hand side against one factorization.

    The matrix is factored in place; ``system.matrix`` is released
    afterwards. Raises :class:`SolverError` on singular factors or a
    residual above ``RESIDUAL_LIMIT``; a condition estimate above
    ``CONDITION_LIMIT`` is reported through :class:`NearResonanceWarning`
    and ``bundle.near_resonant``.
    """
    mat = system.matrix
    rhs = system.rhs
    keep = mat.copy() if check_residual else None
    anorm = _row_abs_sum_max(mat)
    with warnings.catch_warnings():
        warnings.simplefilter("error", LinAlgWarning)
        try:
            # mat.T is Fortran ordered, so this factors in place
            lu, piv = lu_factor(mat.T, overwrite_a=True, check_finite=False)
        except (LinAlgWarning, ValueError, np.linalg.LinAlgError) as exc:
            raise SolverError(f"factorization failed: {exc}") from exc
    system.matrix = None
    gecon = lapack.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    condition = np.inf if rcond == 0 else 1.0 / rcond
    sol = lu_solve((lu, piv), rhs, trans=1, check_finite=False)
    del lu
    residual = 0.0
    if keep is not None:
        r = keep @ sol - rhs
        residual = float(np.max(np.linalg.norm(r, axis=0) / np.linalg.norm(rhs, axis=0)))
        del keep
        if residual > RESIDUAL_LIMIT:
            raise SolverError(f"relative residual {residual:.3e} exceeds {RESIDUAL_LIMIT:g}")
    if condition > CONDITION_LIMIT:
        warnings.warn(
            f"condition estimate {condition:.3e} above {CONDITION_LIMIT:g}: near-resonant configuration",
            NearResonanceWarning,
            stacklevel=2,
        )
    layout = system.layout
    nv = layout.n_cells
    dens = tuple(sol[s] for s in layout.curve_slices())
    logger.info("solved: residual %.2e, condition %.2e", residual, condition)
    return SolutionBundle(layout, system.xi, sol[:nv], dens, residual, float(condition))


def _check_outside(layout: Layout, points):
    for c in layout.curves:
        if np.any(c.contains(points)):
            raise ValueError(f"evaluation point inside obstacle {c.label!r}")


def reconstruct_field(bundle: SolutionBundle, points, check=True) -> np.ndarray:
    """Total gauge-level field ``v`` at ``points`` from the representation formula.

    Returns shape ``(n_points, n_directions)``.
    """
    layout = bundle.layout
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if check:
        _check_outside(layout, points)
    omega = layout.omega
    out = incident_plane_wave(bundle.xi, points)
    for s in range(0, len(points), _EVAL_CHUNK):
        pts = points[s : s + _EVAL_CHUNK]
        acc = np.zeros((len(pts), len(bundle.xi)), dtype=complex)
        if layout.n_cells:
            acc -= volume_matrix(layout.grid, layout.gauge, targets=pts, scale=omega**2) @ bundle.v
        for c, k, d in zip(layout.curves, layout.kappas, bundle.densities):
            acc += layer_off(c, pts, "combined", omega, k).matrix @ d
        out[s : s + _EVAL_CHUNK] += acc
    return out


def physical_field(bundle: SolutionBundle, points, check=True) -> np.ndarray:
    """``u = sigma0^{-1/2} v``."""
    v = reconstruct_field(bundle, points, check)
    return v / bundle.layout.gauge.sqrt_sigma(np.atleast_2d(points))[:, None]
