"""Discrete layer and volume potentials for the 2D Helmholtz kernel.

On-curve operators use the log-splitting Nystrom scheme on the ``2N``
equispaced nodes ``t_j = pi j / N``: a kernel
``K(t, tau) = K1(t, tau) ln(4 sin^2((t - tau)/2)) + K2(t, tau)`` is
integrated with the weights

    R_j(t) = -(2 pi / N) sum_{m=1}^{N-1} cos(m (t - t_j)) / m - (pi / N^2) cos(N (t - t_j))

for the log part and the trapezoid rule for ``K2``. Off-curve evaluation is
the trapezoid rule on the nodes; targets closer than a few node spacings
are handled on a trigonometrically upsampled copy of the curve.

The volume potential ``K psi(x) = int Phi(x, y) [1 - q(y)] psi(y) dy`` is
discretized with ``psi`` constant on each grid cell. Cells within index
distance :data:`NEAR_CELLS` of the target are integrated exactly (analytic
log part plus Gauss-Legendre on the smooth remainder), the rest by the
midpoint rule.
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import BoundaryCurve, VolumeGrid
from .kernels import EULER_GAMMA, bessel01, hankel_h0_h1, phi_smooth_part

logger = logging.getLogger(__name__)

NEAR_CELLS = 2
NEAR_SPACINGS = 5.0
MAX_UPSAMPLE = 256
_GL_ORDER = 8
_ROW_CHUNK = 512


@dataclass(frozen=True)
class LayerMatrix:
    """Dense layer operator from ``source`` node densities to target values."""

    kind: str
    source: str
    target: str
    matrix: np.ndarray

    def __matmul__(self, density):
        return self.matrix @ density

    @property
    def shape(self):
        return self.matrix.shape


def log_weights(n_nodes: int) -> np.ndarray:
    """Circulant matrix of the weights ``R_{|i-j|}(t_i)`` for ``2N = n_nodes``."""
    n = n_nodes // 2
    s = np.pi * np.arange(n_nodes) / n
    m = np.arange(1, n)
    r = -(2 * np.pi / n) * (np.cos(np.outer(s, m)) / m).sum(axis=1) - (np.pi / n**2) * np.cos(n * s)
    idx = (np.arange(n_nodes)[:, None] - np.arange(n_nodes)[None, :]) % n_nodes
    return r[idx]


def _pair_geometry(curve: BoundaryCurve):
    x = curve.points
    diff = x[:, None, :] - x[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    t = curve.t
    logsin = np.log(4 * np.sin((t[:, None] - t[None, :]) / 2) ** 2 + np.eye(len(t)))
    return diff, r, logsin


def single_layer_on(curve: BoundaryCurve, omega: float) -> LayerMatrix:
    """``S psi(x) = int Phi(x, y) psi(y) ds(y)`` at the nodes of ``curve``."""
    n2 = curve.n_nodes
    n = n2 // 2
    _, r, logsin = _pair_geometry(curve)
    speed = curve.speed
    off = ~np.eye(n2, dtype=bool)
    j0, _, y0, _ = bessel01(omega * r[off])
    m1 = np.zeros((n2, n2))
    m1[off] = -j0 / (4 * np.pi)
    m1[~off] = -1 / (4 * np.pi)
    m = np.zeros((n2, n2), dtype=complex)
    m[off] = 0.25j * (j0 + 1j * y0)
    m2 = m - m1 * logsin
    m2[~off] = 0.25j - EULER_GAMMA / (2 * np.pi) - np.log(omega * speed / 2) / (2 * np.pi)
    mat = (log_weights(n2) * m1 + (np.pi / n) * m2) * speed[None, :]
    return LayerMatrix("single", curve.label, curve.label, mat)


def double_layer_on(curve: BoundaryCurve, omega: float) -> LayerMatrix:
    """``D psi(x) = int dPhi(x, y)/dnu(y) psi(y) ds(y)`` at the nodes (principal value)."""
    n2 = curve.n_nodes
    n = n2 // 2
    diff, r, logsin = _pair_geometry(curve)
    d1, d2 = curve.d1, curve.d2
    # unnormalized normal, nu ds = nvec dtau
    nvec = np.column_stack([d1[:, 1], -d1[:, 0]])
    off = ~np.eye(n2, dtype=bool)
    proj = np.einsum("ijk,jk->ij", diff, nvec)
    ro = r[off]
    j0, j1, y0, y1 = bessel01(omega * ro)
    l_full = np.zeros((n2, n2), dtype=complex)
    l_full[off] = 0.25j * omega * (j1 + 1j * y1) * proj[off] / ro
    l1 = np.zeros((n2, n2))
    l1[off] = -(omega / (4 * np.pi)) * j1 * proj[off] / ro
    l2 = l_full - l1 * logsin
    l2[~off] = np.einsum("ij,ij->i", nvec, d2) / (4 * np.pi * curve.speed**2)
    mat = log_weights(n2) * l1 + (np.pi / n) * l2
    return LayerMatrix("double", curve.label, curve.label, mat)


def static_double_layer_on(curve: BoundaryCurve) -> LayerMatrix:
    """Laplace double layer at the nodes; its kernel is smooth on a C^2 curve."""
    n2 = curve.n_nodes
    diff, r, _ = _pair_geometry(curve)
    d1, d2 = curve.d1, curve.d2
    nvec = np.column_stack([d1[:, 1], -d1[:, 0]])
    proj = np.einsum("ijk,jk->ij", diff, nvec)
    off = ~np.eye(n2, dtype=bool)
    k = np.zeros((n2, n2))
    k[off] = proj[off] / (2 * np.pi * r[off] ** 2)
    k[~off] = np.einsum("ij,ij->i", nvec, d2) / (4 * np.pi * curve.speed**2)
    return LayerMatrix("double", curve.label, curve.label, k * (2 * np.pi / n2))


def combined_on(curve: BoundaryCurve, omega: float, kappa_scale=1.0) -> np.ndarray:
    """``D - i kappa S`` at the nodes."""
    return double_layer_on(curve, omega).matrix - 1j * kappa_scale * single_layer_on(curve, omega).matrix


def upsample_matrix(n_nodes: int, factor: int) -> np.ndarray:
    """Trigonometric interpolation from ``n_nodes`` to ``factor * n_nodes`` nodes.

    The Nyquist mode is split evenly between ``+N`` and ``-N`` so that real
    densities stay real.
    """
    if factor == 1:
        return np.eye(n_nodes)
    m = n_nodes * factor
    coef = np.fft.fft(np.eye(n_nodes), axis=0)
    padded = np.zeros((m, n_nodes), dtype=complex)
    half = n_nodes // 2
    padded[:half] = coef[:half]
    padded[-half + 1 :] = coef[half + 1 :]
    padded[half] = 0.5 * coef[half]
    padded[m - half] = 0.5 * coef[half]
    return np.real(np.fft.ifft(padded, axis=0)) * factor


def _kernel_rows(nodes, d1, targets, omega, kind):
    """Trapezoid-weighted kernel rows (per unit ``dtau``) at arbitrary targets."""
    diff = targets[:, None, :] - nodes[None, :, :]
    r = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(r == 0):
        raise ValueError("target coincides with a curve node")
    speed = np.hypot(d1[:, 0], d1[:, 1])
    if kind == "single":
        h0, _ = hankel_h0_h1(omega * r)
        return 0.25j * h0 * speed[None, :]
    nvec = np.column_stack([d1[:, 1], -d1[:, 0]])
    proj = diff[..., 0] * nvec[None, :, 0] + diff[..., 1] * nvec[None, :, 1]
    _, h1 = hankel_h0_h1(omega * r)
    return 0.25j * omega * h1 * proj / r


def _fine_distance(curve, targets, factor=16):
    fine = curve.with_nodes(curve.n_nodes * factor)
    return fine.distance_to(targets)


def layer_off(curve: BoundaryCurve, targets, kind, omega, kappa_scale=1.0, refine=True) -> LayerMatrix:
    """Layer potential of ``curve`` evaluated at off-curve ``targets``.

    Parameters
    ----------
    kind : {"single", "double", "combined"}
        ``"combined"`` is ``DL - i kappa_scale SL``.
    refine : bool
        Upsample the curve for targets within ``NEAR_SPACINGS`` node
        spacings. With ``refine=False`` such targets only trigger a warning.
    """
    if kind not in ("single", "double", "combined"):
        raise ValueError(f"unknown layer kind {kind!r}")
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    n2 = curve.n_nodes
    w = 2 * np.pi / n2
    spacing = curve.node_spacing
    dist = curve.distance_to(targets)
    if np.any(dist == 0):
        raise ValueError("layer potential evaluated exactly on a curve node")
    near = dist < NEAR_SPACINGS * spacing
    out = np.empty((len(targets), n2), dtype=complex)

    def rows(nodes, d1, pts):
        if kind == "combined":
            return _kernel_rows(nodes, d1, pts, omega, "double") - 1j * kappa_scale * _kernel_rows(
                nodes, d1, pts, omega, "single"
            )
        return _kernel_rows(nodes, d1, pts, omega, kind)

    far_idx = np.nonzero(~near)[0]
    for s in range(0, len(far_idx), _ROW_CHUNK):
        idx = far_idx[s : s + _ROW_CHUNK]
        out[idx] = rows(curve.points, curve.d1, targets[idx]) * w
    near_idx = np.nonzero(near)[0]
    if near_idx.size and not refine:
        warnings.warn(
            f"{near_idx.size} targets within {NEAR_SPACINGS} node spacings of curve {curve.label!r}; "
            "plain quadrature loses accuracy there",
            stacklevel=2,
        )
        out[near_idx] = rows(curve.points, curve.d1, targets[near_idx]) * w
    elif near_idx.size:
        dfine = _fine_distance(curve, targets[near_idx])
        if np.any(dfine < 1e-14):
            raise ValueError("layer potential evaluated on the curve")
        factors = np.clip(np.ceil(4.0 * spacing / dfine), 1, MAX_UPSAMPLE).astype(int)
        for f in np.unique(factors):
            idx = near_idx[factors == f]
            fine = curve.with_nodes(n2 * int(f))
            interp = upsample_matrix(n2, int(f))
            out[idx] = (rows(fine.points, fine.d1, targets[idx]) * (w / f)) @ interp
    return LayerMatrix(kind, curve.label, "points", out)


def cross_layer(source: BoundaryCurve, target: BoundaryCurve, omega, kappa_scale=1.0) -> np.ndarray:
    """``DL - i kappa SL`` from ``source`` densities to ``target`` nodes."""
    return layer_off(source, target.points, "combined", omega, kappa_scale).matrix


# ---------------------------------------------------------------- volume


def _log_antiderivative(u, v):
    """``F`` with ``d^2 F / du dv = ln(u^2 + v^2)``, continuous through the axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    r2 = u * u + v * v
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(r2 > 0, u * v * np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
        t3 = np.where(u != 0, u * u * np.arctan(v / np.where(u != 0, u, 1.0)), 0.0)
        t4 = np.where(v != 0, v * v * np.arctan(u / np.where(v != 0, v, 1.0)), 0.0)
    return t1 - 3 * u * v + t3 + t4


def log_rect_integral(x, lo, hi):
    """``int_{[lo_1, hi_1] x [lo_2, hi_2]} ln|x - y| dy`` for each row of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    a1 = np.asarray(lo)[..., 0] - x[:, 0]
    b1 = np.asarray(hi)[..., 0] - x[:, 0]
    a2 = np.asarray(lo)[..., 1] - x[:, 1]
    b2 = np.asarray(hi)[..., 1] - x[:, 1]
    f = _log_antiderivative
    return 0.5 * (f(b1, b2) - f(a1, b2) - f(b1, a2) + f(a1, a2))


def self_cell_log_moment(h: float) -> float:
    """``int_{[-h/2, h/2]^2} (1/2pi) ln(1/|y|) dy``."""
    return float(-log_rect_integral(np.zeros((1, 2)), (-h / 2, -h / 2), (h / 2, h / 2))[0] / (2 * np.pi))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)


def cell_integral(x, centers, h, omega):
    """``int_cell Phi(x, y) dy`` for paired rows of ``x`` and cell ``centers``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    lo = centers - h / 2
    hi = centers + h / 2
    log_part = -log_rect_integral(x, lo, hi) / (2 * np.pi)
    g = 0.5 * h * _GL_X
    qx = centers[:, None, None, 0] + g[None, :, None]
    qy = centers[:, None, None, 1] + g[None, None, :]
    r = np.hypot(qx - x[:, None, None, 0], qy - x[:, None, None, 1])
    smooth = phi_smooth_part(r, omega)
    ww = np.outer(_GL_W, _GL_W) * (h / 2) ** 2
    return log_part + np.einsum("njk,jk->n", smooth, ww)


def self_cell_integral(h, omega) -> complex:
    """Integral of ``Phi(0, y)`` over the cell centered at the origin."""
    return complex(cell_integral(np.zeros((1, 2)), np.zeros((1, 2)), h, omega)[0])


def lattice_table(grid: VolumeGrid, omega) -> np.ndarray:
    """``int_{cell (di, dj)} Phi(0, y) dy`` for all nonnegative index offsets.

    Offsets within :data:`NEAR_CELLS` use exact cell integrals, the rest the
    midpoint rule.
    """
    h = grid.h
    di, dj = np.meshgrid(np.arange(grid.nx), np.arange(grid.ny), indexing="ij")
    r = h * np.hypot(di, dj)
    table = np.empty(r.shape, dtype=complex)
    far = np.maximum(di, dj) > NEAR_CELLS
    h0, _ = hankel_h0_h1(omega * r[far])
    table[far] = 0.25j * h0 * h * h
    near = ~far
    cells = np.column_stack([di[near], dj[near]]) * h
    table[near] = cell_integral(np.zeros_like(cells), cells, h, omega)
    return table


def contrast_weights(grid: VolumeGrid, gauge) -> np.ndarray:
    """``1 - q`` at the active cell centers."""
    return np.asarray(gauge.contrast(grid.centers), dtype=float)


def volume_matrix(grid: VolumeGrid, gauge, targets=None, out=None, scale=1.0) -> np.ndarray:
    """Matrix of ``scale * K`` acting on cell values of ``psi``.

    ``targets=None`` evaluates at the active cell centers (square block);
    otherwise at arbitrary points. ``out`` lets callers fill a view of a
    larger preallocated array in place.
    """
    omega = gauge.omega
    weight = contrast_weights(grid, gauge) * scale
    if targets is None:
        n = grid.n_cells
        if out is None:
            out = np.empty((n, n), dtype=complex)
        table = lattice_table(grid, omega)
        idx = grid.index
        for s in range(0, n, _ROW_CHUNK):
            rows = idx[s : s + _ROW_CHUNK]
            di = np.abs(rows[:, None, 0] - idx[None, :, 0])
            dj = np.abs(rows[:, None, 1] - idx[None, :, 1])
            np.multiply(table[di, dj], weight[None, :], out=out[s : s + _ROW_CHUNK])
        return out
    return _volume_offgrid(grid, omega, np.atleast_2d(np.asarray(targets, dtype=float)), weight, out)


def _volume_offgrid(grid, omega, targets, weight, out):
    n_t = len(targets)
    centers = grid.centers
    h = grid.h
    if out is None:
        out = np.empty((n_t, grid.n_cells), dtype=complex)
    # lookup from cell coordinates to active-cell column
    lookup = -np.ones((grid.nx, grid.ny), dtype=np.int64)
    lookup[grid.index[:, 0], grid.index[:, 1]] = np.arange(grid.n_cells)
    for s in range(0, n_t, _ROW_CHUNK):
        pts = targets[s : s + _ROW_CHUNK]
        diff = pts[:, None, :] - centers[None, :, :]
        r = np.hypot(diff[..., 0], diff[..., 1])
        r = np.maximum(r, 1e-3 * h)
        h0, _ = hankel_h0_h1(omega * r)
        block = 0.25j * h0 * (h * h)
        own = grid.cell_of(pts)
        offs = np.arange(-NEAR_CELLS, NEAR_CELLS + 1)
        oi, oj = np.meshgrid(offs, offs, indexing="ij")
        ci = own[:, 0, None] + oi.ravel()[None, :]
        cj = own[:, 1, None] + oj.ravel()[None, :]
        inside = (ci >= 0) & (ci < grid.nx) & (cj >= 0) & (cj < grid.ny)
        col = np.full(ci.shape, -1, dtype=np.int64)
        col[inside] = lookup[ci[inside], cj[inside]]
        row_id, k = np.nonzero(col >= 0)
        cols = col[row_id, k]
        if cols.size:
            block[row_id, cols] = cell_integral(pts[row_id], centers[cols], h, omega)
        out[s : s + len(pts)] = block * weight[None, :]
    return out
