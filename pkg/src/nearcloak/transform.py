"""Radial blow-up map and the transformed-PDE residual of pulled-back fields.

The map sends the annulus ``rho <= |x - z| <= r2`` onto
``r1 <= |x~ - z| <= r2`` by ``x~ = z + (a + b |x - z|) (x - z) / |x - z|``
with ``a = (r1 - rho) r2 / (r2 - rho)`` and ``b = (r2 - r1) / (r2 - rho)``,
so the outer circle is fixed pointwise.
"""

from dataclasses import dataclass

import numpy as np

from .media import push_forward_media


class MapDomainError(ValueError):
    """Point outside the annulus on which the map is defined."""


_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class BlowupMap:
    center: tuple
    rho: float
    r1: float
    r2: float

    def __post_init__(self):
        if not 0 < self.rho <= self.r1 < self.r2:
            raise ValueError(f"need 0 < rho <= r1 < r2, got rho={self.rho}, r1={self.r1}, r2={self.r2}")

    @property
    def a(self) -> float:
        return (self.r1 - self.rho) * self.r2 / (self.r2 - self.rho)

    @property
    def b(self) -> float:
        return (self.r2 - self.r1) / (self.r2 - self.rho)

    def _polar(self, x):
        d = np.asarray(x, dtype=float) - np.asarray(self.center, dtype=float)
        r = np.sqrt(np.sum(d * d, axis=-1))
        return d, r

    def forward(self, x):
        d, r = self._polar(x)
        if np.any(r < self.rho * (1 - _EDGE_TOL)) or np.any(r > self.r2 * (1 + _EDGE_TOL)):
            raise MapDomainError("forward map defined only for rho <= |x - z| <= r2")
        scale = (self.a + self.b * r) / r
        return np.asarray(self.center, dtype=float) + d * scale[..., None]

    def inverse(self, x_tilde):
        d, r = self._polar(x_tilde)
        if np.any(r < self.r1 * (1 - _EDGE_TOL)) or np.any(r > self.r2 * (1 + _EDGE_TOL)):
            raise MapDomainError("inverse map defined only for r1 <= |x~ - z| <= r2")
        r_pre = (r - self.a) / self.b
        return np.asarray(self.center, dtype=float) + d * (r_pre / r)[..., None]

    def jacobian(self, x):
        """``(M, J)`` with ``M = d x~ / d x`` and ``J = det M``.

        ``M = b e e^T + ((a + b r) / r)(I - e e^T)`` with ``e`` the radial
        unit vector.
        """
        d, r = self._polar(x)
        if np.any(r == 0):
            raise MapDomainError("Jacobian is singular at the map center")
        e = d / r[..., None]
        ee = e[..., :, None] * e[..., None, :]
        tang = (self.a + self.b * r) / r
        eye = np.eye(2)
        m = self.b * ee + tang[..., None, None] * (eye - ee)
        j = self.b * tang
        return m, j

    def in_image(self, x_tilde, margin=0.0):
        _, r = self._polar(x_tilde)
        return (r >= self.r1 + margin) & (r <= self.r2 - margin)


# center, +-2s e1, +-2s e2, then the four diagonal corners (+-s, +-s)
_OFFSETS = np.array(
    [[0, 0], [2, 0], [-2, 0], [0, 2], [0, -2], [1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float
)
# flux sample points at +-s e1, +-s e2
_FLUX_OFFSETS = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=float)


def pde_residual(u, sigma, eta, omega, points, step):
    """``div(sigma grad u) + omega^2 eta u`` by nested central differences.

    Parameters
    ----------
    u : callable
        Field, ``(n, 2) -> (n,)``.
    sigma : callable
        Conductivity tensor, ``(n, 2) -> (n, 2, 2)``.
    eta : callable
        ``(n, 2) -> (n,)``.
    points : (n, 2) array
    step : float
        ``s``; the flux ``sigma grad u`` is formed at ``x +- s e_i`` from
        central differences of width ``2s`` and then differenced again, so
        the result is second order in ``s`` for smooth coefficients.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    sten = points[:, None, :] + step * _OFFSETS[None]
    uv = np.asarray(u(sten.reshape(-1, 2))).reshape(n, 9)
    c, xp, xm, yp, ym, pp, pm, mp, mm = range(9)
    w = 2.0 * step
    # gradient components at +s e1, -s e1, +s e2, -s e2
    gx = np.stack([(uv[:, xp] - uv[:, c]) / w, (uv[:, c] - uv[:, xm]) / w,
                   (uv[:, pp] - uv[:, mp]) / w, (uv[:, pm] - uv[:, mm]) / w], axis=1)
    gy = np.stack([(uv[:, pp] - uv[:, pm]) / w, (uv[:, mp] - uv[:, mm]) / w,
                   (uv[:, yp] - uv[:, c]) / w, (uv[:, c] - uv[:, ym]) / w], axis=1)
    fpts = points[:, None, :] + step * _FLUX_OFFSETS[None]
    s = np.asarray(sigma(fpts.reshape(-1, 2))).reshape(n, 4, 2, 2)
    fx = s[..., 0, 0] * gx + s[..., 0, 1] * gy
    fy = s[..., 1, 0] * gx + s[..., 1, 1] * gy
    div = (fx[:, 0] - fx[:, 1]) / w + (fy[:, 2] - fy[:, 3]) / w
    return div + omega**2 * np.asarray(eta(points)) * uv[:, c]


def pullback_residual(u, medium, blowup, omega, points_tilde, step):
    """Residual of ``u o F^{-1}`` in the transformation medium.

    ``u`` solves the untransformed equation near the preimages; the returned
    values are ``div(sigma~ grad u~) + omega^2 eta~ u~`` at ``points_tilde``.
    All stencil points must lie in the image annulus.
    """
    def u_t(xt):
        return u(blowup.inverse(xt))

    def sig_t(xt):
        return push_forward_media(medium, blowup, xt)[0]

    def eta_t(xt):
        return push_forward_media(medium, blowup, xt)[1]

    return pde_residual(u_t, sig_t, eta_t, omega, points_tilde, step)


def isotropic_residual(u, medium, omega, points, step):
    """Same stencil applied to the untransformed medium ``{sigma0 I, eta0}``."""
    eye = np.eye(2)

    def sig(x):
        return medium.sigma0.value(x)[..., None, None] * eye

    return pde_residual(u, sig, medium.eta0.value, omega, points, step)


def stencil_radius(step) -> float:
    """Largest distance from a sample point touched by :func:`pde_residual`."""
    return 2.0 * step
