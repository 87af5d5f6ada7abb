"""Isotropic background media and the gauge reduction to Schrodinger form.

A medium is ``sigma0 = 1 + sum(bumps)``, ``eta0 = 1 + sum(bumps)``, cut off
to exactly 1 outside a support disc. Each bump supplies its value, gradient
and Laplacian in closed form, so the gauge term
``gamma0 = sigma0^{-1/2} Laplacian(sigma0^{1/2})`` needs no numerical
differentiation:

    gamma0 = Laplacian(sigma0) / (2 sigma0) - |grad sigma0|^2 / (4 sigma0^2)
"""

from dataclasses import dataclass, field

import numpy as np


class MediumError(ValueError):
    """Medium parameters violate positivity or support assumptions."""


@dataclass(frozen=True)
class GaussianBump:
    """``amplitude * exp(-|x - center|^2 / width^2)``."""

    amplitude: float
    width: float
    center: tuple = (0.0, 0.0)

    def _rel(self, x):
        return np.asarray(x, dtype=float) - np.asarray(self.center, dtype=float)

    def value(self, x):
        d = self._rel(x)
        return self.amplitude * np.exp(-np.sum(d * d, axis=-1) / self.width**2)

    def gradient(self, x):
        d = self._rel(x)
        return (-2.0 / self.width**2) * d * self.value(x)[..., None]

    def laplacian(self, x):
        d = self._rel(x)
        r2 = np.sum(d * d, axis=-1)
        w2 = self.width**2
        return (4.0 * r2 / w2**2 - 4.0 / w2) * self.value(x)


@dataclass(frozen=True)
class PolyBump:
    """``amplitude * (1 - |x - center|^2 / radius^2)^4`` inside the disc, 0 outside.

    C^3 across the edge of its support.
    """

    amplitude: float
    radius: float
    center: tuple = (0.0, 0.0)

    def _parts(self, x):
        d = np.asarray(x, dtype=float) - np.asarray(self.center, dtype=float)
        s = np.sum(d * d, axis=-1) / self.radius**2
        w = np.clip(1.0 - s, 0.0, None)
        return d, s, w

    def value(self, x):
        _, _, w = self._parts(x)
        return self.amplitude * w**4

    def gradient(self, x):
        d, _, w = self._parts(x)
        return (-8.0 * self.amplitude / self.radius**2) * (w**3)[..., None] * d

    def laplacian(self, x):
        _, s, w = self._parts(x)
        r2 = self.radius**2
        # f(s) = A (1-s)^4, Lap s = 4/R^2, |grad s|^2 = 4 s / R^2
        return self.amplitude * (-4.0 * w**3 * 4.0 / r2 + 12.0 * w**2 * 4.0 * s / r2)


@dataclass(frozen=True)
class Profile:
    """``1 + sum(bumps)`` inside the support disc, exactly 1 outside."""

    bumps: tuple = ()
    support_radius: float = np.inf
    support_center: tuple = (0.0, 0.0)

    def _inside(self, x):
        d = np.asarray(x, dtype=float) - np.asarray(self.support_center, dtype=float)
        return np.sum(d * d, axis=-1) < self.support_radius**2

    def value(self, x):
        x = np.asarray(x, dtype=float)
        total = np.ones(x.shape[:-1])
        for b in self.bumps:
            total = total + b.value(x)
        return np.where(self._inside(x), total, 1.0)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape)
        for b in self.bumps:
            total = total + b.gradient(x)
        return np.where(self._inside(x)[..., None], total, 0.0)

    def laplacian(self, x):
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape[:-1])
        for b in self.bumps:
            total = total + b.laplacian(x)
        return np.where(self._inside(x), total, 0.0)


@dataclass(frozen=True)
class BackgroundMedium:
    """Isotropic medium ``{R^2; sigma0 I, eta0}``."""

    sigma0: Profile = field(default_factory=Profile)
    eta0: Profile = field(default_factory=Profile)

    @classmethod
    def homogeneous(cls):
        return cls()

    @property
    def is_homogeneous(self) -> bool:
        return not self.sigma0.bumps and not self.eta0.bumps

    def support(self):
        """Smallest disc ``(center, radius)`` outside which both fields are 1."""
        if self.is_homogeneous:
            return (0.0, 0.0), 0.0
        radii = []
        for p in (self.sigma0, self.eta0):
            if p.bumps:
                radii.append((p.support_center, p.support_radius))
        return max(radii, key=lambda cr: cr[1])

    def validate(self, pts):
        s = self.sigma0.value(pts)
        e = self.eta0.value(pts)
        if np.any(s <= 0):
            raise MediumError(f"sigma0 is not positive (min {s.min():.3g})")
        if np.any(e <= 0):
            raise MediumError(f"eta0 is not positive (min {e.min():.3g})")


def gamma0(medium: BackgroundMedium, x):
    """``sigma0^{-1/2} Laplacian(sigma0^{1/2})``."""
    s = medium.sigma0.value(x)
    if np.any(s <= 0):
        raise MediumError("sigma0 must be positive where the gauge term is evaluated")
    g = medium.sigma0.gradient(x)
    lap = medium.sigma0.laplacian(x)
    return lap / (2.0 * s) - np.sum(g * g, axis=-1) / (4.0 * s * s)


@dataclass(frozen=True)
class GaugePotential:
    """Reduced coefficient ``q`` of ``(Delta + omega^2 q) v = 0`` with ``v = sigma0^{1/2} u``."""

    medium: BackgroundMedium
    omega: float

    def q(self, x):
        x = np.asarray(x, dtype=float)
        s = self.medium.sigma0.value(x)
        if np.any(s <= 0):
            raise MediumError("sigma0 must be positive")
        return self.medium.eta0.value(x) / s - gamma0(self.medium, x) / self.omega**2

    def gamma0(self, x):
        return gamma0(self.medium, x)

    def contrast(self, x):
        """``1 - q``, the weight of the volume potential."""
        return 1.0 - self.q(x)

    def sqrt_sigma(self, x):
        return np.sqrt(self.medium.sigma0.value(x))

    @property
    def is_trivial(self) -> bool:
        return self.medium.is_homogeneous


def gauge_reduce(medium: BackgroundMedium, omega: float) -> GaugePotential:
    if not omega > 0:
        raise MediumError(f"omega must be positive, got {omega}")
    return GaugePotential(medium, float(omega))


def push_forward_media(medium: BackgroundMedium, blowup, x_tilde):
    """Transformation medium ``(M sigma M^T / J, eta / J)`` at ``x = F^{-1}(x_tilde)``.

    Returns ``(sigma_tilde, eta_tilde)`` with shapes ``(..., 2, 2)`` and ``(...)``.
    """
    x = blowup.inverse(x_tilde)
    m, j = blowup.jacobian(x)
    if np.any(j <= 0):
        raise MediumError("push-forward requires an orientation-preserving map")
    s = medium.sigma0.value(x)
    sigma_t = s[..., None, None] * np.einsum("...ik,...jk->...ij", m, m) / j[..., None, None]
    eta_t = medium.eta0.value(x) / j
    return sigma_t, eta_t
