"""Scattering amplitudes, their L2 distances, and analytic oracles.

The amplitude ``A`` is the coefficient in

    u^s(x) = e^{i omega |x|} / |x|^{1/2} A(theta) + O(|x|^{-3/2}),   theta = x / |x|.

From ``Phi(x, y) ~ tau0 e^{i omega |x|} / |x|^{1/2} e^{-i omega theta . y}`` with
``tau0 = e^{i pi/4} / sqrt(8 pi omega)``, each term of the integral
representation contributes ``tau0`` times the corresponding integral of
``e^{-i omega theta . y}``.

For a sound-soft disc of radius ``a`` the separation of variables gives
``u^s = -sum_m i^m J_m(ka)/H_m(ka) H_m(k r) e^{i m (phi - theta')}``; using
``H_m(z) ~ sqrt(2/(pi z)) e^{i(z - m pi/2 - pi/4)}`` the ``i^m`` cancels and

    A(theta) = sqrt(2 / (pi k)) e^{-i pi/4} sum_m -J_m(ka)/H_m(ka) e^{i m (theta - theta')}.

The optical theorem in this normalization reads

    int_0^{2 pi} |A|^2 dtheta = -2 sqrt(2 pi / k) Re(e^{i pi/4} A(theta', theta')).
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .kernels import bessel_jy_orders


class SamplingMismatch(ValueError):
    pass


def tau0(omega: float) -> complex:
    return np.exp(1j * np.pi / 4) / np.sqrt(8 * np.pi * omega)


def uniform_thetas(m: int) -> np.ndarray:
    return 2 * np.pi * np.arange(m) / m


@dataclass(frozen=True)
class FarField:
    thetas: np.ndarray
    values: np.ndarray
    omega: float
    theta_prime: float

    def __post_init__(self):
        if len(self.thetas) < 8:
            raise ValueError("far field needs at least 8 samples")
        if self.values.shape != self.thetas.shape:
            raise ValueError("values and thetas differ in shape")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite far-field values")

    def __sub__(self, other):
        _check_same(self, other)
        return FarField(self.thetas, self.values - other.values, self.omega, self.theta_prime)


def _check_same(a: FarField, b: FarField):
    if a.thetas.shape != b.thetas.shape or not np.allclose(a.thetas, b.thetas, rtol=0, atol=1e-10):
        raise SamplingMismatch("far fields sampled at different angles")
    if abs(a.omega - b.omega) > 1e-14:
        raise SamplingMismatch("far fields at different frequencies")


def _amplitudes(bundle, thetas):
    """``(M, n_directions)`` amplitudes of a solved bundle."""
    layout = bundle.layout
    omega = layout.omega
    thetas = np.asarray(thetas, dtype=float)
    dirs = np.column_stack([np.cos(thetas), np.sin(thetas)])
    acc = np.zeros((len(thetas), len(bundle.xi)), dtype=complex)
    if layout.n_cells:
        grid = layout.grid
        y = grid.centers
        w = layout.gauge.contrast(y) * grid.cell_area
        e = np.exp(-1j * omega * dirs @ y.T)
        acc += -(omega**2) * (e * w[None, :]) @ bundle.v
    for c, k, d in zip(layout.curves, layout.kappas, bundle.densities):
        e = np.exp(-1j * omega * dirs @ c.points.T)
        nd = dirs @ c.normals.T
        kern = (-1j * omega * nd - 1j * k) * e * c.weights[None, :]
        acc += kern @ d
    return tau0(omega) * acc


def _theta_prime(xi):
    return float(np.arctan2(xi[1], xi[0]) % (2 * np.pi))


def farfield_all(bundle, thetas) -> list:
    """One :class:`FarField` per incident direction of ``bundle``."""
    amps = _amplitudes(bundle, thetas)
    omega = bundle.layout.omega
    return [FarField(np.asarray(thetas, dtype=float), amps[:, j], omega, _theta_prime(bundle.xi[j])) for j in range(amps.shape[1])]


def farfield_full(bundle, thetas) -> FarField:
    if bundle.layout.coupling is None and bundle.layout.gamma_curves:
        raise ValueError("bundle has small obstacles but no coupling parameter")
    return farfield_all(bundle, thetas)[0]


def farfield_reference(bundle, thetas) -> FarField:
    if bundle.layout.gamma_curves:
        raise ValueError("reference bundle must not contain small obstacles")
    return farfield_all(bundle, thetas)[0]


def l2_diff(a: FarField, b: FarField) -> float:
    """``(2 pi / M sum |A1 - A2|^2)^{1/2}``."""
    _check_same(a, b)
    m = len(a.thetas)
    return float(np.sqrt(2 * np.pi / m * np.sum(np.abs(a.values - b.values) ** 2)))


def l2_norm(a: FarField) -> float:
    return float(np.sqrt(2 * np.pi / len(a.thetas) * np.sum(np.abs(a.values) ** 2)))


def mie_coefficients(radius, omega, n_modes=None):
    """``-J_m(ka) / H_m(ka)`` for ``m = 0..n_modes``; grows ``n_modes`` until the tail is below 1e-14."""
    ka = omega * radius
    if n_modes is None:
        n_modes = int(np.ceil(ka)) + 20
    if n_modes < ka + 20:
        raise ValueError("n_modes must be at least omega * radius + 20")
    while True:
        jn, yn = bessel_jy_orders(n_modes, ka)
        coef = -jn / (jn + 1j * yn)
        if abs(coef[-1]) < 1e-14:
            return coef
        n_modes += 10


def mie_disc_oracle(radius, omega, theta_prime, thetas, n_modes=None) -> FarField:
    """Sound-soft disc centred at the origin in a homogeneous medium."""
    coef = mie_coefficients(radius, omega, n_modes)
    thetas = np.asarray(thetas, dtype=float)
    m = np.arange(1, len(coef))
    ang = thetas - theta_prime
    series = coef[0] + 2 * np.cos(np.outer(ang, m)) @ coef[1:]
    amp = np.sqrt(2 / (np.pi * omega)) * np.exp(-0.25j * np.pi) * series
    return FarField(thetas, amp, float(omega), float(theta_prime))


def optical_theorem_check(a: FarField) -> float:
    """Relative defect of the optical theorem; ``0`` when nothing scatters.

    The forward amplitude is read off the sample nearest ``theta'``, so the
    sampling should contain the incident direction.
    """
    m = len(a.thetas)
    total = 2 * np.pi / m * np.sum(np.abs(a.values) ** 2)
    diff = np.abs((a.thetas - a.theta_prime + np.pi) % (2 * np.pi) - np.pi)
    j = int(np.argmin(diff))
    if diff[j] > 1e-9:
        raise ValueError("sampling does not contain the forward direction")
    forward = -2 * np.sqrt(2 * np.pi / a.omega) * np.real(np.exp(0.25j * np.pi) * a.values[j])
    scale = max(abs(total), abs(forward))
    if scale == 0:
        return 0.0
    return float(abs(total - forward) / scale)


def _index_of(thetas, angle):
    diff = np.abs((thetas - angle + np.pi) % (2 * np.pi) - np.pi)
    j = int(np.argmin(diff))
    if diff[j] > 1e-9:
        raise ValueError(f"angle {angle} not in the sampling")
    return j


def reciprocity_defect(fields) -> float:
    """``max |A(theta, theta') - A(-theta', -theta)|`` over pairs of sampled directions.

    ``fields`` are far fields for a set of incident directions closed under
    negation and contained in the observation sampling. Normalized by the
    largest amplitude.
    """
    by_dir = {round(f.theta_prime, 9): f for f in fields}
    worst, scale = 0.0, max(float(np.max(np.abs(f.values))) for f in fields)
    dirs = [f.theta_prime for f in fields]
    for f in fields:
        for th in dirs:
            # A(th, theta') against A(-theta', -th), the field for incidence -th
            h = by_dir.get(round((th + np.pi) % (2 * np.pi), 9))
            if h is None:
                raise ValueError("incident directions are not closed under negation")
            lhs = f.values[_index_of(f.thetas, th)]
            rhs = h.values[_index_of(h.thetas, (f.theta_prime + np.pi) % (2 * np.pi))]
            worst = max(worst, abs(lhs - rhs))
    return 0.0 if scale == 0 else worst / scale


def translation_phase(a: FarField, shift) -> FarField:
    """Far field of the configuration translated by ``shift``."""
    shift = np.asarray(shift, dtype=float)
    k = a.omega
    xi = k * np.array([np.cos(a.theta_prime), np.sin(a.theta_prime)])
    obs = k * np.column_stack([np.cos(a.thetas), np.sin(a.thetas)])
    phase = np.exp(1j * (xi[None, :] - obs) @ shift)
    return FarField(a.thetas, a.values * phase, a.omega, a.theta_prime)


def write_farfield_csv(a: FarField, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(farfield_csv_text(a))


def farfield_csv_text(a: FarField) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "re_A", "im_A"])
    for t, val in zip(a.thetas, a.values):
        w.writerow([f"{t:.12g}", f"{val.real:.12g}", f"{val.imag:.12g}"])
    return buf.getvalue()


def read_farfield_csv(path, omega, theta_prime) -> FarField:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    th = np.array([float(r["theta"]) for r in rows])
    vals = np.array([float(r["re_A"]) + 1j * float(r["im_A"]) for r in rows])
    return FarField(th, vals, float(omega), float(theta_prime))
