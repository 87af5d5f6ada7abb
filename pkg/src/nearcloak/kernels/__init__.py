"""Fundamental solutions of the Helmholtz and Laplace operators.

The Bessel/Hankel evaluation runs through a compiled extension when it has
been built, otherwise through a vectorized numpy implementation of the same
algorithm. Set ``NEARCLOAK_PURE_PYTHON=1`` to force the numpy path.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import _hankel_py
from ._hankel_py import EULER_GAMMA

if os.environ.get("NEARCLOAK_PURE_PYTHON", "") not in ("", "0"):
    _impl = _hankel_py
    BACKEND = "python"
else:
    try:
        from . import _hankel_ext as _impl
    except ImportError:
        _impl = _hankel_py
        BACKEND = "python"
    else:
        BACKEND = "cython"

__all__ = [
    "BACKEND",
    "EULER_GAMMA",
    "KernelParams",
    "bessel01",
    "bessel_jy_orders",
    "grad_phi_nu",
    "hankel_h0_h1",
    "phi",
    "phi0",
    "phi_smooth_part",
]


@dataclass(frozen=True)
class KernelParams:
    omega: float
    dim: int = 2

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")


def bessel01(t, backend=None):
    """``(J0, J1, Y0, Y1)`` at positive real arguments."""
    impl = _hankel_py if backend == "python" else _impl
    return impl.bessel01(t)


def hankel_h0_h1(t, backend=None):
    """Hankel functions of the first kind, orders 0 and 1.

    Parameters
    ----------
    t : array_like
        Positive real arguments.
    backend : {"python", None}
        ``"python"`` forces the numpy implementation; ``None`` uses the
        import-time selection.
    """
    j0, j1, y0, y1 = bessel01(t, backend)
    return j0 + 1j * y0, j1 + 1j * y1


def _distance(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.sqrt(np.sum((x - y) ** 2, axis=-1))
    if np.any(r == 0):
        raise ValueError("kernel evaluated on the diagonal x == y")
    return r


def phi(x, y, params):
    """Radiating fundamental solution of ``-Delta - omega^2``.

    ``x`` and ``y`` broadcast against each other along leading axes; the last
    axis holds coordinates.
    """
    r = _distance(x, y)
    if params.dim == 3:
        return np.exp(1j * params.omega * r) / (4 * np.pi * r)
    h0, _ = hankel_h0_h1(params.omega * r)
    return 0.25j * h0


def phi0(x, y, dim=2):
    """Fundamental solution of ``-Delta``."""
    r = _distance(x, y)
    if dim == 3:
        return 1.0 / (4 * np.pi * r)
    if dim != 2:
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    return -np.log(r) / (2 * np.pi)


def grad_phi_nu(x, y, nu_y, params):
    """Normal derivative of ``phi`` with respect to the source point ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nu_y = np.asarray(nu_y, dtype=float)
    r = _distance(x, y)
    proj = np.sum((x - y) * nu_y, axis=-1)
    k = params.omega
    if params.dim == 3:
        return np.exp(1j * k * r) * (1 - 1j * k * r) * proj / (4 * np.pi * r**3)
    _, h1 = hankel_h0_h1(k * r)
    return 0.25j * k * h1 * proj / r


def phi_smooth_part(r, omega):
    """``phi - (1/2pi) ln(1/r)`` in 2D as a function of distance.

    Continuous at ``r = 0`` where it takes the value
    ``i/4 - (ln(omega/2) + EULER_GAMMA) / (2 pi)``.
    """
    r = np.asarray(r, dtype=float)
    out = np.empty(r.shape, dtype=complex)
    zero = r < 1e-14
    out[zero] = 0.25j - (np.log(omega / 2) + EULER_GAMMA) / (2 * np.pi)
    rr = r[~zero]
    if rr.size:
        h0, _ = hankel_h0_h1(omega * rr)
        out[~zero] = 0.25j * h0 + np.log(rr) / (2 * np.pi)
    return out


def bessel_jy_orders(n_max, x):
    """J_m(x) and Y_m(x) for m = 0..n_max at one positive argument.

    J by Miller's downward recurrence normalized with
    ``J0 + 2 sum J_2k = 1``; Y by upward recurrence from Y0, Y1, which is
    stable in that direction.
    """
    x = float(x)
    if not x > 0:
        raise ValueError("argument must be positive")
    n_max = int(n_max)
    n_start = n_max + int(x) + 60
    n_start += n_start % 2
    vals = np.zeros(n_start + 2)
    vals[n_start] = 1e-30
    for n in range(n_start, 0, -1):
        vals[n - 1] = (2.0 * n / x) * vals[n] - vals[n + 1]
        if abs(vals[n - 1]) > 1e250:
            vals[n - 1 :] *= 1e-250
    norm = vals[0] + 2.0 * np.sum(vals[2 : n_start + 1 : 2])
    jn = vals[: n_max + 1] / norm
    _, _, y0, y1 = bessel01(np.array([x]))
    yn = np.empty(n_max + 1)
    yn[0] = y0[0]
    if n_max >= 1:
        yn[1] = y1[0]
    for n in range(1, n_max):
        yn[n + 1] = (2.0 * n / x) * yn[n] - yn[n - 1]
    return jn, yn
