"""Pure numpy evaluation of J0, J1, Y0, Y1 on positive real arguments.

Three regimes, shared with the compiled backend:

* ``t <= SERIES_MAX``: ascending power series.
* ``SERIES_MAX < t < ASYMPTOTIC_MIN``: Miller backward recurrence for J_n,
  normalized by ``J0 + 2 sum J_2k = 1``; Y0 and Y1 from the Neumann series
  in even-order J.
* ``t >= ASYMPTOTIC_MIN``: Hankel asymptotic expansion, summed until the
  terms stop decreasing.
"""

import numpy as np

EULER_GAMMA = 0.5772156649015329
SERIES_MAX = 4.0
ASYMPTOTIC_MIN = 20.0
N_SERIES_TERMS = 40

_TWO_OVER_PI = 2.0 / np.pi


def _series(t):
    x2 = 0.25 * t * t
    half = 0.5 * t
    logterm = np.log(half) + EULER_GAMMA

    # term_k = (-x2)^k / (k!)^2 for J0, (-x2)^k / (k!(k+1)!) for J1
    term0 = np.ones_like(t)
    term1 = np.ones_like(t)
    j0 = term0.copy()
    s1 = term1.copy()
    y0sum = np.zeros_like(t)
    y1sum = np.zeros_like(t)  # sum (-1)^k (H_k + H_{k+1}) x2^k / (k!(k+1)!)
    harm = 0.0
    y1sum += term1 * 1.0  # k = 0: H_0 + H_1 = 1
    for k in range(1, N_SERIES_TERMS):
        term0 = term0 * (-x2) / (k * k)
        term1 = term1 * (-x2) / (k * (k + 1))
        harm_next = harm + 1.0 / k
        j0 += term0
        s1 += term1
        y0sum -= harm_next * term0
        y1sum += (harm_next + harm_next + 1.0 / (k + 1)) * term1
        harm = harm_next
    j1 = half * s1
    y0 = _TWO_OVER_PI * (logterm * j0 + y0sum)
    y1 = _TWO_OVER_PI * logterm * j1 - _TWO_OVER_PI / t - half * y1sum / np.pi
    return j0, j1, y0, y1


def _miller(t):
    n_start = int(np.max(t)) + 40
    n_start += n_start % 2
    # walking down: j_n = J_n, j_n1 = J_{n+1}, j_n2 = J_{n+2} (unnormalized)
    j_n2 = np.zeros_like(t)
    j_n1 = np.zeros_like(t)
    j_n = np.full_like(t, 1e-30)
    norm = np.zeros_like(t)
    y0sum = np.zeros_like(t)  # sum_{k>=1} (-1)^k J_2k / k
    y1sum = np.zeros_like(t)  # sum_{k>=1} (-1)^k (J_{2k-1} - J_{2k+1}) / k
    j1 = j_n
    for n in range(n_start, 0, -1):
        if n % 2 == 0:
            k = n // 2
            sign = -1.0 if k % 2 else 1.0
            norm += 2.0 * j_n
            y0sum += (sign / k) * j_n
        else:
            k = (n + 1) // 2
            sign = -1.0 if k % 2 else 1.0
            y1sum += (sign / k) * (j_n - j_n2)
            if n == 1:
                j1 = j_n
        j_lower = (2.0 * n / t) * j_n - j_n1
        j_n2, j_n1, j_n = j_n1, j_n, j_lower
    j0 = j_n
    norm += j0
    j0 = j0 / norm
    j1 = j1 / norm
    logterm = np.log(0.5 * t) + EULER_GAMMA
    y0 = _TWO_OVER_PI * (logterm * j0 - 2.0 * y0sum / norm)
    y1 = _TWO_OVER_PI * (logterm * j1 - j0 / t + y1sum / norm)
    return j0, j1, y0, y1


def _asymptotic_order(t, nu):
    mu = 4.0 * nu * nu
    inv = 1.0 / t
    total = np.ones_like(t, dtype=complex)
    term = np.ones_like(t, dtype=complex)
    last = np.ones_like(t)
    active = np.ones(t.shape, dtype=bool)
    for k in range(1, 60):
        term = term * (1j * (mu - (2 * k - 1) ** 2) / (8.0 * k)) * inv
        mag = np.abs(term)
        active &= mag < last
        total = np.where(active, total + term, total)
        last = np.where(active, mag, last)
        if not active.any() or np.max(np.where(active, mag, 0.0)) < 1e-18:
            break
    phase = t - (0.5 * nu + 0.25) * np.pi
    return np.sqrt(_TWO_OVER_PI * inv) * np.exp(1j * phase) * total


def bessel01(t):
    """Return ``(J0, J1, Y0, Y1)`` for an array of positive reals."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or not np.all(np.isfinite(t)):
        raise ValueError("Bessel arguments must be positive and finite")
    shape = t.shape
    t = t.ravel()
    out = np.empty((4, t.size))
    small = t <= SERIES_MAX
    large = t >= ASYMPTOTIC_MIN
    mid = ~(small | large)
    if small.any():
        out[:, small] = _series(t[small])
    if mid.any():
        out[:, mid] = _miller(t[mid])
    if large.any():
        tl = t[large]
        h0 = _asymptotic_order(tl, 0)
        h1 = _asymptotic_order(tl, 1)
        out[:, large] = (h0.real, h1.real, h0.imag, h1.imag)
    return tuple(o.reshape(shape) for o in out)


def hankel01(t):
    j0, j1, y0, y1 = bessel01(t)
    return j0 + 1j * y0, j1 + 1j * y1
