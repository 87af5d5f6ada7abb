# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled J0/J1/Y0/Y1 evaluation; same regimes as ``_hankel_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, cos, sin, fabs, M_PI

cnp.import_array()

cdef double EULER_GAMMA = 0.5772156649015329
cdef double SERIES_MAX = 4.0
cdef double ASYMPTOTIC_MIN = 20.0
cdef int N_SERIES_TERMS = 40
cdef double TWO_OVER_PI = 2.0 / M_PI

# series coefficient tables, index k = 1..N_SERIES_TERMS-1
cdef double INV_KK[40]
cdef double INV_KK1[40]
cdef double Y0_COEF[40]
cdef double Y1_COEF[40]


cdef void _init_tables():
    cdef int k
    cdef double harm = 0.0
    for k in range(1, N_SERIES_TERMS):
        harm += 1.0 / k
        INV_KK[k] = 1.0 / (k * k)
        INV_KK1[k] = 1.0 / (k * (k + 1.0))
        Y0_COEF[k] = harm
        Y1_COEF[k] = 2.0 * harm + 1.0 / (k + 1.0)


_init_tables()


cdef void _series(double t, double* out) nogil:
    cdef double x2 = 0.25 * t * t
    cdef double half = 0.5 * t
    cdef double logterm = log(half) + EULER_GAMMA
    cdef double term0 = 1.0, term1 = 1.0
    cdef double j0 = 1.0, s1 = 1.0, y0sum = 0.0, y1sum = 1.0
    cdef int k
    for k in range(1, N_SERIES_TERMS):
        term0 = -term0 * x2 * INV_KK[k]
        term1 = -term1 * x2 * INV_KK1[k]
        j0 += term0
        s1 += term1
        y0sum -= Y0_COEF[k] * term0
        y1sum += Y1_COEF[k] * term1
        if fabs(term0) < 1e-18 and fabs(term1) < 1e-18:
            break
    out[0] = j0
    out[1] = half * s1
    out[2] = TWO_OVER_PI * (logterm * j0 + y0sum)
    out[3] = TWO_OVER_PI * logterm * out[1] - TWO_OVER_PI / t - half * y1sum / M_PI


cdef void _miller(double t, double* out) nogil:
    cdef int n_start = <int>t + 40
    cdef int n, k
    cdef double sign
    cdef double j_n2 = 0.0, j_n1 = 0.0, j_n = 1e-30, j_lower
    cdef double norm = 0.0, y0sum = 0.0, y1sum = 0.0, j1 = 0.0
    cdef double logterm, j0
    cdef double two_over_t = 2.0 / t
    n_start += n_start % 2
    n = n_start
    while n > 0:
        if n % 2 == 0:
            k = n // 2
            sign = -1.0 if k % 2 else 1.0
            norm += 2.0 * j_n
            y0sum += sign * j_n / k
        else:
            k = (n + 1) // 2
            sign = -1.0 if k % 2 else 1.0
            y1sum += (sign / k) * (j_n - j_n2)
            if n == 1:
                j1 = j_n
        j_lower = (n * two_over_t) * j_n - j_n1
        j_n2 = j_n1
        j_n1 = j_n
        j_n = j_lower
        n -= 1
    j0 = j_n
    norm += j0
    j0 = j0 / norm
    j1 = j1 / norm
    logterm = log(0.5 * t) + EULER_GAMMA
    out[0] = j0
    out[1] = j1
    out[2] = TWO_OVER_PI * (logterm * j0 - 2.0 * y0sum / norm)
    out[3] = TWO_OVER_PI * (logterm * j1 - j0 / t + y1sum / norm)


cdef void _asymptotic(double t, double nu, double* re, double* im) nogil:
    cdef double mu = 4.0 * nu * nu
    cdef double inv = 1.0 / t
    cdef double tr = 1.0, ti = 0.0, sr = 1.0, si = 0.0
    cdef double c, nr, ni, mag, last = 1.0
    cdef double phase, amp, cr, ci
    cdef int k
    for k in range(1, 60):
        # term *= i * c / t
        c = (mu - (2 * k - 1) * (2 * k - 1)) / (8.0 * k) * inv
        nr = -ti * c
        ni = tr * c
        mag = sqrt(nr * nr + ni * ni)
        if mag >= last:
            break
        tr = nr
        ti = ni
        sr += tr
        si += ti
        last = mag
        if mag < 1e-18:
            break
    phase = t - (0.5 * nu + 0.25) * M_PI
    amp = sqrt(TWO_OVER_PI * inv)
    cr = cos(phase)
    ci = sin(phase)
    re[0] = amp * (cr * sr - ci * si)
    im[0] = amp * (cr * si + ci * sr)


cdef void _eval(double t, double* out) nogil:
    cdef double re, im
    if t <= SERIES_MAX:
        _series(t, out)
    elif t < ASYMPTOTIC_MIN:
        _miller(t, out)
    else:
        _asymptotic(t, 0.0, &re, &im)
        out[0] = re
        out[2] = im
        _asymptotic(t, 1.0, &re, &im)
        out[1] = re
        out[3] = im


def bessel01(t):
    """Return ``(J0, J1, Y0, Y1)`` for an array of positive reals."""
    arr = np.ascontiguousarray(t, dtype=np.float64)
    shape = arr.shape
    cdef double[::1] flat = arr.reshape(-1)
    cdef Py_ssize_t n = flat.shape[0], i
    result = np.empty((4, n), dtype=np.float64)
    cdef double[:, ::1] res = result
    cdef double buf[4]
    cdef double x
    for i in range(n):
        x = flat[i]
        if not (x > 0.0) or x != x or x > 1e300:
            raise ValueError("Bessel arguments must be positive and finite")
    with nogil:
        for i in range(n):
            _eval(flat[i], buf)
            res[0, i] = buf[0]
            res[1, i] = buf[1]
            res[2, i] = buf[2]
            res[3, i] = buf[3]
    return tuple(result[k].reshape(shape) for k in range(4))


def hankel01(t):
    j0, j1, y0, y1 = bessel01(t)
    return j0 + 1j * y0, j1 + 1j * y1
