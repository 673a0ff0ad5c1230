# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled inner loops: integer disc counts and damped trigonometric sums."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, floor, fabs

cnp.import_array()

cdef double TWO_PI = 6.283185307179586


cdef inline long long _isqrt(long long n) noexcept nogil:
    cdef long long r
    if n <= 0:
        return 0
    r = <long long>sqrt(<double>n)
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


cdef long long _disc_count(long long n) noexcept nogil:
    # #{(a, b) in Z^2 : a^2 + b^2 <= n}, 8-fold symmetric row sum
    cdef long long s, h, m, q = 0
    if n < 0:
        return 0
    s = _isqrt(n)
    h = _isqrt(n // 2)
    for m in range(1, h + 1):
        q += _isqrt(n - m * m) - m
    q = 2 * q + h
    return 1 + 4 * s + 4 * q


def disc_count(long long n):
    return _disc_count(n)


def disc_counts(n):
    cdef cnp.int64_t[::1] nv = np.ascontiguousarray(n, dtype=np.int64)
    cdef Py_ssize_t i, size = nv.shape[0]
    out = np.empty(size, dtype=np.int64)
    cdef cnp.int64_t[::1] ov = out
    with nogil:
        for i in range(size):
            ov[i] = _disc_count(nv[i])
    return out


# Taylor coefficients of sin and cos, 1/n! with alternating signs
cdef double S3 = -1.0 / 6.0, S5 = 1.0 / 120.0, S7 = -1.0 / 5040.0, S9 = 1.0 / 362880.0
cdef double S11 = -1.0 / 39916800.0, S13 = 1.0 / 6227020800.0
cdef double S15 = -1.0 / 1307674368000.0, S17 = 1.0 / 355687428096000.0
cdef double C2 = -0.5, C4 = 1.0 / 24.0, C6 = -1.0 / 720.0, C8 = 1.0 / 40320.0
cdef double C10 = -1.0 / 3628800.0, C12 = 1.0 / 479001600.0
cdef double C14 = -1.0 / 87178291200.0, C16 = 1.0 / 20922789888000.0


cdef double SIN_SIGN[4]
cdef double COS_SIGN[4]
SIN_SIGN[:] = [0.0, -1.0, 0.0, 1.0]
COS_SIGN[:] = [1.0, 0.0, -1.0, 0.0]


cdef inline double _cos_turn(double y) noexcept nogil:
    # cos(2 pi y) for y in [0, 1): octant reduction, then Taylor polynomials
    # on [-pi/4, pi/4] (truncation below 1e-17); no data-dependent branches
    cdef int q = <int>(4.0 * y + 0.5)
    cdef double a = TWO_PI * (y - 0.25 * q)
    cdef double a2 = a * a
    cdef double sv = a * (1.0 + a2 * (S3 + a2 * (S5 + a2 * (S7 + a2 * (S9 + a2 * (
        S11 + a2 * (S13 + a2 * (S15 + a2 * S17))))))))
    cdef double cv = 1.0 + a2 * (C2 + a2 * (C4 + a2 * (C6 + a2 * (C8 + a2 * (
        C10 + a2 * (C12 + a2 * (C14 + a2 * C16)))))))
    q = q & 3
    return COS_SIGN[q] * cv + SIN_SIGN[q] * sv


def cos_turn(double y):
    return _cos_turn(y)


cdef inline double _trig_sum(const double[::1] lam, const double[::1] f,
                             double t) noexcept nogil:
    # Neumaier-compensated sum of f_i cos(2 pi lam_i t) in index order
    cdef Py_ssize_t i
    cdef double s = 0.0, c = 0.0, term, tmp, ph, hi, lo
    cdef bint big
    for i in range(lam.shape[0]):
        ph = lam[i] * t
        ph = ph - floor(ph)
        term = f[i] * _cos_turn(ph)
        tmp = s + term
        big = fabs(s) >= fabs(term)
        hi = s if big else term
        lo = term if big else s
        c += (hi - tmp) + lo
        s = tmp
    return s + c


def trig_sum(lam, f, double t):
    cdef const double[::1] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef const double[::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    return _trig_sum(lv, fv, t)


def trig_sums(lam, f, ts):
    cdef const double[::1] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef const double[::1] fv = np.ascontiguousarray(f, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(ts, dtype=np.float64)
    cdef Py_ssize_t j, size = tv.shape[0]
    out = np.empty(size, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        for j in range(size):
            ov[j] = _trig_sum(lv, fv, tv[j])
    return out
