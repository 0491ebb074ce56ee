# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Fused elementwise kernels for the solver inner loop.

Each function is a single pass over flat float64 buffers; the matching
pure-numpy implementations live in ``strtd.kernels``. Dense linear algebra
(mode products, Gram matrices) stays in numpy/BLAS and is not duplicated
here.
"""

from libc.math cimport fabs

import numpy as np


def soft_threshold(const double[::1] x, double mu):
    """Elementwise shrinkage sign(x) * max(|x| - mu, 0)."""
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double v, a
    for i in range(n):
        v = x[i]
        a = fabs(v) - mu
        if a <= 0.0:
            out[i] = 0.0
        elif v > 0.0:
            out[i] = a
        else:
            out[i] = -a
    return out_arr


def shrink_step(const double[::1] point, const double[::1] grad,
                double inv_l, double mu):
    """Shrinkage applied to a gradient step: S_mu(point - inv_l * grad)."""
    cdef Py_ssize_t i, n = point.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double v, a
    for i in range(n):
        v = point[i] - inv_l * grad[i]
        a = fabs(v) - mu
        if a <= 0.0:
            out[i] = 0.0
        elif v > 0.0:
            out[i] = a
        else:
            out[i] = -a
    return out_arr


def clamp_step(const double[::1] point, const double[::1] grad, double inv_l):
    """Nonnegative projection of a gradient step: max(point - inv_l * grad, 0)."""
    cdef Py_ssize_t i, n = point.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double v
    for i in range(n):
        v = point[i] - inv_l * grad[i]
        out[i] = v if v > 0.0 else 0.0
    return out_arr


def extrapolate(const double[::1] cur, const double[::1] prev, double omega):
    """Momentum point cur + omega * (cur - prev)."""
    cdef Py_ssize_t i, n = cur.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = cur[i] + omega * (cur[i] - prev[i])
    return out_arr


def feedback_combine(const double[::1] x0, const double[::1] x,
                     const double[::1] z, const unsigned char[::1] observed,
                     double gamma):
    """Observed cells: x0 + gamma * (x - z); missing cells: z."""
    cdef Py_ssize_t i, n = x0.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        if observed[i]:
            out[i] = x0[i] + gamma * (x[i] - z[i])
        else:
            out[i] = z[i]
    return out_arr


def masked_sq_diff(const double[::1] a, const double[::1] b,
                   const unsigned char[::1] observed):
    """Sum of (a - b)^2 over observed cells."""
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double acc = 0.0, d
    for i in range(n):
        if observed[i]:
            d = a[i] - b[i]
            acc += d * d
    return acc


def masked_sq_sum(const double[::1] a, const unsigned char[::1] observed):
    """Sum of a^2 over observed cells."""
    cdef Py_ssize_t i, n = a.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        if observed[i]:
            acc += a[i] * a[i]
    return acc
