# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel for the single-scale prior response.

Mirrors ``_sse_numpy.single_scale`` operation for operation; keep the two in
sync or the backend-equivalence tests will fail.
"""

import numpy as np

from libc.math cimport fabs

cdef int[8] DX = [1, 1, 0, -1, -1, -1, 0, 1]
cdef int[8] DY = [0, 1, 1, 1, 0, -1, -1, -1]


cdef inline Py_ssize_t _clamp(Py_ssize_t v, Py_ssize_t size) nogil:
    if v < 0:
        return 0
    if v > size - 1:
        return size - 1
    return v


cdef inline double _second_largest(double a, double b, double c, double d) nogil:
    cdef double hi1, lo1, hi2, lo2
    if a >= b:
        hi1 = a
        lo1 = b
    else:
        hi1 = b
        lo1 = a
    if c >= d:
        hi2 = c
        lo2 = d
    else:
        hi2 = d
        lo2 = c
    # runner-up is the smaller winner or the larger loser, whichever is bigger
    if hi1 >= hi2:
        return hi2 if hi2 >= lo1 else lo1
    return hi1 if hi1 >= lo2 else lo2


def single_scale(const double[:, ::1] table, int n, double epsilon):
    cdef Py_ssize_t h = table.shape[0] - 1
    cdef Py_ssize_t w = table.shape[1] - 1
    cdef Py_ssize_t pad = 4 * n
    cdef Py_ssize_t mh = h + 2 * pad, mw = w + 2 * pad
    cdef Py_ssize_t bh = h + 6 * n, bw = w + 6 * n
    cdef Py_ssize_t half = n // 2
    cdef Py_ssize_t off = 3 * n

    means_arr = np.empty((mh, mw), dtype=np.float64)
    variation_arr = np.empty((bh, bw), dtype=np.float64)
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] means = means_arr
    cdef double[:, ::1] variation = variation_arr
    cdef double[:, ::1] out = out_arr

    x0_arr = np.empty(mw, dtype=np.intp)
    x1_arr = np.empty(mw, dtype=np.intp)
    cdef Py_ssize_t[::1] x0s = x0_arr
    cdef Py_ssize_t[::1] x1s = x1_arr

    cdef Py_ssize_t i, j, k, y0, y1, x0, x1
    cdef double s, count, acc, c, v_sum, weight, response
    cdef double d[8]
    cdef double prod[4]

    with nogil:
        for i in range(mw):
            x0s[i] = _clamp(i - pad - half, w)
            x1s[i] = _clamp(i - pad - half + n - 1, w)
        for j in range(mh):
            y0 = _clamp(j - pad - half, h)
            y1 = _clamp(j - pad - half + n - 1, h)
            for i in range(mw):
                x0 = x0s[i]
                x1 = x1s[i]
                s = table[y1 + 1, x1 + 1] - table[y0, x1 + 1] - table[y1 + 1, x0] + table[y0, x0]
                count = <double>((y1 - y0 + 1) * (x1 - x0 + 1))
                means[j, i] = s / count

        for j in range(bh):
            for i in range(bw):
                c = means[j + n, i + n]
                acc = fabs(c - means[j + n + n * DY[0], i + n + n * DX[0]])
                for k in range(1, 8):
                    acc = acc + fabs(c - means[j + n + n * DY[k], i + n + n * DX[k]])
                variation[j, i] = acc / 8.0

        for j in range(h):
            for i in range(w):
                c = means[j + pad, i + pad]
                for k in range(8):
                    d[k] = c - means[j + pad + n * DY[k], i + pad + n * DX[k]]
                for k in range(4):
                    prod[k] = d[k] * d[k + 4]
                v_sum = variation[j + off + off * DY[0], i + off + off * DX[0]]
                for k in range(1, 8):
                    v_sum = v_sum + variation[j + off + off * DY[k], i + off + off * DX[k]]
                if v_sum < epsilon:
                    v_sum = epsilon
                weight = variation[j + off, i + off] / v_sum
                response = _second_largest(prod[0], prod[1], prod[2], prod[3]) * weight
                out[j, i] = response if response > 0.0 else 0.0
    return out_arr
