# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: SE-ARD cross-covariance and fused GP prediction.

Mirrors excbo._gpcore_py; both must return bit-compatible results up to
floating-point reassociation (parity is enforced by tests).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

BACKEND_NAME = "compiled"


def se_kernel(double[:, ::1] queries, double[:, ::1] inputs,
              double[::1] lengthscales, double signal_variance):
    cdef Py_ssize_t m = queries.shape[0]
    cdef Py_ssize_t n = inputs.shape[0]
    cdef Py_ssize_t dim = queries.shape[1]
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, d
    cdef double acc, diff
    with nogil:
        for i in range(m):
            for j in range(n):
                acc = 0.0
                for d in range(dim):
                    diff = (queries[i, d] - inputs[j, d]) / lengthscales[d]
                    acc += diff * diff
                out[i, j] = signal_variance * exp(-0.5 * acc)
    return out_arr


def gp_mean_var(double[:, ::1] queries, double[:, ::1] inputs,
                double[::1] lengthscales, double signal_variance,
                double[::1] alpha, double[:, ::1] kinv):
    cdef Py_ssize_t m = queries.shape[0]
    cdef Py_ssize_t n = inputs.shape[0]
    cdef Py_ssize_t dim = queries.shape[1]
    mean_arr = np.empty(m, dtype=np.float64)
    var_arr = np.empty(m, dtype=np.float64)
    kbuf_arr = np.empty(n, dtype=np.float64)
    wbuf_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] mean = mean_arr
    cdef double[::1] var = var_arr
    cdef double[::1] kbuf = kbuf_arr
    cdef double[::1] wbuf = wbuf_arr
    cdef Py_ssize_t i, j, d
    cdef double acc, diff, mu, quad
    with nogil:
        for i in range(m):
            mu = 0.0
            for j in range(n):
                acc = 0.0
                for d in range(dim):
                    diff = (queries[i, d] - inputs[j, d]) / lengthscales[d]
                    acc += diff * diff
                kbuf[j] = signal_variance * exp(-0.5 * acc)
                mu += kbuf[j] * alpha[j]
            mean[i] = mu
            for j in range(n):
                acc = 0.0
                for d in range(n):
                    acc += kinv[j, d] * kbuf[d]
                wbuf[j] = acc
            quad = 0.0
            for j in range(n):
                quad += wbuf[j] * kbuf[j]
            quad = signal_variance - quad
            var[i] = quad if quad > 0.0 else 0.0
    return mean_arr, var_arr
