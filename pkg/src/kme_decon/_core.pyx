# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: Gaussian gram assembly and kernel herding."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


def gaussian_gram(const double[:, ::1] a, const double[:, ::1] b,
                  const double[::1] lengthscales, double signal_variance):
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0], dim = a.shape[1]
    cdef Py_ssize_t i, j, d
    cdef double acc, t
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] g = out
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for d in range(dim):
                t = (a[i, d] - b[j, d]) / lengthscales[d]
                acc = acc + t * t
            g[i, j] = signal_variance * exp(-0.5 * acc)
    return out


def herd(const double[::1] mu, const double[:, ::1] gram, Py_ssize_t n_samples,
         bint keep_trace):
    cdef Py_ssize_t r_count = mu.shape[0]
    cdef Py_ssize_t s, r, best
    cdef double best_val, val, step
    chosen = np.empty(n_samples, dtype=np.intp)
    cdef Py_ssize_t[::1] ch = chosen
    acc_arr = np.zeros(r_count, dtype=np.float64)
    cdef double[::1] acc = acc_arr
    trace = np.empty((n_samples if keep_trace else 0, r_count), dtype=np.float64)
    cdef double[:, ::1] tr = trace
    for s in range(n_samples):
        step = <double>(s + 1)
        best = 0
        best_val = mu[0] - acc[0] / step
        for r in range(1, r_count):
            val = mu[r] - acc[r] / step
            if val > best_val:
                best_val = val
                best = r
        ch[s] = best
        for r in range(r_count):
            acc[r] = acc[r] + gram[r, best]
        if keep_trace:
            for r in range(r_count):
                tr[s, r] = acc[r]
    return chosen, trace
