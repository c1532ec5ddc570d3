# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; mirrors modnls._pykernels exactly."""

import numpy as np

cimport numpy as cnp
from libc.math cimport hypot, pow

cnp.import_array()

cdef extern from "complex.h":
    double complex conj(double complex) nogil


def tau_correlation(table):
    """Sparse row-by-row autocorrelation sum; see _pykernels.tau_correlation."""
    cdef cnp.complex128_t[:, ::1] tab = np.ascontiguousarray(table, dtype=np.complex128)
    cdef Py_ssize_t n_d = tab.shape[0]
    cdef Py_ssize_t n_s = tab.shape[1]
    out_arr = np.zeros(2 * n_s - 1, dtype=np.complex128)
    cdef cnp.complex128_t[::1] out = out_arr
    idx_arr = np.empty(n_s, dtype=np.intp)
    cdef Py_ssize_t[::1] idx = idx_arr
    cdef Py_ssize_t d, i, j, cnt
    cdef double complex a_i
    for d in range(n_d):
        cnt = 0
        for i in range(n_s):
            if tab[d, i] != 0:
                idx[cnt] = i
                cnt += 1
        for i in range(cnt):
            a_i = tab[d, idx[i]]
            for j in range(cnt):
                out[idx[i] - idx[j] + n_s - 1] = out[idx[i] - idx[j] + n_s - 1] + a_i * conj(tab[d, idx[j]])
    return out_arr


def vp_dp_batch(values, double p):
    """Per-row partition DP; see _pykernels.vp_dp_batch."""
    cdef cnp.complex128_t[:, ::1] v = np.ascontiguousarray(values, dtype=np.complex128)
    cdef Py_ssize_t k_n = v.shape[0]
    cdef Py_ssize_t n = v.shape[1]
    best_arr = np.zeros(n)
    out_arr = np.empty(k_n)
    cdef double[::1] best = best_arr
    cdef double[::1] out = out_arr
    cdef Py_ssize_t k, i, j
    cdef double top, cand, dre, dim, h, vre, vim
    cdef bint squared = p == 2.0
    # hypot (not sqrt of squares) so results match numpy's complex abs bit
    # for bit; the partition DP then agrees exactly with a brute-force
    # enumeration summing the same terms left to right.  p = 2 avoids the
    # libm pow call: glibc pow is correctly rounded, so pow(h, 2) == h*h.
    for k in range(k_n):
        best[0] = 0.0
        for i in range(1, n):
            vre = v[k, i].real
            vim = v[k, i].imag
            top = -1.0
            if squared:
                for j in range(i):
                    dre = vre - v[k, j].real
                    dim = vim - v[k, j].imag
                    h = hypot(dre, dim)
                    cand = best[j] + h * h
                    if cand > top:
                        top = cand
            else:
                for j in range(i):
                    dre = vre - v[k, j].real
                    dim = vim - v[k, j].imag
                    cand = best[j] + pow(hypot(dre, dim), p)
                    if cand > top:
                        top = cand
            best[i] = top
        out[k] = best[n - 1]
    return out_arr


def max_partition_sum(incpow):
    """Chain DP over a precomputed increment-power matrix; see _pykernels."""
    cdef double[:, ::1] m = np.ascontiguousarray(incpow, dtype=np.float64)
    cdef Py_ssize_t n = m.shape[0]
    best_arr = np.zeros(n)
    cdef double[::1] best = best_arr
    cdef Py_ssize_t i, j
    cdef double top, cand
    for i in range(1, n):
        top = -1.0
        for j in range(i):
            cand = best[j] + m[j, i]
            if cand > top:
                top = cand
        best[i] = top
    return float(best[n - 1])
