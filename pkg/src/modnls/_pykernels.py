"""Pure-NumPy implementations of the hot kernels.

These are the fallback for ``modnls._ckernels``; both backends must agree to
floating-point noise (see tests/test_kernels.py).
"""

import numpy as np


def tau_correlation(table):
    """Sum of row autocorrelations of a dense pair table.

    ``table`` has one row per lattice difference d and one column per pair
    square-difference s.  Returns ``out`` of length ``2*n_s - 1`` with

        out[tau + n_s - 1] = sum_d sum_s table[d, s] * conj(table[d, s - tau])

    which is exactly sum over parallelograms at resonance level tau of the
    vertex products encoded in the table.  FFT-based; rows are correlated
    against themselves, so a real table gives a real result up to roundoff.
    """
    table = np.asarray(table, dtype=np.complex128)
    n_s = table.shape[1]
    length = 1
    while length < 2 * n_s - 1:
        length *= 2
    spec = np.fft.fft(table, n=length, axis=1)
    power = np.einsum("ds,ds->s", spec, spec.conj())
    corr = np.fft.ifft(power)
    out = np.empty(2 * n_s - 1, dtype=np.complex128)
    out[n_s - 1 :] = corr[:n_s]
    out[: n_s - 1] = corr[length - n_s + 1 :]
    return out


def vp_dp_batch(values, p):
    """Max over partitions of the p-power increment sum, one signal per row.

    ``values`` is (K, M+1) complex; partitions run over column indices and
    must contain both endpoints.  The leading convention term |v(t_0)|^p is
    NOT included here; callers add it before taking the p-th root.
    """
    values = np.ascontiguousarray(values, dtype=np.complex128)
    k, n = values.shape
    best = np.zeros((k, n))
    for i in range(1, n):
        inc = np.abs(values[:, i : i + 1] - values[:, :i]) ** p
        best[:, i] = np.max(best[:, :i] + inc, axis=1)
    return best[:, -1].copy()


def max_partition_sum(incpow):
    """DP maximum of sum incpow[j_0, j_1] + incpow[j_1, j_2] + ... over
    increasing index chains 0 = j_0 < ... < j_r = n-1.

    ``incpow[i, j]`` holds the p-th power of the increment norm between
    sample i and sample j (only i < j is read).
    """
    incpow = np.asarray(incpow, dtype=np.float64)
    n = incpow.shape[0]
    best = np.zeros(n)
    for i in range(1, n):
        best[i] = np.max(best[:i] + incpow[:i, i])
    return float(best[-1])
