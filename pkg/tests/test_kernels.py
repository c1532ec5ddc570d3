import numpy as np
import pytest

from modnls import _pykernels, kernels

try:
    from modnls import _ckernels
except ImportError:
    _ckernels = None

needs_compiled = pytest.mark.skipif(_ckernels is None, reason="compiled kernels missing")


def reference_tau_correlation(table):
    """Direct O(n_d * n_s^2) double loop."""
    n_d, n_s = table.shape
    out = np.zeros(2 * n_s - 1, dtype=complex)
    for d in range(n_d):
        for s1 in range(n_s):
            for s2 in range(n_s):
                out[s1 - s2 + n_s - 1] += table[d, s1] * np.conj(table[d, s2])
    return out


def random_table(seed, n_d=6, n_s=9, density=0.4):
    rng = np.random.default_rng(seed)
    table = np.zeros((n_d, n_s), dtype=complex)
    mask = rng.random((n_d, n_s)) < density
    table[mask] = rng.standard_normal(mask.sum()) + 1j * rng.standard_normal(mask.sum())
    return table


def test_backend_name_valid():
    assert kernels.backend_name() in ("compiled", "pure")


def test_pure_tau_correlation_matches_reference():
    table = random_table(0)
    assert np.allclose(_pykernels.tau_correlation(table), reference_tau_correlation(table), atol=1e-12)


@needs_compiled
def test_compiled_tau_correlation_matches_reference():
    table = random_table(1)
    assert np.allclose(_ckernels.tau_correlation(table), reference_tau_correlation(table), atol=1e-12)


@needs_compiled
def test_tau_correlation_backend_parity():
    for seed in range(5):
        table = random_table(seed, n_d=12, n_s=17)
        a = _pykernels.tau_correlation(table)
        b = _ckernels.tau_correlation(table)
        scale = np.abs(a).max() or 1.0
        assert np.max(np.abs(a - b)) < 1e-12 * scale


@needs_compiled
def test_vp_dp_backend_parity():
    rng = np.random.default_rng(2)
    values = rng.standard_normal((8, 40)) + 1j * rng.standard_normal((8, 40))
    for p in (1.5, 2.0, 3.0):
        a = _pykernels.vp_dp_batch(values, p)
        b = _ckernels.vp_dp_batch(values, p)
        assert np.max(np.abs(a - b)) < 1e-12 * max(np.max(a), 1.0)


@needs_compiled
def test_max_partition_sum_backend_parity():
    rng = np.random.default_rng(3)
    n = 25
    m = np.abs(rng.standard_normal((n, n)))
    assert _pykernels.max_partition_sum(m) == pytest.approx(_ckernels.max_partition_sum(m), rel=1e-14)


def test_vp_dp_consistent_with_matrix_dp():
    rng = np.random.default_rng(4)
    v = rng.standard_normal(15) + 1j * rng.standard_normal(15)
    p = 2.3
    incpow = np.abs(v[None, :] - v[:, None]) ** p
    a = _pykernels.vp_dp_batch(v[None, :], p)[0]
    b = _pykernels.max_partition_sum(incpow)
    assert a == pytest.approx(b, rel=1e-13)


def test_tau_correlation_zero_table():
    out = kernels.tau_correlation(np.zeros((3, 4), dtype=complex))
    assert out.shape == (7,)
    assert np.allclose(out, 0.0)


def test_env_variable_selects_pure(tmp_path):
    import subprocess
    import sys

    code = "import modnls; print(modnls.backend_name())"
    env = dict(**__import__('os').environ, MODNLS_PURE_PY="1")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert out.stdout.strip() == "pure"
