"""Timing comparison of the compiled kernels against the NumPy fallbacks.

Run:  python benchmarks/bench_kernels.py

Covers the two hot paths: the per-tau pair correlation behind level sets
and quadrilinear sums, and the O(M^2) p-variation partition DP, plus the
end-to-end operations that sit on top of them.
"""

import time

import numpy as np

from modnls import _ckernels, _pykernels
from modnls.lattice import FrequencyBox
from modnls.paths import sample_fbm
from modnls.spectral import FourierField, l4_fourth_power_exact
from modnls.variation import SampledSignal, vp_norm


def clock(fn, *args, repeats=5):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def fmt_row(name, t_pure, t_comp, note=""):
    speedup = t_pure / t_comp if t_comp > 0 else float("inf")
    print(f"{name:<38} {t_pure * 1e3:>9.2f} ms {t_comp * 1e3:>9.2f} ms {speedup:>7.1f}x  {note}")


def pair_table(n, seed=0, density=0.5):
    rng = np.random.default_rng(seed)
    box = FrequencyBox((0, 0), n)
    pts = box.points() - 0
    sq = (pts ** 2).sum(axis=1)
    p = len(pts)
    i = np.repeat(np.arange(p), p)
    j = np.tile(np.arange(p), p)
    d = pts[i] - pts[j]
    s = sq[i] - sq[j]
    w1 = d[:, 1].max() - d[:, 1].min() + 1
    d_idx = (d[:, 0] - d[:, 0].min()) * w1 + (d[:, 1] - d[:, 1].min())
    n_d = (d[:, 0].max() - d[:, 0].min() + 1) * w1
    s_idx = s - s.min()
    n_s = s.max() - s.min() + 1
    vals = rng.standard_normal(p) + 1j * rng.standard_normal(p)
    table = np.zeros((n_d, n_s), dtype=complex)
    np.add.at(table, (d_idx, s_idx), vals[i] * vals[j].conj())
    return table


def main():
    print(f"{'kernel / operation':<38} {'pure':>12} {'compiled':>12} {'speedup':>8}")
    print("-" * 86)

    for n in (4, 8):
        table = pair_table(n)
        t_pure, a = clock(_pykernels.tau_correlation, table)
        t_comp, b = clock(_ckernels.tau_correlation, table)
        gap = np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-30)
        fmt_row(f"tau_correlation (box N={n}, {table.shape})", t_pure, t_comp, f"rel gap {gap:.1e}")

    rng = np.random.default_rng(1)
    for k, m in ((32, 257), (289, 401)):
        values = rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))
        t_pure, a = clock(_pykernels.vp_dp_batch, values, 2.0, repeats=3)
        t_comp, b = clock(_ckernels.vp_dp_batch, values, 2.0, repeats=3)
        gap = np.max(np.abs(a - b)) / max(np.max(a), 1e-30)
        fmt_row(f"vp_dp_batch ({k} signals x {m} nodes)", t_pure, t_comp, f"rel gap {gap:.1e}")

    n = 301
    incpow = np.abs(rng.standard_normal((n, n)))
    t_pure, a = clock(_pykernels.max_partition_sum, incpow)
    t_comp, b = clock(_ckernels.max_partition_sum, incpow)
    fmt_row(f"max_partition_sum ({n} nodes)", t_pure, t_comp, f"rel gap {abs(a - b) / a:.1e}")

    # end-to-end: the kernels under their real call sites
    import modnls.kernels as kernels_mod

    path = sample_fbm(0.5, 256, 0.2, seed=0)
    box = FrequencyBox((0, 0), 8)
    field = FourierField.random(box, np.random.default_rng(2))
    sig = SampledSignal(np.linspace(0, 1, 1201), rng.standard_normal(1201) + 1j * rng.standard_normal(1201))

    results = {}
    for name, impl in (("pure", _pykernels), ("compiled", _ckernels)):
        kernels_mod.tau_correlation = impl.tau_correlation
        kernels_mod.vp_dp_batch = impl.vp_dp_batch
        kernels_mod.max_partition_sum = impl.max_partition_sum
        t_l4, _ = clock(l4_fourth_power_exact, field, path, (0.0, 0.2), repeats=3)
        t_vp, _ = clock(vp_norm, sig, 2.0, repeats=3)
        results[name] = (t_l4, t_vp)
    fmt_row("exact-sum L4 integral (box N=8)", results["pure"][0], results["compiled"][0])
    fmt_row("vp_norm (1201-node signal)", results["pure"][1], results["compiled"][1])


if __name__ == "__main__":
    main()
