import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modnls import kernels
from modnls.paths import ModulationPath, sample_fbm
from modnls.variation import (
    SampledSignal,
    make_up_atom,
    norm_bound_for_atoms,
    vp_norm,
    vpw_hs_norm,
    ys_vp_norm,
)


def brute_vp_norm(values, p):
    """Exhaustive maximum over every partition containing both endpoints.

    Each partition sum is accumulated left to right over the increments and
    the convention term |v(t_0)|^p is added last, mirroring the DP so the
    two routes produce identical floats when they agree.
    """
    values = np.asarray(values, dtype=complex)
    n = len(values)
    if n == 1:
        return float(abs(values[0]))
    best = -1.0
    interior = range(1, n - 1)
    for r in range(len(list(interior)) + 1):
        for combo in itertools.combinations(interior, r):
            idx = [0, *combo, n - 1]
            total = 0.0
            for a, b in zip(idx[:-1], idx[1:]):
                total = total + abs(values[b] - values[a]) ** p
            best = max(best, total)
    return float((best + abs(values[0]) ** p) ** (1.0 / p))


def random_signal(rng, n):
    times = np.sort(rng.random(n)) if n > 1 else np.array([0.0])
    times[0], times[-1] = 0.0, 1.0
    while n > 1 and np.any(np.diff(times) <= 0):
        times = np.unique(np.concatenate([[0.0, 1.0], rng.random(n - 2)]))
    vals = rng.standard_normal(len(times)) + 1j * rng.standard_normal(len(times))
    return SampledSignal(times, vals)


# ---------------------------------------------------------------------------
# scalar V^p


def test_constant_signal_norm_is_the_constant():
    sig = SampledSignal(np.linspace(0, 1, 6), np.full(6, 1.5 - 2.0j))
    assert vp_norm(sig, 2.0) == pytest.approx(abs(1.5 - 2.0j), rel=1e-14)


def test_zero_one_zero_example():
    sig = SampledSignal(np.array([0.0, 0.5, 1.0]), np.array([0.0, 1.0, 0.0], dtype=complex))
    assert vp_norm(sig, 2.0) == pytest.approx(np.sqrt(2.0), rel=1e-14)


def test_alternating_signal_matches_brute_force():
    vals = np.array([1, -1, 1, -1, 1, -1, 1, -1], dtype=complex)
    sig = SampledSignal(np.arange(8.0) / 7.0, vals)
    assert vp_norm(sig, 2.0) == brute_vp_norm(vals, 2.0)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_dp_equals_brute_force(p):
    rng = np.random.default_rng(0)
    for trial in range(25):
        sig = random_signal(rng, int(rng.integers(1, 11)))
        ours = vp_norm(sig, p)
        brute = brute_vp_norm(sig.values, p)
        if kernels.backend_name() == "compiled":
            assert ours == brute
        else:  # numpy's SIMD pow can differ in the last ulp
            assert ours == pytest.approx(brute, rel=2e-13)


def test_p_validation():
    sig = SampledSignal(np.array([0.0, 1.0]), np.array([1.0, 2.0], dtype=complex))
    with pytest.raises(ValueError):
        vp_norm(sig, 1.0)


@given(st.integers(2, 8), st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_monotone_in_p(n, seed):
    rng = np.random.default_rng(seed)
    sig = random_signal(rng, n)
    norms = [vp_norm(sig, p) for p in (1.5, 2.0, 2.5, 4.0)]
    for a, b in zip(norms, norms[1:]):
        assert b <= a + 1e-12


@given(st.integers(3, 9), st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_restriction_never_increases(n, seed):
    rng = np.random.default_rng(seed)
    sig = random_signal(rng, n)
    keep = rng.random(len(sig.times)) > 0.4
    sub = sig.drop_interior(keep)
    assert vp_norm(sub, 2.0) <= vp_norm(sig, 2.0) + 1e-12


def test_constant_phase_twist_invariance():
    rng = np.random.default_rng(5)
    sig = random_signal(rng, 7)
    rotated = SampledSignal(sig.times, np.exp(1.3j) * sig.values)
    assert vp_norm(rotated, 2.5) == pytest.approx(vp_norm(sig, 2.5), rel=1e-13)


def test_sup_lower_bound():
    rng = np.random.default_rng(6)
    for _ in range(10):
        sig = random_signal(rng, 8)
        assert np.max(np.abs(sig.values)) <= vp_norm(sig, 2.0) + 1e-12


def test_signal_csv_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    sig = random_signal(rng, 9)
    fn = tmp_path / "signal.csv"
    sig.to_csv(fn)
    back = SampledSignal.from_csv(fn)
    assert np.array_equal(back.times, sig.times)
    assert np.array_equal(back.values, sig.values)


# ---------------------------------------------------------------------------
# trajectory norms


def _free_flow_trajectories(box_n, u0_map, path, times):
    """Coefficient signals of e^{iW Lap} u0 on the grid."""
    out = {}
    for k, c in u0_map.items():
        ksq = k[0] ** 2 + k[1] ** 2
        vals = c * np.exp(-1j * np.asarray([path(t) for t in times]) * ksq)
        out[k] = SampledSignal(times, vals)
    return out


def test_ys_vp_free_flow_reproduces_sobolev_expression():
    u0 = {(0, 0): 0.5 + 0.1j, (1, 0): -0.3j, (2, -1): 0.2}
    path = sample_fbm(0.5, 32, 1.0, seed=0)
    times = np.linspace(0.0, 1.0, 9)
    trajs = _free_flow_trajectories(2, u0, path, times)
    for s in (0.0, 0.5, 1.0):
        got = ys_vp_norm(trajs, path, s, 2.0)
        expect = np.sqrt(sum((1 + k[0] ** 2 + k[1] ** 2) ** s * abs(c) ** 2 for k, c in u0.items()))
        assert got == pytest.approx(expect, rel=1e-12)


def test_ys_vp_zero_field():
    path = ModulationPath.identity(1.0)
    times = np.linspace(0.0, 1.0, 5)
    trajs = {(0, 0): SampledSignal(times, np.zeros(5, dtype=complex))}
    assert ys_vp_norm(trajs, path, 0.5, 2.0) == 0.0


def test_ys_vp_disjoint_support_pythagoras():
    rng = np.random.default_rng(8)
    path = sample_fbm(0.5, 16, 1.0, seed=1)
    times = np.linspace(0.0, 1.0, 7)
    ks = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0)]
    trajs = {
        k: SampledSignal(times, rng.standard_normal(7) + 1j * rng.standard_normal(7))
        for k in ks
    }
    a = {k: trajs[k] for k in ks[:2]}
    b = {k: trajs[k] for k in ks[2:]}
    s, p = 0.5, 2.0
    total = ys_vp_norm(trajs, path, s, p) ** 2
    assert ys_vp_norm(a, path, s, p) ** 2 + ys_vp_norm(b, path, s, p) ** 2 == pytest.approx(total, rel=1e-12)


def test_trajectory_grid_mismatch_rejected():
    path = ModulationPath.identity(1.0)
    t1 = np.linspace(0.0, 1.0, 5)
    t2 = np.linspace(0.0, 1.0, 6)
    trajs = {
        (0, 0): SampledSignal(t1, np.ones(5, dtype=complex)),
        (1, 0): SampledSignal(t2, np.ones(6, dtype=complex)),
    }
    with pytest.raises(ValueError, match="grid"):
        ys_vp_norm(trajs, path, 0.0, 2.0)


def test_vpw_free_flow_is_constant_trajectory():
    u0 = {(0, 0): 0.2, (1, 1): 0.4j, (2, 0): -0.1}
    path = sample_fbm(0.5, 32, 1.0, seed=2)
    times = np.linspace(0.0, 1.0, 11)
    trajs = _free_flow_trajectories(2, u0, path, times)
    s = 0.7
    expect = np.sqrt(sum((1 + k[0] ** 2 + k[1] ** 2) ** s * abs(c) ** 2 for k, c in u0.items()))
    assert vpw_hs_norm(trajs, path, s, 2.0) == pytest.approx(expect, rel=1e-12)


def test_vpw_embeds_into_ys():
    rng = np.random.default_rng(9)
    path = sample_fbm(0.5, 16, 1.0, seed=3)
    times = np.linspace(0.0, 1.0, 8)
    for trial in range(20):
        ks = [(i, j) for i in range(-1, 2) for j in range(-1, 2)]
        trajs = {
            k: SampledSignal(times, rng.standard_normal(8) + 1j * rng.standard_normal(8))
            for k in ks
        }
        for s in (0.0, 0.5):
            assert vpw_hs_norm(trajs, path, s, 2.0) <= ys_vp_norm(trajs, path, s, 2.0) + 1e-9


def test_single_coefficient_norms_coincide():
    rng = np.random.default_rng(10)
    path = sample_fbm(0.5, 16, 1.0, seed=4)
    times = np.linspace(0.0, 1.0, 9)
    trajs = {(2, 1): SampledSignal(times, rng.standard_normal(9) + 1j * rng.standard_normal(9))}
    s, p = 0.5, 2.0
    assert vpw_hs_norm(trajs, path, s, p) == pytest.approx(ys_vp_norm(trajs, path, s, p), rel=1e-12)


# ---------------------------------------------------------------------------
# atoms


def test_one_step_atom_norm():
    p = 2.0
    atom, norm = make_up_atom([0.0, 1.0], [[1.0]], p)
    # sampled signal is (phi, 0): enumerate partitions on 3 grid points
    times = np.array([0.0, 0.5, 1.0])
    vals = np.array([1.0, 1.0, 0.0], dtype=complex)
    oracle = brute_vp_norm(vals, p)
    assert norm == pytest.approx(oracle, rel=1e-14)
    assert norm == pytest.approx(2.0 ** (1.0 / p), rel=1e-14)


def test_two_equal_steps_atom_norm():
    p = 2.0
    step = 2.0 ** (-1.0 / p)
    atom, norm = make_up_atom([0.0, 0.4, 1.0], [[step], [step]], p)
    vals = np.array([step, step, 0.0], dtype=complex)
    assert norm == pytest.approx(brute_vp_norm(vals, p), rel=1e-14)


def test_atom_phase_invariance():
    p = 2.5
    a = 2.0 ** (-1.0 / p)
    _, n1 = make_up_atom([0.0, 0.5, 1.0], [[a], [a]], p)
    _, n2 = make_up_atom([0.0, 0.5, 1.0], [[a * np.exp(0.9j)], [a * np.exp(0.9j)]], p)
    assert n1 == pytest.approx(n2, rel=1e-13)


def test_atom_normalization_enforced():
    with pytest.raises(ValueError, match="normalization"):
        make_up_atom([0.0, 1.0], [[0.9]], 2.0)


def test_atom_norm_bounded_independent_of_partition():
    rng = np.random.default_rng(11)
    for p in (1.5, 2.0, 3.0):
        bound = norm_bound_for_atoms(p)
        for trial in range(10):
            k = int(rng.integers(1, 6))
            parts = np.concatenate([[0.0], np.sort(rng.random(k - 1)), [1.0]]) if k > 1 else np.array([0.0, 1.0])
            parts = np.unique(parts)
            steps = rng.standard_normal((len(parts) - 1, 2)) + 1j * rng.standard_normal((len(parts) - 1, 2))
            sizes = np.sqrt(np.sum(np.abs(steps) ** 2, axis=1))
            steps /= np.sum(sizes ** p) ** (1.0 / p)
            _, norm = make_up_atom(parts, steps, p)
            assert norm <= bound + 1e-9


def test_ys_vp_report_per_k_contributions(tmp_path):
    from modnls.variation import ys_vp_report

    rng = np.random.default_rng(12)
    path = sample_fbm(0.5, 16, 1.0, seed=5)
    times = np.linspace(0.0, 1.0, 6)
    trajs = {
        (0, 0): SampledSignal(times, rng.standard_normal(6) + 0j),
        (1, 2): SampledSignal(times, rng.standard_normal(6) + 0j),
    }
    rep = ys_vp_report(trajs, path, 0.5, 2.0)
    total_sq = sum(entry["contribution"] for entry in rep["per_k"])
    assert rep["value"] == pytest.approx(np.sqrt(total_sq), rel=1e-12)
    assert rep["value"] == pytest.approx(ys_vp_norm(trajs, path, 0.5, 2.0), rel=1e-12)
    assert {tuple(e["k"]) for e in rep["per_k"]} == {(0, 0), (1, 2)}
