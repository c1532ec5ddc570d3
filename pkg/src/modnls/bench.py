"""Empirical space-time L^4 inequality checks for the modulated propagator.

Every check reports a ratio of a measured norm against the reference
envelope; the envelopes carry implicit constants, so the benches record
finiteness, trends, and growth factors rather than absolute thresholds.
Data seeds and path seeds are drawn from disjoint seed domains so that the
sampled fields are independent of the sampled modulations.
"""

from dataclasses import dataclass, field

import numpy as np

from modnls.io_utils import write_csv, write_json
from modnls.lattice import FrequencyBox
from modnls.spectral import (
    FourierField,
    evaluate_physical,
    l2_norm,
    l4_fourth_power_exact,
    l4_norm_spacetime,
    max_abs_frequency,
    project,
)
from modnls.variation import ys_vp_norm_arrays

PATH_SEED_DOMAIN = 0
DATA_SEED_DOMAIN = 1


@dataclass
class BenchReport:
    name: str
    params: dict
    ratios: list
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.ratios, dtype=np.float64)
        if len(arr) and not np.all(np.isfinite(arr) & (arr >= 0)):
            raise ValueError("ratios must be nonnegative and finite")

    def aggregates(self):
        arr = np.asarray(self.ratios, dtype=np.float64)
        if len(arr) == 0:
            return {"count": 0}
        return {
            "count": int(len(arr)),
            "max": float(arr.max()),
            "mean": float(arr.mean()),
            "q50": float(np.quantile(arr, 0.5)),
            "q90": float(np.quantile(arr, 0.9)),
        }

    def to_json(self, path):
        write_json(
            path,
            {
                "name": self.name,
                "params": self.params,
                "aggregates": self.aggregates(),
                "extra": self.extra,
                "ratios": [float(r) for r in self.ratios],
            },
        )


def pathwise_ratio(f, box, path, interval, epsilon):
    """|e^{iW Lap} P_S f|_{L^4(I x T^2)} / ((N^{2 eps} sqrt(T0))^{1/4} |f|_{L^2}).

    The numerator uses the exact parallelogram route when the box is small
    enough (half side <= 8) and space-time quadrature otherwise.
    """
    s, t = interval
    t0 = t - s
    denom_data = l2_norm(f)
    if denom_data == 0:
        raise ValueError("zero field has no Strichartz ratio")
    projected = project(f, [tuple(p) for p in box.points()])
    mode = "exact-sum" if box.half_side <= 8 else "grid"
    numer = l4_norm_spacetime(projected, path, interval, mode=mode)
    n = max(box.half_side, 1)
    denom = (n ** (2 * epsilon) * np.sqrt(t0)) ** 0.25 * denom_data
    return float(numer / denom)


def stochastic_ratio(box, hurst, trials, interval, steps, master_seed, f_sampler=None):
    """Monte Carlo L^4(Omega x I x T^2) ratio against the fBm envelope
    (log(N) T0 + T0^{1-H})^{1/4} |f|_{L^4(Omega) L^2}.

    ``f_sampler(rng) -> FourierField`` draws the data; by default a complex
    Gaussian field on the box.  Estimates carry a standard error from the
    trial spread of the fourth powers.
    """
    from modnls.paths import sample_fbm_trial, trial_seed

    if trials < 2:
        raise ValueError("need at least two trials for a standard error")
    s, t = interval
    t0 = t - s
    if f_sampler is None:
        def f_sampler(rng):
            return FourierField.random(box, rng)

    numer4 = np.empty(trials)
    datal2_4 = np.empty(trials)
    for i in range(trials):
        path = sample_fbm_trial(hurst, steps, t, master_seed, PATH_SEED_DOMAIN, i)
        rng = np.random.default_rng(trial_seed(master_seed, DATA_SEED_DOMAIN, i))
        f = f_sampler(rng)
        numer4[i] = l4_fourth_power_exact(f, path, interval)
        datal2_4[i] = l2_norm(f) ** 4
    n = max(box.half_side, 1)
    envelope = (np.log(n) * t0 + t0 ** (1.0 - hurst)) ** 0.25
    numer = float(np.mean(numer4) ** 0.25)
    denom = envelope * float(np.mean(datal2_4) ** 0.25)
    ratio = numer / denom
    se4 = float(np.std(numer4, ddof=1) / np.sqrt(trials))
    # delta method through the fourth root
    se = se4 * np.mean(numer4) ** (-0.75) / 4.0 / denom
    return BenchReport(
        name="stochastic",
        params={
            "N": box.half_side,
            "T0": t0,
            "hurst": hurst,
            "trials": trials,
            "seed": master_seed,
        },
        ratios=[ratio],
        extra={
            "standard_error": float(se),
            "numerator": numer,
            "denominator": denom,
            "trial_fourth_powers": [float(x) for x in numer4],
        },
    )


def _tile_of(point, side):
    return (int(np.floor((point[0] - 1) / side)), int(np.floor((point[1] - 1) / side)))


def square_decomposition_ratio(fields, times, w_values, side, path, interval, epsilon):
    """Per-tile L^4 / envelope ratios for the side-``side`` square tiling,
    with the Y^0(V^2) value of the full trajectory as data surrogate.

    ``fields`` samples a space-time function on ``times``; its L^4 norm per
    tile uses exact spatial quadrature and the trapezoid rule in time on the
    given nodes.
    """
    if side < 1 or (side & (side - 1)) != 0:
        raise ValueError("tile side must be a power of two")
    s, t = interval
    t0 = t - s
    box = fields[0].box
    kx, ky = fields[0].k_arrays()
    ks = np.column_stack([kx.reshape(-1), ky.reshape(-1)])
    rows = np.stack([f.coeffs.reshape(-1) for f in fields]).T
    surrogate = ys_vp_norm_arrays(ks, rows, w_values, 0.0, 2.0)
    if surrogate == 0:
        raise ValueError("zero trajectory has no decomposition ratio")

    tiles = {}
    for pt in box.points():
        tiles.setdefault(_tile_of(pt, side), []).append(tuple(pt))

    m = 4 * max_abs_frequency(box) + 1
    dx_weight = (2 * np.pi / m) ** 2
    mask = (times >= s - 1e-15) & (times <= t + 1e-15)
    ts = times[mask]
    if len(ts) < 2:
        raise ValueError("need at least two time nodes inside the interval")
    ratios = {}
    envelope = (side ** (2 * epsilon) * np.sqrt(t0)) ** 0.25
    for tile, pts in sorted(tiles.items()):
        fourth = np.empty(len(ts))
        for i, idx in enumerate(np.nonzero(mask)[0]):
            pc = project(fields[idx], pts)
            vals = evaluate_physical(pc, m)
            fourth[i] = dx_weight * float(np.sum(np.abs(vals) ** 4))
        integral = float(np.trapezoid(fourth, ts))
        ratios[tile] = integral ** 0.25 / (envelope * surrogate)
    return {
        "per_tile": ratios,
        "max_ratio": max(ratios.values()),
        "surrogate": surrogate,
        "tile_side": side,
    }


def quadrilinear_identity_check(f, path, interval):
    """Relative gap between the two independent evaluations of the
    space-time fourth-power integral of the free evolution."""
    if f.box.half_side > 4:
        raise ValueError("exact-sum route limited to boxes with half side <= 4")
    from modnls.spectral import l4_fourth_power_grid

    exact = l4_fourth_power_exact(f, path, interval)
    grid = l4_fourth_power_grid(f, path, interval)
    if exact == 0:
        raise ValueError("zero field: identity check undefined")
    return abs(grid - exact) / exact


def extremizer_search(box, path, interval, epsilon, restarts=3, sweeps=20, step=0.25, seed=0):
    """Experimental: random-restart coordinate ascent on the pathwise ratio.

    Perturbs one coefficient at a time (real and imaginary parts) and keeps
    improvements; reports the best ratio and field found.  No optimality is
    claimed.
    """
    best_ratio = 0.0
    best_field = None
    side = box.side
    for restart in range(restarts):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2, restart)))
        f = FourierField.random(box, rng)
        ratio = pathwise_ratio(f, box, path, interval, epsilon)
        for _ in range(sweeps):
            improved = False
            for i in range(side):
                for j in range(side):
                    for delta in (step, -step, 1j * step, -1j * step):
                        trial = f.coeffs.copy()
                        trial[i, j] += delta
                        cand = FourierField(box, trial)
                        if l2_norm(cand) == 0:
                            continue
                        r = pathwise_ratio(cand, box, path, interval, epsilon)
                        if r > ratio * (1 + 1e-12):
                            f, ratio, improved = cand, r, True
            if not improved:
                break
        if ratio > best_ratio:
            best_ratio, best_field = ratio, f
    return best_ratio, best_field


def report_rows_to_csv(rows, pathname):
    write_csv(pathname, ["seed", "N", "T0", "eps", "H", "ratio"], rows)
