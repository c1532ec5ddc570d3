"""Modulation functions W_t and their oscillatory integrals.

A path is a sampled, piecewise-linearly interpolated real function on
[0, horizon] with W(0) at time 0.  Phi(tau) = int e^{i W(u) tau} du is
computed in closed form on each linear segment, which is what makes the
exact-sum route for space-time L^4 norms possible.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

_PHI_SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class ModulationPath:
    """Piecewise-linear W with strictly increasing sample times, t_0 = 0."""

    times: np.ndarray
    values: np.ndarray
    kind: str = "custom"
    hurst: float = None
    seed: int = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if times.ndim != 1 or times.shape != values.shape or len(times) < 2:
            raise ValueError("need matching 1-d time and value arrays with >= 2 samples")
        if times[0] != 0.0:
            raise ValueError("paths start at t = 0")
        if not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValueError("times and values must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def horizon(self):
        return float(self.times[-1])

    def domain(self):
        return 0.0, self.horizon

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < 0.0) or np.any(t > self.horizon):
            raise ValueError(f"time outside path domain [0, {self.horizon}]")
        out = np.interp(t, self.times, self.values)
        return float(out) if out.ndim == 0 else out

    def refined(self, factor=2):
        """Same function, with each segment split into ``factor`` pieces."""
        if factor < 1 or int(factor) != factor:
            raise ValueError("factor must be a positive integer")
        pieces = [np.array([self.times[0]])]
        for a, b in zip(self.times[:-1], self.times[1:]):
            pieces.append(np.linspace(a, b, factor + 1)[1:])
        times = np.concatenate(pieces)
        return ModulationPath(times, np.interp(times, self.times, self.values), self.kind, self.hurst, self.seed)

    @classmethod
    def identity(cls, horizon, steps=1):
        times = np.linspace(0.0, horizon, steps + 1)
        return cls(times, times.copy(), kind="identity")

    @classmethod
    def constant(cls, horizon, value=0.0, steps=1):
        times = np.linspace(0.0, horizon, steps + 1)
        return cls(times, np.full_like(times, value), kind="custom")

    @classmethod
    def from_samples(cls, times, values):
        return cls(np.asarray(times, dtype=float), np.asarray(values, dtype=float), kind="custom")

    def to_csv(self, path):
        from modnls.io_utils import write_csv

        write_csv(path, ["t", "w"], zip(self.times, self.values))

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls.from_samples(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class IrregularityQuery:
    """Finite grids over which the oscillatory-decay functional is maximised."""

    rho: float
    gamma: float
    tau_grid: tuple
    time_pairs: tuple

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("rho must be >= 0")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if len(self.tau_grid) == 0 or len(self.time_pairs) == 0:
            raise ValueError("tau grid and time pairs must be nonempty")
        object.__setattr__(self, "tau_grid", tuple(float(t) for t in self.tau_grid))
        pairs = tuple((float(s), float(t)) for s, t in self.time_pairs)
        if any(s >= t for s, t in pairs):
            raise ValueError("time pairs need s < t")
        object.__setattr__(self, "time_pairs", pairs)


# ---------------------------------------------------------------------------
# fractional Brownian motion sampling


def _fgn_circulant(n, hurst, rng):
    """Unit-spacing fractional Gaussian noise by circulant embedding.

    Returns None when the embedding has a genuinely negative eigenvalue (the
    method is then not exact and the caller falls back to a dense factor).
    """
    k = np.arange(n + 1, dtype=np.float64)
    gamma = 0.5 * (
        np.abs(k + 1) ** (2 * hurst) - 2 * k ** (2 * hurst) + np.abs(k - 1) ** (2 * hurst)
    )
    row = np.concatenate([gamma, gamma[-2:0:-1]])  # length 2n
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        return None
    lam = np.clip(lam, 0.0, None)
    m = 2 * n
    re = rng.standard_normal(n + 1)
    im = rng.standard_normal(n - 1) if n > 1 else np.zeros(0)
    v = np.zeros(m, dtype=np.complex128)
    v[0] = math.sqrt(lam[0]) * re[0]
    v[n] = math.sqrt(lam[n]) * re[n]
    v[1:n] = np.sqrt(lam[1:n] / 2) * (re[1:n] + 1j * im)
    v[n + 1 :] = np.conj(v[1:n][::-1])
    return np.fft.fft(v).real[:n] / math.sqrt(m)


def _fgn_dense(n, hurst, rng):
    """Exact fGn through an eigenfactorization of the covariance matrix."""
    k = np.arange(n, dtype=np.float64)
    gamma = 0.5 * (
        np.abs(k + 1) ** (2 * hurst) - 2 * k ** (2 * hurst) + np.abs(k - 1) ** (2 * hurst)
    )
    idx = np.abs(k[:, None] - k[None, :]).astype(np.int64)
    cov = gamma[idx]
    eigval, eigvec = np.linalg.eigh(cov)
    if eigval.min() < -1e-8 * eigval.max():
        raise RuntimeError(
            "fGn covariance is not positive semidefinite: "
            f"min eigenvalue {eigval.min():.3e}"
        )
    root = eigvec * np.sqrt(np.clip(eigval, 0.0, None))
    return root @ rng.standard_normal(n)


def sample_fbm(hurst, steps, horizon, seed):
    """Fractional Brownian motion on a uniform grid, exact in law.

    Circulant embedding of the increment covariance is tried first and a
    dense covariance square root is the fallback.  Identical arguments give
    bit-identical paths.
    """
    if not 0 < hurst < 1:
        raise ValueError("Hurst index must lie in (0, 1)")
    if steps < 1 or int(steps) != steps:
        raise ValueError("steps must be a positive integer")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    fgn = _fgn_circulant(int(steps), hurst, rng)
    if fgn is None:
        fgn = _fgn_dense(int(steps), hurst, rng)
    dt = horizon / steps
    increments = dt ** hurst * fgn
    values = np.concatenate([[0.0], np.cumsum(increments)])
    times = np.linspace(0.0, horizon, int(steps) + 1)
    return ModulationPath(times, values, kind="fbm", hurst=float(hurst), seed=int(seed))


def trial_seed(master_seed, domain, index):
    """Per-trial seed with disjoint domains (paths vs data vs anything else)."""
    return np.random.SeedSequence(master_seed, spawn_key=(domain, index))


def sample_fbm_trial(hurst, steps, horizon, master_seed, domain, index):
    ss = trial_seed(master_seed, domain, index)
    rng = np.random.default_rng(ss)
    fgn = _fgn_circulant(int(steps), hurst, rng)
    if fgn is None:
        fgn = _fgn_dense(int(steps), hurst, rng)
    dt = horizon / steps
    values = np.concatenate([[0.0], np.cumsum(dt ** hurst * fgn)])
    return ModulationPath(np.linspace(0.0, horizon, int(steps) + 1), values, kind="fbm", hurst=float(hurst))


# ---------------------------------------------------------------------------
# oscillatory integrals


def _segment_phi(a, slope, length, tau):
    """int_0^length exp(i (a + slope*u) tau) du, exact.

    Switches to the series of (e^{iz}-1)/(iz) when |slope*tau*length| is
    tiny, to dodge cancellation; the two branches agree at the cutoff.
    """
    z = slope * tau * length
    lead = np.exp(1j * a * tau)
    small = np.abs(z) < _PHI_SERIES_CUTOFF
    zs = np.where(small, 0.0, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = (np.exp(1j * zs) - 1.0) / (1j * zs)
    series = 1.0 + 1j * z / 2 - z ** 2 / 6 - 1j * z ** 3 / 24
    phi1 = np.where(small, series, exact)
    return lead * length * phi1


def phi_integral(path, s, t, tau):
    """int_s^t exp(i W(u) tau) du for a piecewise-linear path.

    Exact per segment; ``tau`` may be a scalar or an array (the result is
    vectorized over tau).  |result| <= t - s always.
    """
    lo, hi = path.domain()
    if not (lo <= s < t <= hi):
        raise ValueError("need s < t inside the path domain")
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=np.float64))
    times = path.times
    values = path.values
    i0 = np.searchsorted(times, s, side="right") - 1
    i1 = np.searchsorted(times, t, side="left")
    total = np.zeros(tau_arr.shape, dtype=np.complex128)
    lefts = []
    slopes = []
    lengths = []
    starts = []
    for i in range(i0, i1):
        seg_l = max(times[i], s)
        seg_r = min(times[i + 1], t)
        if seg_r <= seg_l:
            continue
        slope = (values[i + 1] - values[i]) / (times[i + 1] - times[i])
        lefts.append(values[i] + slope * (seg_l - times[i]))
        slopes.append(slope)
        lengths.append(seg_r - seg_l)
        starts.append(seg_l)
    if lefts:
        a = np.asarray(lefts)[:, None]
        b = np.asarray(slopes)[:, None]
        h = np.asarray(lengths)[:, None]
        total = _segment_phi(a, b, h, tau_arr[None, :]).sum(axis=0)
    return complex(total[0]) if np.isscalar(tau) or np.asarray(tau).ndim == 0 else total


def irregularity_functional(path, query):
    """Grid maximum of (1+|tau|)^rho |Phi_{[s,t]}(tau)| / (t-s)^gamma.

    This is a lower bound for the supremum over all of R x {s < t}; it is
    monotone under grid refinement and never extrapolated.
    """
    lo, hi = path.domain()
    for s, t in query.time_pairs:
        if not (lo <= s < t <= hi):
            raise ValueError("time pair outside path domain")
    taus = np.asarray(query.tau_grid, dtype=np.float64)
    best = 0.0
    for s, t in query.time_pairs:
        phi = phi_integral(path, s, t, taus)
        vals = (1 + np.abs(taus)) ** query.rho * np.abs(phi) / (t - s) ** query.gamma
        best = max(best, float(vals.max()))
    return best


def irregularity_rows(path, query):
    """One (rho, gamma, tau, s, t, value) row per grid point, for export."""
    rows = []
    taus = np.asarray(query.tau_grid, dtype=np.float64)
    for s, t in query.time_pairs:
        phi = phi_integral(path, s, t, taus)
        vals = (1 + np.abs(taus)) ** query.rho * np.abs(phi) / (t - s) ** query.gamma
        for tau, v in zip(taus, vals):
            rows.append((query.rho, query.gamma, float(tau), s, t, float(v)))
    return rows


# ---------------------------------------------------------------------------
# fBm characteristic function and its time integral


def expected_char(hurst, t, tau):
    """E exp(i W_t tau) for fBm: exp(-tau^2 t^{2H} / 2)."""
    if not 0 < hurst < 1:
        raise ValueError("Hurst index must lie in (0, 1)")
    if t < 0:
        raise ValueError("time must be >= 0")
    return float(np.exp(-0.5 * tau ** 2 * t ** (2 * hurst)))


def expected_char_integral_bound(hurst, t0, tau_grid):
    """Quadrature of int_0^{T0} exp(-tau^2 t^{2H}/2) dt against the reference
    envelope min(|tau|^{-1/H}, T0), per tau.

    Returns rows (tau, integral, envelope, ratio) and the largest ratio.
    """
    if t0 <= 0:
        raise ValueError("T0 must be positive")
    rows = []
    for tau in tau_grid:
        integral, _ = quad(
            lambda t: math.exp(-0.5 * tau ** 2 * t ** (2 * hurst)),
            0.0,
            t0,
            epsabs=1e-14,
            epsrel=1e-9,
            limit=200,
        )
        envelope = t0 if tau == 0 else min(abs(tau) ** (-1.0 / hurst), t0)
        rows.append((float(tau), float(integral), float(envelope), float(integral / envelope)))
    c_h = max(r[3] for r in rows)
    return {"rows": rows, "c_h": c_h}
