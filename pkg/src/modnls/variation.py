"""p-variation norms of sampled signals and the derived trajectory norms.

The V^p norm here is the exact supremum over partitions drawn from the
sample grid (endpoints always included), with the convention that the value
at the left endpoint counts as an increment from zero.  For the discrete
object this is exact; for any continuum extension it is a lower bound.
"""

import math
from dataclasses import dataclass

import numpy as np

from modnls import kernels


@dataclass(frozen=True)
class SampledSignal:
    times: np.ndarray
    values: np.ndarray  # complex, one per time

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.complex128)
        if times.ndim != 1 or len(times) < 1 or times.shape != values.shape:
            raise ValueError("need matching 1-d times and values with >= 1 sample")
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def drop_interior(self, keep_mask):
        keep = np.asarray(keep_mask, dtype=bool).copy()
        keep[0] = keep[-1] = True
        return SampledSignal(self.times[keep], self.values[keep])

    def to_csv(self, path):
        from modnls.io_utils import write_csv

        rows = [(t, v.real, v.imag) for t, v in zip(self.times, self.values)]
        write_csv(path, ["t", "re", "im"], rows)

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1] + 1j * data[:, 2])


def vp_norm(signal, p):
    """Exact V^p norm of a sampled signal.

    Dynamic programming over ordered sample pairs, O(M^2); the convention
    term |v(t_0)|^p is part of every partition sum.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    values = signal.values if isinstance(signal, SampledSignal) else np.asarray(signal, dtype=np.complex128)
    if len(values) == 1:
        return float(abs(values[0]))
    interior = kernels.vp_dp_batch(values[None, :], float(p))[0]
    return float((interior + abs(values[0]) ** p) ** (1.0 / p))


def vp_norms_batch(values_matrix, p):
    """vp_norm for many scalar signals sharing one grid (rows of the matrix)."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    values_matrix = np.asarray(values_matrix, dtype=np.complex128)
    if values_matrix.shape[1] == 1:
        return np.abs(values_matrix[:, 0]).astype(np.float64)
    interior = kernels.vp_dp_batch(values_matrix, float(p))
    return (interior + np.abs(values_matrix[:, 0]) ** p) ** (1.0 / p)


def _trajectory_arrays(trajectories):
    ks = sorted(trajectories)
    base = trajectories[ks[0]].times
    rows = []
    for k in ks:
        sig = trajectories[k]
        if not np.array_equal(sig.times, base):
            raise ValueError("trajectories must share one time grid")
        rows.append(sig.values)
    return np.asarray(ks, dtype=np.int64), np.asarray(rows), base


def twisted_rows(ks, rows, w_values):
    """Apply the phase twist e^{i W(t) |k|^2} along each coefficient row."""
    ksq = (ks ** 2).sum(axis=1).astype(np.float64)
    return rows * np.exp(1j * np.multiply.outer(ksq, np.asarray(w_values, dtype=np.float64)))


def ys_vp_norm_arrays(ks, rows, w_values, s, p):
    twisted = twisted_rows(ks, rows, w_values)
    per_k = vp_norms_batch(twisted, p)
    weights = (1.0 + (ks ** 2).sum(axis=1)) ** s
    return float(np.sqrt(np.sum(weights * per_k ** 2)))


def _path_values(path, times):
    lo, hi = path.domain()
    if times[0] < lo or times[-1] > hi:
        raise ValueError("trajectory grid outside path domain")
    return np.asarray(path(times), dtype=np.float64)


def ys_vp_norm(trajectories, path, s, p):
    """(sum_k <k>^{2s} |e^{i W |k|^2} u_k|_{V^p}^2)^{1/2} over a shared grid.

    A constant twisted trajectory contributes exactly its modulus, so the
    free evolution of u0 reproduces the weighted-coefficient Sobolev
    expression of u0.  Coefficients are weighed by <k>^s only: trajectory
    norms carry no (2pi) factor, unlike the field-level Sobolev norm.
    """
    ks, rows, times = _trajectory_arrays(trajectories)
    return ys_vp_norm_arrays(ks, rows, _path_values(path, times), s, p)


def vpw_hs_norm_arrays(ks, rows, w_values, s, p):
    twisted = twisted_rows(ks, rows, w_values)
    weights = (1.0 + (ks ** 2).sum(axis=1)) ** s
    # pairwise H^s distances between time samples of the twisted trajectory
    diff = twisted[:, None, :] - twisted[:, :, None]
    dist_sq = np.einsum("k,kij->ij", weights, np.abs(diff) ** 2)
    incpow = np.sqrt(np.maximum(dist_sq, 0.0)) ** p
    interior = kernels.max_partition_sum(np.ascontiguousarray(incpow))
    head = math.sqrt(float(np.sum(weights * np.abs(twisted[:, 0]) ** 2))) ** p
    return float((interior + head) ** (1.0 / p))


def vpw_hs_norm(trajectories, path, s, p):
    """V^p norm (same grid and t_{-1} convention) of the H^s-valued twisted
    trajectory t -> e^{-i W(t) Laplacian} u(t)."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    ks, rows, times = _trajectory_arrays(trajectories)
    return vpw_hs_norm_arrays(ks, rows, _path_values(path, times), s, p)


def ys_vp_report(trajectories, path, s, p):
    """JSON-ready audit of the trajectory norm: per-coefficient V^p values,
    weights, and contributions to the square."""
    ks, rows, times = _trajectory_arrays(trajectories)
    twisted = twisted_rows(ks, rows, _path_values(path, times))
    per_k = vp_norms_batch(twisted, p)
    weights = (1.0 + (ks ** 2).sum(axis=1)) ** s
    total = float(np.sqrt(np.sum(weights * per_k ** 2)))
    return {
        "s": s,
        "p": p,
        "value": total,
        "per_k": [
            {
                "k": [int(a), int(b)],
                "vp": float(v),
                "weight": float(w),
                "contribution": float(w * v * v),
            }
            for (a, b), v, w in zip(ks, per_k, weights)
        ],
    }


# ---------------------------------------------------------------------------
# step-function atoms


@dataclass(frozen=True)
class UpAtom:
    """Normalized step function sum_j 1_{[t_{j-1}, t_j)} phi_j."""

    partition: np.ndarray
    steps: np.ndarray  # (k, dim) complex
    p: float

    def sampled(self):
        """Values at the partition points (right-open steps: 0 at the end)."""
        vals = np.vstack([self.steps, np.zeros((1, self.steps.shape[1]), dtype=np.complex128)])
        return self.partition, vals


def norm_bound_for_atoms(p):
    """Partition-independent bound on the V^p norm of any U^p atom."""
    return (1.0 + 2.0 ** p) ** (1.0 / p)


def make_up_atom(partition, steps, p):
    """Build a U^p atom and report its exact V^p norm.

    ``steps`` is a sequence of coefficient vectors phi_j; the normalization
    (sum_j |phi_j|^p)^{1/p} = 1 is required to 1e-9.  The returned norm is
    always at most norm_bound_for_atoms(p).
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    partition = np.asarray(partition, dtype=np.float64)
    if len(partition) < 2 or not np.all(np.diff(partition) > 0):
        raise ValueError("partition must be strictly increasing with >= 2 points")
    steps = np.atleast_2d(np.asarray(steps, dtype=np.complex128))
    if steps.shape[0] != len(partition) - 1:
        raise ValueError("need one step vector per partition interval")
    sizes = np.sqrt(np.sum(np.abs(steps) ** 2, axis=1))
    total = float(np.sum(sizes ** p) ** (1.0 / p))
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"atom normalization violated: got {total!r}")
    atom = UpAtom(partition, steps, float(p))
    times, vals = atom.sampled()
    # vector-valued V^p via the chain DP on pairwise distances
    diff = vals[None, :, :] - vals[:, None, :]
    dist = np.sqrt(np.sum(np.abs(diff) ** 2, axis=2))
    interior = kernels.max_partition_sum(np.ascontiguousarray(dist ** p))
    head = float(np.sqrt(np.sum(np.abs(vals[0]) ** 2))) ** p
    norm = float((interior + head) ** (1.0 / p))
    return atom, norm
