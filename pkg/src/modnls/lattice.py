"""Parallelogram combinatorics on finite frequency boxes.

An ordered 4-tuple (k1, k2, k3, k4) of lattice points with
k1 - k2 + k3 - k4 = 0 is a parallelogram; its resonance level is
tau = |k1|^2 - |k2|^2 + |k3|^2 - |k4|^2.  The module enumerates
parallelograms on a box, bins them by tau, evaluates tau-weighted
quadrilinear sums, detects lines carrying many points of a set, and runs
the greedy layer decomposition that removes points sitting on two such
rich lines.

Fast path: grouping ordered point pairs (a, b) by the difference d = a - b
and the square difference s = |a|^2 - |b|^2 turns every per-tau sum into an
autocorrelation in s of a pair table, evaluated by modnls.kernels.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from modnls import kernels
from modnls.io_utils import write_csv


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class FrequencyBox:
    """Square box {xi : |xi_1 - a| <= N, |xi_2 - b| <= N} in Z^2."""

    center: tuple
    half_side: int

    def __post_init__(self):
        a, b = self.center
        if int(a) != a or int(b) != b:
            raise ValueError("box center must be an integer 2-vector")
        if self.half_side < 0 or int(self.half_side) != self.half_side:
            raise ValueError("half_side must be a nonnegative integer")
        object.__setattr__(self, "center", (int(a), int(b)))
        object.__setattr__(self, "half_side", int(self.half_side))

    @property
    def side(self):
        return 2 * self.half_side + 1

    @property
    def point_count(self):
        return self.side ** 2

    def contains(self, xi):
        a, b = self.center
        return abs(xi[0] - a) <= self.half_side and abs(xi[1] - b) <= self.half_side

    def points(self):
        """All box points as an (P, 2) int array in lexicographic order."""
        a, b = self.center
        n = self.half_side
        xs = np.arange(a - n, a + n + 1)
        ys = np.arange(b - n, b + n + 1)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()]).astype(np.int64)


@dataclass(frozen=True)
class Parallelogram:
    k1: tuple
    k2: tuple
    k3: tuple
    k4: tuple
    tau: int

    @classmethod
    def from_vertices(cls, k1, k2, k3, k4):
        tau = tau_of((k1, k2, k3, k4))
        return cls(tuple(k1), tuple(k2), tuple(k3), tuple(k4), tau)

    @property
    def vertices(self):
        return (self.k1, self.k2, self.k3, self.k4)


@dataclass(frozen=True)
class LatticeLine:
    """Line p*x + q*y = r with gcd(p, q) = 1 and p > 0, or p = 0 and q > 0."""

    p: int
    q: int
    r: int

    @classmethod
    def through(cls, a, b):
        if tuple(a) == tuple(b):
            raise ValueError("two distinct points are needed to define a line")
        dx = b[0] - a[0]
        dy = b[1] - a[1]
        p, q = dy, -dx
        g = math.gcd(abs(p), abs(q))
        p //= g
        q //= g
        if p < 0 or (p == 0 and q < 0):
            p, q = -p, -q
        return cls(int(p), int(q), int(p * a[0] + q * a[1]))

    def contains(self, xi):
        return self.p * xi[0] + self.q * xi[1] == self.r

    def incident_points(self, points):
        return [tuple(pt) for pt in points if self.contains(pt)]


# ---------------------------------------------------------------------------
# pair-table machinery


def _as_point_array(points):
    pts = np.asarray(list(points) if not isinstance(points, np.ndarray) else points)
    pts = pts.reshape(-1, 2).astype(np.int64)
    return pts


def pair_tau_correlations(points, values):
    """All per-tau parallelogram sums of a lattice function at once.

    For f given by (points, values) returns (taus, sums) with

        sums[t] = sum over Q = (k1,k2,k3,k4), k_i in points, tau_Q = taus[t]
                  of f(k1) * conj(f(k2)) * f(k3) * conj(f(k4))

    together with the exact parallelogram counts per tau.  Only taus with at
    least one parallelogram are returned, in increasing order.
    """
    pts = _as_point_array(points)
    vals = np.asarray(values, dtype=np.complex128).ravel()
    if len(vals) != len(pts):
        raise ValueError("points and values must have equal length")
    if len(pts) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.complex128), np.zeros(0, dtype=np.int64)

    # center the points: tau is translation invariant and this keeps the
    # square differences (hence the table) small
    pts = pts - np.round(pts.mean(axis=0)).astype(np.int64)
    sq = (pts ** 2).sum(axis=1)
    n = len(pts)

    i = np.repeat(np.arange(n), n)
    j = np.tile(np.arange(n), n)
    d = pts[i] - pts[j]
    s = sq[i] - sq[j]

    d0_min, d0_max = d[:, 0].min(), d[:, 0].max()
    d1_min, d1_max = d[:, 1].min(), d[:, 1].max()
    w1 = d1_max - d1_min + 1
    d_idx = (d[:, 0] - d0_min) * w1 + (d[:, 1] - d1_min)
    n_d = (d0_max - d0_min + 1) * w1
    s_min, s_max = s.min(), s.max()
    s_idx = s - s_min
    n_s = s_max - s_min + 1

    table = np.zeros((n_d, n_s), dtype=np.complex128)
    np.add.at(table, (d_idx, s_idx), vals[i] * vals[j].conj())
    counts_table = np.zeros((n_d, n_s), dtype=np.complex128)
    np.add.at(counts_table, (d_idx, s_idx), 1.0)

    corr = kernels.tau_correlation(table)
    counts = np.rint(kernels.tau_correlation(counts_table).real).astype(np.int64)
    taus = np.arange(-(n_s - 1), n_s)
    occupied = counts > 0
    return taus[occupied], corr[occupied], counts[occupied]


# ---------------------------------------------------------------------------
# operations


def tau_of(vertices):
    """Resonance level of a closed 4-tuple; rejects non-parallelograms."""
    k1, k2, k3, k4 = [np.asarray(v, dtype=np.int64) for v in vertices]
    if not np.array_equal(k1 - k2 + k3 - k4, np.zeros(2, dtype=np.int64)):
        raise ValueError("vertices do not close up: k1 - k2 + k3 - k4 != 0")
    return int(k1 @ k1 - k2 @ k2 + k3 @ k3 - k4 @ k4)


def enumerate_parallelograms(box, shard=None):
    """Yield every parallelogram with all four vertices in the box.

    Order: (k1, k2, k3) lexicographic with k4 = k1 - k2 + k3 forced.
    ``shard = (index, count)`` keeps only the k1 values at positions
    congruent to ``index`` mod ``count``: the shards partition the stream,
    so any reduction over them is independent of the shard count.
    """
    pts = [tuple(p) for p in box.points()]
    members = set(pts)
    sq = {p: p[0] * p[0] + p[1] * p[1] for p in pts}
    k1_list = pts
    if shard is not None:
        index, count = shard
        if not (0 <= index < count):
            raise ValueError("shard must satisfy 0 <= index < count")
        k1_list = pts[index::count]
    for k1 in k1_list:
        for k2 in pts:
            for k3 in pts:
                k4 = (k1[0] - k2[0] + k3[0], k1[1] - k2[1] + k3[1])
                if k4 in members:
                    tau = sq[k1] - sq[k2] + sq[k3] - sq[k4]
                    yield Parallelogram(k1, k2, k3, k4, tau)


def level_set_histogram(box):
    """Histogram tau -> number of box parallelograms at that level."""
    pts = box.points()
    taus, _, counts = pair_tau_correlations(pts, np.ones(len(pts)))
    return {int(t): int(c) for t, c in zip(taus, counts)}


def quadrilinear_sum(f, weight):
    """Sum over parallelograms of f(Q) = f(k1) conj(f(k2)) f(k3) conj(f(k4)),
    each weighted by weight[tau_Q].

    ``f`` maps lattice points to complex values; ``weight`` must cover every
    tau that occurs among the parallelograms of supp(f).
    """
    items = sorted(f.items())
    points = [k for k, _ in items]
    values = [v for _, v in items]
    taus, sums, _ = pair_tau_correlations(points, values)
    missing = [int(t) for t in taus if int(t) not in weight]
    if missing:
        raise ValueError(f"weight missing for occurring tau values {missing[:8]}")
    return complex(sum(weight[int(t)] * s for t, s in zip(taus, sums)))


def detect_rich_lines(points, threshold):
    """Every line meeting the point set in at least ``threshold`` points.

    Returns [(LatticeLine, incidence count)] sorted by decreasing count then
    canonical form.  Incidences are recovered exactly from pair counts:
    a line with c points contributes c(c-1)/2 unordered pairs.
    """
    if threshold < 2 or int(threshold) != threshold:
        raise ValueError("threshold must be an integer >= 2")
    pts = np.unique(_as_point_array(points), axis=0)
    n = len(pts)
    if n < 2:
        return []
    ii, jj = np.triu_indices(n, k=1)
    dx = pts[jj, 0] - pts[ii, 0]
    dy = pts[jj, 1] - pts[ii, 1]
    p = dy
    q = -dx
    g = np.gcd(np.abs(p), np.abs(q))
    p = p // g
    q = q // g
    flip = (p < 0) | ((p == 0) & (q < 0))
    p = np.where(flip, -p, p)
    q = np.where(flip, -q, q)
    r = p * pts[ii, 0] + q * pts[ii, 1]
    keys = np.column_stack([p, q, r])
    uniq, pair_counts = np.unique(keys, axis=0, return_counts=True)
    # c points on a line <=> c(c-1)/2 pairs
    c = ((1 + np.sqrt(1 + 8 * pair_counts.astype(np.float64))) / 2).round().astype(np.int64)
    keep = c >= threshold
    out = [
        (LatticeLine(int(pp), int(qq), int(rr)), int(cc))
        for (pp, qq, rr), cc in zip(uniq[keep], c[keep])
    ]
    out.sort(key=lambda lc: (-lc[1], lc[0].p, lc[0].q, lc[0].r))
    return out


def szemeredi_trotter_shape(n, k):
    """Reference shape n^2/k^3 + n/k for the rich-line count (reported only)."""
    return n * n / k ** 3 + n / k


# ---------------------------------------------------------------------------
# greedy rich-line decomposition


@dataclass
class DecompositionLayer:
    f: dict
    g: dict
    h: dict
    blocks0: list
    blocks: list
    exceptional: list
    lambdas: np.ndarray
    norm: float
    norm_next: float

    @property
    def block_count(self):
        return len(self.blocks0)

    @property
    def ratio(self):
        return self.norm_next / self.norm if self.norm > 0 else 0.0


@dataclass
class Decomposition:
    layers: list
    richness_constant: int
    terminated: bool

    @property
    def ratios(self):
        return [layer.ratio for layer in self.layers]


def _l2(f):
    return math.sqrt(sum(v * v for v in f.values()))


def _sorted_support(f):
    # decreasing value, ties broken lexicographically by coordinates
    return sorted(f, key=lambda k: (-f[k], k))


def _layer_blocks(order):
    """Dyadic blocks of the sorted support: sizes 1, 2, 4, ... with a short
    final block when the support runs out."""
    blocks = []
    start = 0
    j = 0
    while start < len(order):
        blocks.append(order[start : start + 2 ** j])
        start += 2 ** j
        j += 1
    return blocks


def decompose_layer(f, richness_constant):
    """One greedy step: blocks, amplitudes, exceptional sets, and the pruned
    remainder f * 1_E."""
    order = _sorted_support(f)
    blocks0 = _layer_blocks(order)
    lambdas = np.array([2 ** (j / 2) * f[blk[0]] for j, blk in enumerate(blocks0)])
    exceptional = []
    blocks = []
    for j, blk in enumerate(blocks0):
        thresh = 2 ** (j / 2 + richness_constant)
        e_j = []
        if thresh <= len(blk):
            rich = detect_rich_lines(blk, max(2, math.ceil(thresh)))
            rich = [(ln, c) for ln, c in rich if c >= thresh]
            if len(rich) >= 2:
                per_point = {pt: 0 for pt in blk}
                for ln, _ in rich:
                    for pt in ln.incident_points(blk):
                        per_point[pt] += 1
                e_j = [pt for pt in blk if per_point[pt] >= 2]
        exceptional.append(e_j)
        removed = set(e_j)
        blocks.append([pt for pt in blk if pt not in removed])
    union_e = set().union(*[set(e) for e in exceptional]) if exceptional else set()
    f_next = {k: v for k, v in f.items() if k in union_e}
    h = {k: v for k, v in f.items() if k not in union_e}
    g = {}
    for j, blk in enumerate(blocks):
        level = lambdas[j] * 2 ** (-j / 2)
        for pt in blk:
            g[pt] = level
    return DecompositionLayer(
        f=dict(f),
        g=g,
        h=h,
        blocks0=blocks0,
        blocks=blocks,
        exceptional=exceptional,
        lambdas=lambdas,
        norm=_l2(f),
        norm_next=_l2(f_next),
    ), f_next


def rich_line_decomposition(f, richness_constant, max_layers=64):
    """Iterate the greedy layer construction until the remainder vanishes.

    ``f`` maps lattice points to nonnegative reals.  Each layer removes the
    points of the current support that lie on two lines rich in one of the
    dyadic blocks; the telescoping pieces h_n sum back to f.
    """
    if richness_constant < 1 or int(richness_constant) != richness_constant:
        raise ValueError("richness constant must be an integer >= 1")
    f = {tuple(k): float(v) for k, v in f.items() if v != 0.0}
    if any(v < 0 for v in f.values()):
        raise ValueError("decomposition input must be nonnegative")
    layers = []
    current = f
    terminated = False
    for _ in range(max_layers):
        if not current:
            terminated = True
            break
        layer, current = decompose_layer(current, richness_constant)
        layers.append(layer)
    else:
        terminated = not current
    return Decomposition(layers=layers, richness_constant=int(richness_constant), terminated=terminated)


def auto_richness_constant(f, start=1, limit=64):
    """Smallest constant in the doubling sequence start, 2*start, ... whose
    decomposition halves the layer norms: |f_{n+1}|_2 <= |f_n|_2 / 2."""
    c = start
    while c <= limit:
        dec = rich_line_decomposition(f, c)
        if all(layer.norm_next <= 0.5 * layer.norm for layer in dec.layers):
            return c, dec
        c *= 2
    raise RuntimeError(f"no richness constant up to {limit} achieved halving")


# ---------------------------------------------------------------------------
# layered-function inequality report


@dataclass
class LayeredSumReport:
    ratio_zero: float
    ratio_dyadic: float
    block_count: int
    lambda_l2: float
    condition_ok: bool
    dyadic_convention: str = "tau in [M, 2M), M a power of two, positive tau only"


def layered_sum_report(layer, richness_constant):
    """Both inequality ratios for a layered function g = sum_j lambda_j
    2^{-j/2} 1_{S_j}:

        ratio_zero   = sum_{tau=0} g(Q) / (m * |lambda|_2^4)
        ratio_dyadic = sup_M  M^{-1} sum_{tau in [M,2M)} g(Q) / |lambda|_2^4

    The one-rich-line-per-point hypothesis is checked on each pruned block
    and reported; ratios are computed either way.
    """
    g = layer.g
    m = layer.block_count
    lam2 = float(np.sum(layer.lambdas ** 2))
    condition_ok = True
    for j, blk in enumerate(layer.blocks):
        thresh = 2 ** (j / 2 + richness_constant)
        if thresh <= len(blk):
            rich = [(ln, c) for ln, c in detect_rich_lines(blk, max(2, math.ceil(thresh))) if c >= thresh]
            if len(rich) >= 2:
                per_point = {}
                for ln, _ in rich:
                    for pt in ln.incident_points(blk):
                        per_point[pt] = per_point.get(pt, 0) + 1
                if any(v >= 2 for v in per_point.values()):
                    condition_ok = False
    if not g or lam2 == 0.0:
        return LayeredSumReport(0.0, 0.0, m, 0.0, condition_ok)
    items = sorted(g.items())
    taus, sums, _ = pair_tau_correlations([k for k, _ in items], [v for _, v in items])
    sums = sums.real  # g real-valued makes every per-tau sum real
    by_tau = {int(t): float(v) for t, v in zip(taus, sums)}
    ratio_zero = by_tau.get(0, 0.0) / (m * lam2 ** 2)
    tau_max = max((t for t in by_tau if t > 0), default=0)
    ratio_dyadic = 0.0
    m_dyadic = 1
    while m_dyadic <= tau_max:
        block_sum = sum(v for t, v in by_tau.items() if m_dyadic <= t < 2 * m_dyadic)
        ratio_dyadic = max(ratio_dyadic, block_sum / m_dyadic)
        m_dyadic *= 2
    ratio_dyadic /= lam2 ** 2
    return LayeredSumReport(ratio_zero, ratio_dyadic, m, math.sqrt(lam2), condition_ok)


# ---------------------------------------------------------------------------
# reports and export


def write_histogram_csv(histogram, path):
    rows = [(t, histogram[t]) for t in sorted(histogram)]
    write_csv(path, ["tau", "count"], rows)


def decomposition_report(dec):
    """JSON-ready per-layer summary: norms, amplitude vectors, |E_j|."""
    return {
        "richness_constant": dec.richness_constant,
        "terminated": dec.terminated,
        "layers": [
            {
                "norm": layer.norm,
                "norm_next": layer.norm_next,
                "ratio": layer.ratio,
                "lambdas": [float(x) for x in layer.lambdas],
                "block_sizes": [len(b) for b in layer.blocks0],
                "exceptional_sizes": [len(e) for e in layer.exceptional],
            }
            for layer in dec.layers
        ],
    }
