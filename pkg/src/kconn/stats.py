"""Empirical counterparts of the degree and single-layer probabilities.

Monte Carlo estimators give trial ``t`` its own substream ``(seed, t)``, so a
fixed seed reproduces the estimate exactly however trials are batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .graph_gen import UnionGraph, draw_layer, GraphError
from .model_spec import JointDistribution
from .rng import seed_state

__all__ = [
    "DegreeProfile",
    "PropertyDCount",
    "MCEstimate",
    "degree_counts",
    "property_D_count",
    "estimate_qrs",
    "estimate_layer_degree_pmf",
]

MAX_LAYER_PAIRS = 50_000_000


@dataclass(frozen=True)
class DegreeProfile:
    counts: dict[int, int]
    min_degree: int

    def n_at_most(self, t: int) -> int:
        return sum(c for d, c in self.counts.items() if d <= t)


@dataclass(frozen=True)
class PropertyDCount:
    count: int
    flagged: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    trials: int

    @classmethod
    def from_counts(cls, successes: int, trials: int) -> "MCEstimate":
        if trials < 1:
            raise ValueError("trials must be >= 1")
        p = successes / trials
        return cls(p, math.sqrt(p * (1.0 - p) / trials), trials)


def degree_counts(graph: UnionGraph) -> DegreeProfile:
    deg = graph.degrees
    if deg.size == 0:
        return DegreeProfile({}, 0)
    bc = np.bincount(deg)
    return DegreeProfile({int(t): int(c) for t, c in enumerate(bc) if c}, int(deg.min()))


def property_D_count(graph: UnionGraph, k: int) -> PropertyDCount:
    """Vertices whose layer degrees are all 0 or 1 and sum to k-1."""
    if not graph.has_layer_degrees():
        raise GraphError("property D needs per-layer degree records")
    if k < 1:
        raise ValueError("k must be >= 1")
    n = graph.n
    owner = np.repeat(np.arange(n), np.diff(graph.ld_indptr))
    total = np.bincount(owner, weights=graph.ld_degree, minlength=n)
    bad = np.zeros(n, dtype=bool)
    bad[owner[graph.ld_degree > 1]] = True
    flagged = np.flatnonzero((total == k - 1) & ~bad)
    return PropertyDCount(int(flagged.size), flagged)


# --------------------------------------------------------------------------


def _buffers(n: int, dist: JointDistribution):
    nv = int(min(dist.max_x, n))
    pairs = nv * (nv - 1) // 2
    if pairs > MAX_LAYER_PAIRS:
        raise ValueError(f"layer of {nv} vertices is too large for the estimator buffers")
    cum = np.cumsum(dist.ps)
    cum[-1] = 1.0
    return cum, dist.xs.astype(np.int64), dist.qs.astype(np.float64), max(pairs, 1)


@nb.njit(cache=True, nogil=True)
def _qrs_kernel(seed, first, trials, n, s, r, cum, xs, qs, cap):
    state = np.zeros(4, dtype=np.uint64)
    perm = np.arange(n)
    jbuf = np.empty(n, dtype=np.int64)
    vbuf = np.empty(n, dtype=np.int64)
    eu = np.empty(cap, dtype=np.int64)
    ev = np.empty(cap, dtype=np.int64)
    lo = s
    mid = s + r
    hits = 0
    for t in range(first, first + trials):
        seed_state(state, seed, np.uint64(t))
        x, q, nv, ne = draw_layer(state, n, cum, xs, qs, perm, jbuf, vbuf, eu, ev)
        ok = True
        for e in range(ne):
            a = eu[e]
            b = ev[e]
            in_a = lo <= a < mid
            in_b = lo <= b < mid
            if (in_a and b >= mid) or (in_b and a >= mid):
                ok = False
                break
        if ok:
            hits += 1
    return hits


@nb.njit(cache=True, nogil=True)
def _degree_kernel(seed, first, trials, n, vertex, cum, xs, qs, cap, t_max):
    state = np.zeros(4, dtype=np.uint64)
    perm = np.arange(n)
    jbuf = np.empty(n, dtype=np.int64)
    vbuf = np.empty(n, dtype=np.int64)
    eu = np.empty(cap, dtype=np.int64)
    ev = np.empty(cap, dtype=np.int64)
    counts = np.zeros(t_max + 2, dtype=np.int64)
    for t in range(first, first + trials):
        seed_state(state, seed, np.uint64(t))
        x, q, nv, ne = draw_layer(state, n, cum, xs, qs, perm, jbuf, vbuf, eu, ev)
        d = 0
        for e in range(ne):
            if eu[e] == vertex or ev[e] == vertex:
                d += 1
        if d > t_max:
            d = t_max + 1
        counts[d] += 1
    return counts


def _as_dist(xq) -> JointDistribution:
    if isinstance(xq, JointDistribution):
        return xq
    x, q = xq
    return JointDistribution.point_mass(int(x), float(q))


def estimate_qrs(xq, n: int, s: int, r: int, trials: int, seed: int) -> MCEstimate:
    """Fraction of single layers with no edge between (s, s+r] and (s+r, n].

    ``xq`` is a fixed ``(x, q)`` pair, or a distribution, in which case the
    layer size is min(X, n) and the result estimates the averaged quantity.
    """
    if s < 0 or r < 1 or 2 * r > n - s:
        raise ValueError(f"need s >= 0 and 1 <= r <= (n-s)/2; got n={n}, s={s}, r={r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dist = _as_dist(xq)
    cum, xs, qs, cap = _buffers(n, dist)
    hits = _qrs_kernel(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), 0, trials, n, s, r, cum, xs, qs, cap)
    return MCEstimate.from_counts(int(hits), trials)


def estimate_layer_degree_pmf(dist: JointDistribution, n: int, t_max: int, trials: int, seed: int,
                              vertex: int = 0) -> dict[int, MCEstimate]:
    """Empirical pmf of one vertex's degree in a single layer; key ``t_max + 1`` collects the rest."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cum, xs, qs, cap = _buffers(n, dist)
    counts = _degree_kernel(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), 0, trials, n, vertex,
                            cum, xs, qs, cap, t_max)
    return {t: MCEstimate.from_counts(int(c), trials) for t, c in enumerate(counts)}
