"""Exact k-vertex / k-edge connectivity decisions and the small-component event.

Conventions: a graph is k-vertex-connected iff n >= k+1 and no removal of at
most k-1 vertices disconnects it (a remainder of <= 1 vertex counts as
connected).  It is k-edge-connected iff n >= 2, it is connected, and every
edge cut has at least k edges.

Vertex connectivity uses the min-degree-pivot schedule: with v the pivot,
check local connectivity v->w for every non-neighbour w and x->y for every
non-adjacent pair of neighbours of v.  Every minimum separator either misses
v or contains it, in which case v has neighbours on two sides, so the
schedule is exact.  Each local check is a unit-capacity augmenting-path
max-flow on the vertex-split digraph, stopped as soon as k paths exist.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Literal

import numba as nb
import numpy as np

from .graph_gen import UnionGraph

__all__ = [
    "RefusalError",
    "Decision",
    "ConnectivityReport",
    "BkWitness",
    "components",
    "is_connected",
    "is_k_vertex_connected",
    "is_k_edge_connected",
    "brute_force_k_connected",
    "detect_Bk",
    "connectivity_report",
    "local_vertex_connectivity",
    "local_edge_connectivity",
]

BRUTE_FORCE_LIMIT = 10**6
BK_LIMIT = 10**7


class RefusalError(RuntimeError):
    """Exhaustive enumeration would exceed its guard."""


# --------------------------------------------------------------------------
# kernels


@nb.njit(cache=True, nogil=True)
def _labels(indptr, indices, removed):
    n = indptr.size - 1
    lab = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    c = 0
    for s in range(n):
        if removed[s] or lab[s] >= 0:
            continue
        lab[s] = c
        top = 0
        stack[top] = s
        top += 1
        while top > 0:
            top -= 1
            u = stack[top]
            for j in range(indptr[u], indptr[u + 1]):
                w = indices[j]
                if not removed[w] and lab[w] < 0:
                    lab[w] = c
                    stack[top] = w
                    top += 1
        c += 1
    return lab, c


@nb.njit(cache=True)
def _reverse_arcs(indptr, indices):
    n = indptr.size - 1
    rev = np.empty(indices.size, dtype=np.int64)
    for u in range(n):
        for j in range(indptr[u], indptr[u + 1]):
            v = indices[j]
            # rows are sorted
            lo = indptr[v]
            hi = indptr[v + 1]
            while lo < hi:
                mid = (lo + hi) // 2
                if indices[mid] < u:
                    lo = mid + 1
                else:
                    hi = mid
            rev[j] = lo
    return rev


@nb.njit(cache=True)
def _adjacent(indptr, indices, u, v):
    lo = indptr[u]
    hi = indptr[u + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[u + 1] and indices[lo] == v


# parent kinds for the split-graph BFS
_INT_FWD = 1
_INT_REV = 2
_EDGE_FWD = 3
_EDGE_REV = 4


@nb.njit(cache=True, nogil=True)
def _vertex_flow(indptr, indices, rev, s, t, limit, through, flow, vis, pkind, parc,
                 queue, touched_v, touched_a, stamp):
    """Number of internally vertex-disjoint s-t paths, capped at ``limit``.

    Node 2v is v_in and 2v+1 is v_out.  ``flow[j]`` is the flow on arc
    u_out -> v_in for CSR arc j = (u, v); ``through[v]`` the flow on
    v_in -> v_out.  On return ``vis == stamp[0]`` marks the residual
    reachable set of the last (failed) search when the result is < limit.
    Flow state is reset to zero before returning so the arrays can be reused.
    """
    nt_v = 0
    nt_a = 0
    f = 0
    while f < limit:
        stamp[0] += 1
        st = stamp[0]
        head = 0
        tail = 0
        src = 2 * s + 1
        vis[2 * s] = st
        vis[src] = st
        queue[tail] = src
        tail += 1
        target = 2 * t
        found = False
        while head < tail and not found:
            node = queue[head]
            head += 1
            v = node >> 1
            if node & 1:
                # v_out: forward edge arcs, reverse internal arc
                for j in range(indptr[v], indptr[v + 1]):
                    w = indices[j]
                    nxt = 2 * w
                    if vis[nxt] != st:
                        vis[nxt] = st
                        pkind[nxt] = _EDGE_FWD
                        parc[nxt] = j
                        if nxt == target:
                            found = True
                            break
                        queue[tail] = nxt
                        tail += 1
                if not found and v != s and v != t and through[v] > 0:
                    nxt = 2 * v
                    if vis[nxt] != st:
                        vis[nxt] = st
                        pkind[nxt] = _INT_REV
                        parc[nxt] = v
                        queue[tail] = nxt
                        tail += 1
            else:
                # v_in: internal arc, reverse of used incoming edge arcs
                nxt = 2 * v + 1
                if vis[nxt] != st and (v == s or v == t or through[v] == 0):
                    vis[nxt] = st
                    pkind[nxt] = _INT_FWD
                    parc[nxt] = v
                    queue[tail] = nxt
                    tail += 1
                for j in range(indptr[v], indptr[v + 1]):
                    a = rev[j]  # arc (w, v)
                    if flow[a] > 0:
                        w = indices[j]
                        nxt = 2 * w + 1
                        if vis[nxt] != st:
                            vis[nxt] = st
                            pkind[nxt] = _EDGE_REV
                            parc[nxt] = a
                            queue[tail] = nxt
                            tail += 1
        if not found:
            break
        node = target
        while node != src:
            kind = pkind[node]
            if kind == _INT_FWD:
                v = parc[node]
                through[v] += 1
                touched_v[nt_v] = v
                nt_v += 1
                node = 2 * v
            elif kind == _INT_REV:
                v = parc[node]
                through[v] -= 1
                node = 2 * v + 1
            elif kind == _EDGE_FWD:
                j = parc[node]
                r = rev[j]
                if flow[r] > 0:
                    flow[r] -= 1
                else:
                    flow[j] += 1
                    touched_a[nt_a] = j
                    nt_a += 1
                # tail of arc j is the row owning j; recover it from rev
                node = 2 * indices[r] + 1
            else:
                a = parc[node]
                flow[a] -= 1
                node = 2 * indices[a]
        f += 1
    for i in range(nt_v):
        through[touched_v[i]] = 0
    for i in range(nt_a):
        flow[touched_a[i]] = 0
    return f


@nb.njit(cache=True, nogil=True)
def _edge_flow(indptr, indices, rev, s, t, limit, flow, vis, parc, queue, touched, stamp):
    """Number of edge-disjoint s-t paths, capped at ``limit``.

    ``flow`` is antisymmetric per arc pair; reset to zero before returning.
    """
    nt = 0
    f = 0
    while f < limit:
        stamp[0] += 1
        st = stamp[0]
        head = 0
        tail = 0
        vis[s] = st
        queue[tail] = s
        tail += 1
        found = False
        while head < tail and not found:
            u = queue[head]
            head += 1
            for j in range(indptr[u], indptr[u + 1]):
                if flow[j] < 1:
                    w = indices[j]
                    if vis[w] != st:
                        vis[w] = st
                        parc[w] = j
                        if w == t:
                            found = True
                            break
                        queue[tail] = w
                        tail += 1
        if not found:
            break
        w = t
        while w != s:
            j = parc[w]
            flow[j] += 1
            flow[rev[j]] -= 1
            touched[nt] = j
            nt += 1
            w = indices[rev[j]]
        f += 1
    for i in range(nt):
        j = touched[i]
        flow[j] = 0
        flow[rev[j]] = 0
    return f


@nb.njit(cache=True, nogil=True)
def _vertex_schedule(indptr, indices, rev, k, pivot):
    """First pair (s, t) in the pivot schedule with local connectivity < k, else (-1, -1)."""
    n = indptr.size - 1
    through = np.zeros(n, dtype=np.int64)
    flow = np.zeros(indices.size, dtype=np.int64)
    vis = np.zeros(2 * n, dtype=np.int64)
    pkind = np.zeros(2 * n, dtype=np.int64)
    parc = np.zeros(2 * n, dtype=np.int64)
    queue = np.empty(2 * n, dtype=np.int64)
    touched_v = np.empty(k * n + 1, dtype=np.int64)
    touched_a = np.empty(k * (n + 1) + 1, dtype=np.int64)
    stamp = np.zeros(1, dtype=np.int64)
    nbr = np.zeros(n, dtype=np.bool_)
    for j in range(indptr[pivot], indptr[pivot + 1]):
        nbr[indices[j]] = True
    for w in range(n):
        if w == pivot or nbr[w]:
            continue
        if _vertex_flow(indptr, indices, rev, pivot, w, k, through, flow, vis, pkind, parc,
                        queue, touched_v, touched_a, stamp) < k:
            return pivot, w
    a0 = indptr[pivot]
    a1 = indptr[pivot + 1]
    for i in range(a0, a1):
        x = indices[i]
        for j in range(i + 1, a1):
            y = indices[j]
            if _adjacent(indptr, indices, x, y):
                continue
            if _vertex_flow(indptr, indices, rev, x, y, k, through, flow, vis, pkind, parc,
                            queue, touched_v, touched_a, stamp) < k:
                return x, y
    return -1, -1


@nb.njit(cache=True, nogil=True)
def _edge_schedule(indptr, indices, rev, k, root):
    n = indptr.size - 1
    flow = np.zeros(indices.size, dtype=np.int64)
    vis = np.zeros(n, dtype=np.int64)
    parc = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    touched = np.empty(k * (n + 1) + 1, dtype=np.int64)
    stamp = np.zeros(1, dtype=np.int64)
    for w in range(n):
        if w == root:
            continue
        if _edge_flow(indptr, indices, rev, root, w, k, flow, vis, parc, queue, touched, stamp) < k:
            return w
    return -1


@nb.njit(cache=True)
def _vertex_cut(indptr, indices, rev, s, t, k):
    n = indptr.size - 1
    through = np.zeros(n, dtype=np.int64)
    flow = np.zeros(indices.size, dtype=np.int64)
    vis = np.zeros(2 * n, dtype=np.int64)
    pkind = np.zeros(2 * n, dtype=np.int64)
    parc = np.zeros(2 * n, dtype=np.int64)
    queue = np.empty(2 * n, dtype=np.int64)
    touched_v = np.empty(k * n + 1, dtype=np.int64)
    touched_a = np.empty(k * (n + 1) + 1, dtype=np.int64)
    stamp = np.zeros(1, dtype=np.int64)
    f = _vertex_flow(indptr, indices, rev, s, t, k, through, flow, vis, pkind, parc,
                     queue, touched_v, touched_a, stamp)
    st = stamp[0]
    cut = np.zeros(n, dtype=np.bool_)
    for v in range(n):
        if v != s and v != t and vis[2 * v] == st and vis[2 * v + 1] != st:
            cut[v] = True
    return f, cut


@nb.njit(cache=True)
def _edge_side(indptr, indices, rev, s, t, k):
    n = indptr.size - 1
    flow = np.zeros(indices.size, dtype=np.int64)
    vis = np.zeros(n, dtype=np.int64)
    parc = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    touched = np.empty(k * (n + 1) + 1, dtype=np.int64)
    stamp = np.zeros(1, dtype=np.int64)
    f = _edge_flow(indptr, indices, rev, s, t, k, flow, vis, parc, queue, touched, stamp)
    return f, vis == stamp[0]


# --------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class Decision:
    """Outcome of a connectivity decision; truthy iff the property holds."""

    connected: bool
    witness: frozenset | None = None

    def __bool__(self):
        return self.connected


@dataclass(frozen=True)
class ConnectivityReport:
    k: int
    n: int
    min_degree: int
    vertex_connected_k: bool
    edge_connected_k: bool
    vertex_cut_witness: frozenset[int] | None
    edge_cut_witness: frozenset[tuple[int, int]] | None

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "min_degree": self.min_degree,
            "vertex_connected_k": self.vertex_connected_k,
            "edge_connected_k": self.edge_connected_k,
            "vertex_cut_witness": None if self.vertex_cut_witness is None
            else sorted(v + 1 for v in self.vertex_cut_witness),
            "edge_cut_witness": None if self.edge_cut_witness is None
            else sorted([u + 1, v + 1] for u, v in self.edge_cut_witness),
        }


@dataclass(frozen=True)
class BkWitness:
    removed: frozenset[int]
    component: frozenset[int]

    @property
    def r(self) -> int:
        return len(self.component)


# --------------------------------------------------------------------------


def _csr(graph: UnionGraph):
    rev = getattr(graph, "_rev_arcs", None)
    if rev is None:
        rev = _reverse_arcs(graph.indptr, graph.indices)
        graph._rev_arcs = rev
    return graph.indptr, graph.indices, rev


def _mask(n: int, removed: Iterable[int]) -> np.ndarray:
    mask = np.zeros(n, dtype=np.bool_)
    for v in removed:
        if not 0 <= v < n:
            raise ValueError(f"vertex {v} outside [0, {n})")
        mask[v] = True
    return mask


def components(graph: UnionGraph, removed: Iterable[int] = ()) -> list[list[int]]:
    """Connected components of ``graph`` minus ``removed``, each sorted, ordered by least vertex."""
    lab, c = _labels(graph.indptr, graph.indices, _mask(graph.n, removed))
    blocks: list[list[int]] = [[] for _ in range(c)]
    for v, b in enumerate(lab.tolist()):
        if b >= 0:
            blocks[b].append(v)
    return blocks


def is_connected(graph: UnionGraph, removed: Iterable[int] = ()) -> bool:
    """True when the remainder has at most one component (empty counts as connected)."""
    _, c = _labels(graph.indptr, graph.indices, _mask(graph.n, removed))
    return c <= 1


def local_vertex_connectivity(graph: UnionGraph, s: int, t: int, cap: int | None = None) -> int:
    """Max number of internally disjoint s-t paths (s, t non-adjacent), capped at ``cap``."""
    indptr, indices, rev = _csr(graph)
    cap = graph.n if cap is None else cap
    f, _ = _vertex_cut(indptr, indices, rev, s, t, cap)
    return int(f)


def local_edge_connectivity(graph: UnionGraph, s: int, t: int, cap: int | None = None) -> int:
    indptr, indices, rev = _csr(graph)
    cap = max(1, graph.num_edges) if cap is None else cap
    f, _ = _edge_side(indptr, indices, rev, s, t, cap)
    return int(f)


def is_k_vertex_connected(graph: UnionGraph, k: int) -> Decision:
    if k < 1:
        raise ValueError("k must be >= 1")
    n = graph.n
    if n < k + 1:
        return Decision(False)
    lab, c = _labels(graph.indptr, graph.indices, np.zeros(n, dtype=np.bool_))
    if c > 1:
        return Decision(False, frozenset())
    deg = graph.degrees
    pivot = int(np.argmin(deg))
    if deg[pivot] < k:
        return Decision(False, frozenset(graph.neighbors(pivot).tolist()))
    if k == 1:
        return Decision(True)
    indptr, indices, rev = _csr(graph)
    s, t = _vertex_schedule(indptr, indices, rev, k, pivot)
    if s < 0:
        return Decision(True)
    f, cut = _vertex_cut(indptr, indices, rev, s, t, k)
    return Decision(False, frozenset(np.flatnonzero(cut).tolist()))


def is_k_edge_connected(graph: UnionGraph, k: int) -> Decision:
    if k < 1:
        raise ValueError("k must be >= 1")
    n = graph.n
    if n < 2:
        return Decision(False)
    _, c = _labels(graph.indptr, graph.indices, np.zeros(n, dtype=np.bool_))
    if c > 1:
        return Decision(False, frozenset())
    deg = graph.degrees
    pivot = int(np.argmin(deg))
    if deg[pivot] < k:
        nb_ = graph.neighbors(pivot).tolist()
        return Decision(False, frozenset((min(pivot, w), max(pivot, w)) for w in nb_))
    if k == 1:
        return Decision(True)
    indptr, indices, rev = _csr(graph)
    t = _edge_schedule(indptr, indices, rev, k, pivot)
    if t < 0:
        return Decision(True)
    _, side = _edge_side(indptr, indices, rev, pivot, t, k)
    e = graph.edges
    crossing = side[e[:, 0]] != side[e[:, 1]]
    return Decision(False, frozenset(map(tuple, e[crossing].tolist())))


def connectivity_report(graph: UnionGraph, k: int) -> ConnectivityReport:
    vd = is_k_vertex_connected(graph, k)
    ed = is_k_edge_connected(graph, k)
    return ConnectivityReport(
        k=k,
        n=graph.n,
        min_degree=int(graph.degrees.min()) if graph.n else 0,
        vertex_connected_k=vd.connected,
        edge_connected_k=ed.connected,
        vertex_cut_witness=vd.witness,
        edge_cut_witness=ed.witness,
    )


# --------------------------------------------------------------------------
# exhaustive oracles


def brute_force_k_connected(graph: UnionGraph, k: int, mode: Literal["vertex", "edge"] = "vertex") -> bool:
    """Remove every subset of size exactly k-1 and test connectivity of the rest."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = graph.n
    if mode == "vertex":
        if n < k + 1:
            return False
        if math.comb(n, k - 1) > BRUTE_FORCE_LIMIT:
            raise RefusalError(f"C({n},{k - 1}) subsets exceed the enumeration guard")
        return all(is_connected(graph, S) for S in itertools.combinations(range(n), k - 1))
    if mode == "edge":
        if n < 2:
            return False
        edges = [tuple(e) for e in graph.edges.tolist()]
        if len(edges) < k - 1:
            return False
        if math.comb(len(edges), k - 1) > BRUTE_FORCE_LIMIT:
            raise RefusalError(f"C({len(edges)},{k - 1}) subsets exceed the enumeration guard")
        for drop in itertools.combinations(range(len(edges)), k - 1):
            dropped = set(drop)
            rest = UnionGraph(n, np.array([e for i, e in enumerate(edges) if i not in dropped],
                                          dtype=np.int64).reshape(-1, 2))
            if not is_connected(rest):
                return False
        return True
    raise ValueError(f"mode must be 'vertex' or 'edge', not {mode!r}")


def detect_Bk(graph: UnionGraph, k: int) -> BkWitness | None:
    """First (S, component) with 1 <= |S| <= k-1 and 2 <= r <= (n-|S|)/2, or None."""
    n = graph.n
    if k < 2:
        return None
    if math.comb(n, k - 1) * (k - 1) > BK_LIMIT:
        raise RefusalError("B_k enumeration exceeds guard")
    for size in range(1, min(k - 1, n) + 1):
        for S in itertools.combinations(range(n), size):
            for block in components(graph, S):
                r = len(block)
                if r >= 2 and 2 * r <= n - size:
                    return BkWitness(frozenset(S), frozenset(block))
    return None
