"""Sampling community layers and assembling the union graph G_[n,m].

Vertices are 0-based internally and 1-based in files and JSON records.
Layer ``i`` (1-based) always draws from substream ``(seed, i)``, so the
first m1 layers of an m2-layer graph are exactly the m1-layer graph with
the same seed.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

import numba as nb
import numpy as np

from .model_spec import JointDistribution
from .rng import below, seed_state, uniform, uniform_open

__all__ = [
    "GraphError",
    "ModelParams",
    "Layer",
    "UnionGraph",
    "LayerSampler",
    "sample_layer",
    "sample_layers",
    "build_union",
    "generate",
    "export_edge_list",
    "import_edge_list",
]


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    n: int
    m: int
    k: int = 1

    def __post_init__(self):
        if self.n < 1 or self.m < 0 or self.k < 1:
            raise GraphError(f"invalid model parameters {self}")


# --------------------------------------------------------------------------
# kernels


@nb.njit(cache=True)
def _pick_atom(state, cum):
    u = uniform(state)
    i = np.searchsorted(cum, u, side="right")
    if i >= cum.size:
        i = cum.size - 1
    return i


@nb.njit(cache=True)
def draw_layer(state, n, cum, xs, qs, perm, jbuf, vbuf, eu, ev):
    """Draw one layer into the buffers.

    Returns ``(x, q, n_vertices, n_edges)`` or ``n_edges = -1`` when ``eu``
    is too small.  ``perm`` must be the identity on entry and is restored.
    """
    i = _pick_atom(state, cum)
    x = xs[i]
    q = qs[i]
    nv = x if x < n else n
    # partial Fisher-Yates over [n]
    for a in range(nv):
        j = a + below(state, n - a)
        jbuf[a] = j
        t = perm[a]
        perm[a] = perm[j]
        perm[j] = t
        vbuf[a] = perm[a]
    for a in range(nv - 1, -1, -1):
        j = jbuf[a]
        t = perm[a]
        perm[a] = perm[j]
        perm[j] = t

    npairs = nv * (nv - 1) // 2
    ne = 0
    if npairs == 0 or q <= 0.0:
        return x, q, nv, 0
    cap = eu.size
    if q >= 1.0 or q * npairs >= math.sqrt(npairs):
        if q >= 1.0 and npairs > cap:
            return x, q, nv, -1
        for a in range(nv):
            for b in range(a + 1, nv):
                if q >= 1.0 or uniform(state) < q:
                    if ne >= cap:
                        return x, q, nv, -1
                    u = vbuf[a]
                    v = vbuf[b]
                    if u < v:
                        eu[ne] = u
                        ev[ne] = v
                    else:
                        eu[ne] = v
                        ev[ne] = u
                    ne += 1
        return x, q, nv, ne
    # sparse: geometric skips over the row-major pair index
    logq = math.log1p(-q)
    t = -1
    row = 0
    row_start = 0  # pair index of (row, row + 1)
    while True:
        skip = math.floor(math.log(uniform_open(state)) / logq)
        if skip >= npairs:
            break
        t += 1 + np.int64(skip)
        if t >= npairs:
            break
        while t >= row_start + (nv - 1 - row):
            row_start += nv - 1 - row
            row += 1
        col = row + 1 + (t - row_start)
        if ne >= cap:
            return x, q, nv, -1
        u = vbuf[row]
        v = vbuf[col]
        if u < v:
            eu[ne] = u
            ev[ne] = v
        else:
            eu[ne] = v
            ev[ne] = u
        ne += 1
    return x, q, nv, ne


@nb.njit(cache=True, nogil=True)
def _sample_layers(seed, first, count, n, cum, xs, qs, keep_vertices,
                   out_x, out_q, v_off, v_buf, e_off, e_u, e_v):
    state = np.zeros(4, dtype=np.uint64)
    perm = np.arange(n)
    maxv = n
    jbuf = np.empty(maxv, dtype=np.int64)
    vtmp = np.empty(maxv, dtype=np.int64)
    ne_tot = 0
    nv_tot = 0
    v_off[0] = 0
    e_off[0] = 0
    for li in range(count):
        seed_state(state, seed, np.uint64(first + li))
        x, q, nv, ne = draw_layer(state, n, cum, xs, qs, perm, jbuf, vtmp,
                                  e_u[ne_tot:], e_v[ne_tot:])
        if ne < 0:
            return 1, li
        out_x[li] = x
        out_q[li] = q
        if keep_vertices:
            if nv_tot + nv > v_buf.size:
                return 2, li
            for a in range(nv):
                v_buf[nv_tot + a] = vtmp[a]
            nv_tot += nv
        ne_tot += ne
        v_off[li + 1] = nv_tot
        e_off[li + 1] = ne_tot
    return 0, count


def _atom_table(dist: JointDistribution):
    cum = np.cumsum(dist.ps)
    cum[-1] = 1.0
    return cum, dist.xs.astype(np.int64), dist.qs.astype(np.float64)


@dataclass
class _LayerBatch:
    first: int
    x: np.ndarray
    q: np.ndarray
    v_off: np.ndarray
    vertices: np.ndarray
    e_off: np.ndarray
    eu: np.ndarray
    ev: np.ndarray


def sample_layers(seed: int, n: int, dist: JointDistribution, first: int, count: int,
                  keep_vertices: bool = False) -> _LayerBatch:
    """Layers ``first .. first+count-1`` of the stream family ``seed``."""
    if n < 1:
        raise GraphError("n must be >= 1")
    cum, xs, qs = _atom_table(dist)
    mean_pairs = float(np.dot(dist.ps, np.minimum(dist.xs, n) ** 2)) / 2.0
    e_cap = max(16, int(count * mean_pairs * float(np.max(dist.qs)) * 1.3) + 64)
    v_cap = max(16, int(count * float(np.dot(dist.ps, np.minimum(dist.xs, n))) * 1.3) + 64) if keep_vertices else 1
    seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    while True:
        out_x = np.empty(count, dtype=np.int64)
        out_q = np.empty(count, dtype=np.float64)
        v_off = np.empty(count + 1, dtype=np.int64)
        e_off = np.empty(count + 1, dtype=np.int64)
        v_buf = np.empty(v_cap, dtype=np.int64)
        e_u = np.empty(e_cap, dtype=np.int64)
        e_v = np.empty(e_cap, dtype=np.int64)
        status, _ = _sample_layers(seed, first, count, n, cum, xs, qs, keep_vertices,
                                   out_x, out_q, v_off, v_buf, e_off, e_u, e_v)
        if status == 0:
            ne = int(e_off[count])
            return _LayerBatch(first, out_x, out_q, v_off, v_buf[: v_off[count]],
                               e_off, e_u[:ne], e_v[:ne])
        if status == 1:
            e_cap *= 2
        else:
            v_cap *= 2


# --------------------------------------------------------------------------
# public types


@dataclass(frozen=True, eq=False)
class Layer:
    """One community: 1-based ``index``, its (x, q) draw, vertices and edges (0-based)."""

    index: int
    x: int
    q: float
    vertices: frozenset[int]
    edges: frozenset[tuple[int, int]]


class LayerSampler:
    """The random stream handed to :func:`sample_layer`: a master seed whose
    substream ``(seed, index)`` drives layer ``index``."""

    def __init__(self, seed: int):
        self.seed = int(seed)


def sample_layer(rng: LayerSampler | int, n: int, dist: JointDistribution, index: int) -> Layer:
    seed = rng.seed if isinstance(rng, LayerSampler) else int(rng)
    b = sample_layers(seed, n, dist, index, 1, keep_vertices=True)
    verts = frozenset(int(v) for v in b.vertices)
    edges = frozenset(zip(b.eu.tolist(), b.ev.tolist()))
    return Layer(index, int(b.x[0]), float(b.q[0]), verts, edges)


class UnionGraph:
    """Deduplicated union of layers plus sparse per-layer degree records.

    ``edges`` is an (E, 2) array of 0-based pairs with u < v in lexicographic
    order; ``indptr``/``indices`` the CSR adjacency with sorted rows.
    ``ld_indptr``/``ld_layer``/``ld_degree`` hold, for each vertex, the
    (1-based layer index, d_i(v)) pairs with d_i(v) >= 1.
    """

    def __init__(self, n: int, edges: np.ndarray, m: int = 0,
                 ld_indptr: np.ndarray | None = None,
                 ld_layer: np.ndarray | None = None,
                 ld_degree: np.ndarray | None = None):
        self.n = int(n)
        self.m = int(m)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.edges = edges
        self.edges.setflags(write=False)
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        self.indices = dst[order]
        self.indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=self.indptr[1:])
        self.ld_indptr = ld_indptr
        self.ld_layer = ld_layer
        self.ld_degree = ld_degree

    @classmethod
    def from_edges(cls, n: int, pairs: Iterable[tuple[int, int]], one_based: bool = False) -> "UnionGraph":
        """Simple undirected graph from arbitrary pairs (deduplicated, no layers)."""
        off = 1 if one_based else 0
        arr = np.array([(min(u, v) - off, max(u, v) - off) for u, v in pairs], dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise GraphError("vertex id out of range")
        if arr.size and np.any(arr[:, 0] == arr[:, 1]):
            raise GraphError("self-loop")
        arr = np.unique(arr, axis=0) if arr.size else arr
        return cls(n, arr)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]: self.indptr[v + 1]]

    def has_layer_degrees(self) -> bool:
        return self.ld_indptr is not None

    def layer_degrees(self, v: int) -> list[tuple[int, int]]:
        if self.ld_indptr is None:
            raise GraphError("graph carries no per-layer degree records")
        a, b = self.ld_indptr[v], self.ld_indptr[v + 1]
        return list(zip(self.ld_layer[a:b].tolist(), self.ld_degree[a:b].tolist()))

    def edge_set(self) -> set[tuple[int, int]]:
        return set(map(tuple, self.edges.tolist()))

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.m, "edges": (self.edges + 1).tolist()}

    def __repr__(self):
        return f"UnionGraph(n={self.n}, m={self.m}, edges={self.num_edges})"


def _union_from_arrays(n: int, m: int, eu: np.ndarray, ev: np.ndarray, layer_of_edge: np.ndarray,
                       max_index: int | None = None) -> UnionGraph:
    codes = np.unique(eu * n + ev)
    edges = np.stack([codes // n, codes % n], axis=1) if codes.size else np.empty((0, 2), dtype=np.int64)
    ends = np.concatenate([eu, ev])
    lay = np.concatenate([layer_of_edge, layer_of_edge])
    span = np.int64(max(m, max_index or 0) + 1)
    keys, counts = np.unique(ends * span + lay, return_counts=True)
    verts = keys // span
    ld_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(verts, minlength=n), out=ld_indptr[1:])
    return UnionGraph(n, edges, m, ld_indptr, keys % span, counts.astype(np.int64))


def build_union(n: int, layers: Sequence[Layer]) -> UnionGraph:
    eu, ev, li = [], [], []
    for layer in layers:
        for u, v in layer.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"layer {layer.index}: edge {(u, v)} outside [0, {n})")
            eu.append(min(u, v))
            ev.append(max(u, v))
            li.append(layer.index)
        if any(not 0 <= v < n for v in layer.vertices):
            raise GraphError(f"layer {layer.index}: vertex outside [0, {n})")
    return _union_from_arrays(n, len(layers), np.array(eu, dtype=np.int64), np.array(ev, dtype=np.int64),
                              np.array(li, dtype=np.int64),
                              max_index=max((layer.index for layer in layers), default=0))


def generate(params: ModelParams, dist: JointDistribution, seed: int) -> UnionGraph:
    """G_[n,m] as a deterministic function of (params, dist, seed)."""
    n, m = params.n, params.m
    if m == 0:
        return _union_from_arrays(n, 0, *(np.empty(0, dtype=np.int64),) * 3)
    b = sample_layers(seed, n, dist, 1, m)
    layer_of_edge = np.repeat(np.arange(1, m + 1, dtype=np.int64), np.diff(b.e_off))
    return _union_from_arrays(n, m, b.eu, b.ev, layer_of_edge)


# --------------------------------------------------------------------------
# edge-list files


def export_edge_list(graph: UnionGraph, destination: str | os.PathLike | IO[str]) -> None:
    lines = [f"# n={graph.n} m={graph.m}\n"]
    lines.extend(f"{u + 1} {v + 1}\n" for u, v in graph.edges.tolist())
    if hasattr(destination, "write"):
        destination.writelines(lines)
    else:
        Path(destination).write_text("".join(lines))


def import_edge_list(source: str | os.PathLike | IO[str]) -> UnionGraph:
    text = source.read() if hasattr(source, "read") else Path(source).read_text()
    n = m = None
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "n":
                    n = int(val)
                elif key == "m":
                    m = int(val)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected 'u v'")
        pairs.append((int(parts[0]), int(parts[1])))
    if n is None:
        raise GraphError("missing '# n=<n> m=<m>' header")
    g = UnionGraph.from_edges(n, pairs, one_based=True)
    g.m = m or 0
    return g
