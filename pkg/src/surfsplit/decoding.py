"""Minimum-weight decoding by reduction to weighted matching.

Problem 1 (no boundary vertices): the minimum-weight chain with boundary S
is the XOR of shortest paths along a minimum-weight perfect matching of the
metric closure on S.

Problem 2 (boundary set T): pairs (u, v) are worth
``eta(u, v) = D(u, T) + D(v, T) - D(u, v)``; a maximum-weight matching on
eta decides which syndrome vertices pair up, and the rest are joined to
their nearest boundary vertex.

Distances are real; the matching solver works on int64 weights obtained by
scaling to a fixed number of bits, which resolves ties far below the 1e-9
relative tolerance used everywhere else.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ._blossom import max_weight_matching
from ._paths import dijkstra, nearest_in_mask, terminal_distances, trace_path
from .graph import DecodingGraph

REL_TOL = 1e-9
_MIN_BITS = 36
_MAX_BITS = 40


class InfeasibleSyndrome(ValueError):
    """No chain has the requested reduced boundary."""


# ---------------------------------------------------------------------------
# shortest paths
# ---------------------------------------------------------------------------

class PathCache:
    """Single-source shortest-path rows for the current terminal set.

    Rows for vertices that leave the terminal set are parked in a small LRU
    pool and reused when the vertex returns, which is the common case for a
    Metropolis walk that flips the same edge back and forth.
    """

    def __init__(self, graph: DecodingGraph, sources: Iterable[int] = (),
                 pool_size: int | None = None):
        self.graph = graph
        self._w = np.ascontiguousarray(graph.weights)
        if np.any(self._w < 0):
            raise ValueError("shortest paths need nonnegative weights")
        self._gamma = graph.logical.astype(np.uint8)
        self._t_ids = graph.boundary_vertices.astype(np.int64)
        n = graph.n_vertices
        if pool_size is None:
            pool_size = int(max(16, min(512, 2e7 // (17 * max(n, 1)))))
        self.pool_size = pool_size
        self.rows: dict[int, tuple] = {}
        self._pool: OrderedDict[int, tuple] = OrderedDict()
        self.n_searches = 0
        self.update((), sources)

    @property
    def terminals(self) -> frozenset[int]:
        return frozenset(self.rows)

    def _compute(self, u: int) -> tuple:
        n = self.graph.n_vertices
        dist = np.empty(n)
        pred = np.empty(n, dtype=np.int64)
        par = np.empty(n, dtype=np.uint8)
        indptr, nbr, eid = self.graph.csr
        dijkstra(indptr, nbr, eid, self._w, self._gamma, u, dist, pred, par)
        self.n_searches += 1
        if len(self._t_ids):
            t, dt = nearest_in_mask(dist, self._t_ids, REL_TOL)
        else:
            t, dt = -1, np.inf
        return dist, pred, par, int(t), float(dt)

    def update(self, removed: Iterable[int] = (), added: Iterable[int] = ()) -> "PathCache":
        for u in removed:
            row = self.rows.pop(int(u), None)
            if row is not None:
                self._pool[int(u)] = row
                if len(self._pool) > self.pool_size:
                    self._pool.popitem(last=False)
        for u in added:
            u = int(u)
            if u in self.rows:
                continue
            row = self._pool.pop(u, None)
            self.rows[u] = row if row is not None else self._compute(u)
        return self

    def ensure(self, vertices: Iterable[int]) -> None:
        missing = [int(u) for u in vertices if int(u) not in self.rows]
        if missing:
            self.update((), missing)

    def row(self, u: int) -> tuple:
        u = int(u)
        if u not in self.rows:
            self.update((), (u,))
        return self.rows[u]

    def distance(self, u: int, v: int) -> float:
        a, b = (u, v) if u <= v else (v, u)
        return float(self.row(a)[0][b])

    def boundary_distance(self, u: int) -> tuple[float, int]:
        """(D(u, T), nearest T vertex) for the graph's own boundary set."""
        row = self.row(u)
        return row[4], row[3]


def weighted_distances(graph: DecodingGraph, sources: Iterable[int]) -> PathCache:
    return PathCache(graph, sources)


def cache_update(cache: PathCache, removed: Iterable[int] = (),
                 added: Iterable[int] = ()) -> PathCache:
    return cache.update(removed, added)


# ---------------------------------------------------------------------------
# matching
# ---------------------------------------------------------------------------

@dataclass
class MatchingInstance:
    """Complete graph on ``vertices`` with values ``values[i, j]``.

    mode ``"min-perfect"``: minimize total distance over perfect matchings
    (infinite values mark missing edges).  mode ``"max"``: maximize total
    value over all matchings, using only pairs with positive value.
    """

    vertices: np.ndarray
    values: np.ndarray
    mode: str = "min-perfect"

    def dumps(self) -> str:
        k = len(self.vertices)
        lines = [f"matching {self.mode} {k}",
                 " ".join(str(int(v)) for v in self.vertices)]
        for i in range(k):
            for j in range(i + 1, k):
                lines.append(f"{i} {j} {self.values[i, j]:.17g}")
        return "\n".join(lines) + "\n"


def exact_matching(instance: MatchingInstance) -> list[tuple[int, int]]:
    """Optimal matching as a sorted list of index pairs (i < j)."""
    vals = np.asarray(instance.values, dtype=float)
    k = len(instance.vertices)
    if instance.mode == "min-perfect":
        if k % 2:
            raise InfeasibleSyndrome("perfect matching needs an even number of vertices")
        if k == 0:
            return []
        finite = np.isfinite(vals)
        np.fill_diagonal(finite, False)
        scale = vals[finite].max() if finite.any() else 1.0
        scale = scale if scale > 0 else 1.0
        q = np.zeros((k, k), dtype=np.int64)
        q[finite] = np.rint(vals[finite] / scale * 2.0 ** _MIN_BITS).astype(np.int64)
        big = np.int64((k // 2 + 1) * 2 ** _MIN_BITS + 1)
        w = np.where(finite, big - q, 0).astype(np.int64)
        mate = max_weight_matching(w)
        if np.any(mate < 0):
            raise InfeasibleSyndrome("syndrome vertices cannot be paired")
    elif instance.mode == "max":
        if k < 2:
            return []
        if k == 2:
            return [(0, 1)] if vals[0, 1] > 0 else []
        pos = vals > 0
        np.fill_diagonal(pos, False)
        if not pos.any():
            return []
        scale = vals[pos].max()
        w = np.zeros((k, k), dtype=np.int64)
        w[pos] = np.rint(vals[pos] / scale * 2.0 ** _MAX_BITS).astype(np.int64)
        mate = max_weight_matching(w)
    else:
        raise ValueError(f"unknown matching mode {instance.mode!r}")
    return [(i, int(mate[i])) for i in range(k) if mate[i] > i]


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------

@dataclass
class Recovery:
    """Structure of a minimum-weight recovery: vertex pairs plus boundary links."""

    pairs: list[tuple[int, int]] = field(default_factory=list)
    singles: list[tuple[int, int]] = field(default_factory=list)
    weight: float = 0.0
    parity: int = 0


def _as_syndrome(S) -> np.ndarray:
    S = np.asarray(S if isinstance(S, np.ndarray) else list(S), dtype=np.int64)
    if len(S) > 1 and not np.all(S[1:] > S[:-1]):
        S = np.unique(S)
    return S


def _terminal_matrices(graph, S, cache, tmask, t_ids):
    """(D, P, dT, tv, tpar) for sorted syndrome S; see terminal_distances."""
    k = len(S)
    if cache is None:
        indptr, nbr, eid = graph.csr
        return terminal_distances(indptr, nbr, eid, np.ascontiguousarray(graph.weights),
                                  graph.logical.astype(np.uint8), S, tmask, REL_TOL)
    cache.ensure(S)
    rows = [cache.rows[int(u)] for u in S]
    D = np.empty((k, k))
    P = np.empty((k, k), dtype=np.uint8)
    for i, r in enumerate(rows):
        D[i] = r[0][S]
        P[i] = r[2][S]
    # the tree of the smaller id is authoritative for both entries
    lower = np.tril_indices(k, -1)
    D[lower] = D.T[lower]
    P[lower] = P.T[lower]
    np.fill_diagonal(D, 0.0)
    dT = np.empty(k)
    tv = np.empty(k, dtype=np.int64)
    tpar = np.zeros(k, dtype=np.uint8)
    for i, r in enumerate(rows):
        if t_ids is None:
            tv[i], dT[i] = r[3], r[4]
        else:
            tv[i], dT[i] = nearest_in_mask(r[0], t_ids, REL_TOL)
        if tv[i] >= 0:
            tpar[i] = r[2][tv[i]]
    return D, P, dT, tv, tpar


def match_syndrome(graph: DecodingGraph, syndrome, cache: PathCache | None = None,
                   boundary: np.ndarray | None = None) -> Recovery:
    """Solve Problem 1 or 2 for ``syndrome`` and return its pairing structure.

    ``boundary`` overrides the graph's T set (a boolean vertex mask); the
    override may contain vertices of any degree.  Without a cache the
    distances come from early-terminating searches that are not retained.
    """
    S = _as_syndrome(syndrome)
    if cache is not None and cache.graph is not graph:
        raise ValueError("cache belongs to a different graph")
    if boundary is None:
        tmask = graph.boundary
        t_ids = None
    else:
        tmask = np.asarray(boundary, dtype=bool)
        t_ids = np.flatnonzero(tmask).astype(np.int64)
        if cache is not None and np.array_equal(tmask, graph.boundary):
            t_ids = None
    if len(S) and np.any(tmask[S]):
        raise ValueError("syndrome must not contain boundary vertices")
    k = len(S)
    rec = Recovery()
    if k == 0:
        return rec
    has_t = bool(tmask.any())
    if not has_t and k % 2:
        raise InfeasibleSyndrome("odd syndrome without boundary vertices")
    D, P, dT, tv, tpar = _terminal_matrices(graph, S, cache, tmask, t_ids)
    if not has_t:
        if k == 2:
            if not np.isfinite(D[0, 1]):
                raise InfeasibleSyndrome("syndrome vertices are disconnected")
            pairs = [(0, 1)]
        else:
            pairs = exact_matching(MatchingInstance(S, D, "min-perfect"))
        for i, j in pairs:
            rec.pairs.append((int(S[i]), int(S[j])))
            rec.weight += D[i, j]
            rec.parity ^= int(P[i, j])
        return rec

    reach = np.isfinite(dT)
    surrogate = dT.copy()
    if not reach.all():
        fin = D[np.isfinite(D)]
        surrogate[~reach] = 2.0 * (fin.sum() + dT[reach].sum()) + 1.0
    eta = surrogate[:, None] + surrogate[None, :] - D
    np.fill_diagonal(eta, -np.inf)
    tol = REL_TOL * max(1.0, float(np.max(surrogate)))
    eta[~(eta > tol)] = 0.0
    pairs = exact_matching(MatchingInstance(S, eta, "max"))
    matched = np.zeros(k, dtype=bool)
    for i, j in pairs:
        matched[i] = matched[j] = True
        rec.pairs.append((int(S[i]), int(S[j])))
        rec.weight += D[i, j]
        rec.parity ^= int(P[i, j])
    for i in np.flatnonzero(~matched):
        if not reach[i]:
            raise InfeasibleSyndrome(f"vertex {int(S[i])} cannot reach the boundary or a partner")
        rec.singles.append((int(S[i]), int(tv[i])))
        rec.weight += dT[i]
        rec.parity ^= int(tpar[i])
    return rec


def recovery_chain(graph: DecodingGraph, rec: Recovery, cache: PathCache) -> np.ndarray:
    chain = graph.empty_chain()
    # pair paths come from the tree of the smaller id, matching the parity
    # bookkeeping in match_syndrome; boundary links from the syndrome vertex
    for u, v in rec.pairs:
        a, b = min(u, v), max(u, v)
        trace_path(graph.edges, cache.row(a)[1], a, b, chain)
    for u, t in rec.singles:
        trace_path(graph.edges, cache.row(u)[1], u, t, chain)
    return chain


def solve_problem1(graph: DecodingGraph, S, cache: PathCache | None = None) -> np.ndarray:
    """Minimum-weight chain R with boundary exactly S (T ignored)."""
    cache = cache if cache is not None else PathCache(graph)
    rec = match_syndrome(graph, S, cache, boundary=np.zeros(graph.n_vertices, dtype=bool))
    return recovery_chain(graph, rec, cache)


def solve_problem2(graph: DecodingGraph, S, T=None, cache: PathCache | None = None) -> np.ndarray:
    """Minimum-weight chain R with (boundary of R) minus T equal to S."""
    cache = cache if cache is not None else PathCache(graph)
    if T is not None:
        mask = np.zeros(graph.n_vertices, dtype=bool)
        mask[np.asarray(list(T), dtype=np.int64)] = True
        T = mask
    rec = match_syndrome(graph, S, cache, boundary=T)
    return recovery_chain(graph, rec, cache)


def decode(graph: DecodingGraph, syndrome, cache: PathCache | None = None) -> np.ndarray:
    """Recovery chain for the syndrome; Problem 1 if T is empty, else Problem 2."""
    cache = cache if cache is not None else PathCache(graph)
    rec = match_syndrome(graph, syndrome, cache)
    return recovery_chain(graph, rec, cache)


def recovery_parity(graph: DecodingGraph, syndrome, cache: PathCache | None = None) -> int:
    """Logical parity of the decoder's recovery, without building the chain."""
    return match_syndrome(graph, syndrome, cache).parity
