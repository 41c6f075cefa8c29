"""Decoding graphs, error chains and their boundaries.

A chain is a dense boolean vector indexed by edge id. The decoding graph
keeps edge endpoints, per-edge error rates and the logical chain; weights
are always derived from the rates as ``ln((1 - p) / p)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


def rates_to_weights(rates: np.ndarray) -> np.ndarray:
    rates = np.asarray(rates, dtype=float)
    return np.log1p(-rates) - np.log(rates)


@dataclass(frozen=True, eq=False)
class DecodingGraph:
    """Weighted graph shared by the decoder and the sampler.

    ``boundary`` marks the set T; each T-vertex carries exactly one edge.
    ``projection`` (optional) maps each edge to a tuple of 2D qubit ids and is
    only populated for space-time graphs.
    """

    n_vertices: int
    edges: np.ndarray
    rates: np.ndarray
    boundary: np.ndarray
    logical: np.ndarray
    projection: tuple[tuple[int, ...], ...] | None = None
    name: str = ""
    _csr: tuple = field(default=None, repr=False)

    def __post_init__(self):
        edges = np.ascontiguousarray(self.edges, dtype=np.int64).reshape(-1, 2)
        rates = np.ascontiguousarray(self.rates, dtype=float)
        boundary = np.zeros(self.n_vertices, dtype=bool)
        boundary[:] = np.asarray(self.boundary, dtype=bool)
        logical = np.asarray(self.logical, dtype=bool).copy()
        if len(rates) != len(edges) or len(logical) != len(edges):
            raise ValueError("rates/logical must have one entry per edge")
        if len(edges) and (edges.min() < 0 or edges.max() >= self.n_vertices):
            raise ValueError("edge endpoint out of range")
        if np.any(rates <= 0) or np.any(rates > 0.5):
            raise ValueError("edge error rates must lie in (0, 1/2]")
        if not logical.any():
            raise ValueError("logical chain must be nonempty")
        deg = np.bincount(edges.ravel(), minlength=self.n_vertices)
        if np.any(deg[boundary] != 1):
            raise ValueError("every boundary vertex needs exactly one incident edge")
        for arr in (edges, rates, boundary, logical):
            arr.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "boundary", boundary)
        object.__setattr__(self, "logical", logical)
        object.__setattr__(self, "_csr", _build_csr(self.n_vertices, edges))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def weights(self) -> np.ndarray:
        return rates_to_weights(self.rates)

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.boundary)

    @property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indptr, neighbour, edge id) adjacency, neighbours in edge-id order."""
        return self._csr

    def with_rates(self, rates) -> "DecodingGraph":
        rates = np.broadcast_to(np.asarray(rates, dtype=float), (self.n_edges,))
        return DecodingGraph(
            self.n_vertices, self.edges, rates, self.boundary, self.logical,
            self.projection, self.name,
        )

    def with_logical(self, logical) -> "DecodingGraph":
        return DecodingGraph(
            self.n_vertices, self.edges, self.rates, self.boundary, logical,
            self.projection, self.name,
        )

    def empty_chain(self) -> np.ndarray:
        return np.zeros(self.n_edges, dtype=bool)

    def chain(self, edge_ids: Iterable[int]) -> np.ndarray:
        """Chain from edge ids; repeated ids cancel (mod 2)."""
        c = self.empty_chain()
        for e in edge_ids:
            c[e] ^= True
        return c

    def chain_weight(self, chain: np.ndarray) -> float:
        return float(self.weights[np.asarray(chain, dtype=bool)].sum())


def _build_csr(n_vertices: int, edges: np.ndarray):
    m = len(edges)
    ends = np.concatenate([edges[:, 0], edges[:, 1]])
    other = np.concatenate([edges[:, 1], edges[:, 0]])
    eids = np.concatenate([np.arange(m), np.arange(m)])
    order = np.lexsort((eids, ends))
    indptr = np.zeros(n_vertices + 1, dtype=np.int64)
    np.cumsum(np.bincount(ends, minlength=n_vertices), out=indptr[1:])
    nbr = np.ascontiguousarray(other[order], dtype=np.int64)
    eid = np.ascontiguousarray(eids[order], dtype=np.int64)
    for arr in (indptr, nbr, eid):
        arr.setflags(write=False)
    return indptr, nbr, eid


def boundary_mask(graph: DecodingGraph, chain: np.ndarray) -> np.ndarray:
    chain = np.asarray(chain, dtype=bool)
    ends = graph.edges[chain].ravel()
    return (np.bincount(ends, minlength=graph.n_vertices) & 1).astype(bool)


def boundary_of(graph: DecodingGraph, chain: np.ndarray) -> np.ndarray:
    """Vertices with an odd number of incident chain edges (sorted ids)."""
    return np.flatnonzero(boundary_mask(graph, chain))


def syndrome_of(graph: DecodingGraph, chain: np.ndarray) -> np.ndarray:
    """Boundary of the chain with T-vertices removed (sorted ids)."""
    mask = boundary_mask(graph, chain)
    mask &= ~graph.boundary
    return np.flatnonzero(mask)


def parity(graph: DecodingGraph, chain: np.ndarray) -> int:
    """Overlap of the chain with the logical chain, mod 2."""
    return int(np.count_nonzero(np.asarray(chain, dtype=bool) & graph.logical) & 1)


# -- text serialization -------------------------------------------------------
#
# line 1: "surfsplit-graph 1"
# line 2: |V| |E| |T|
# line 3: T vertex ids (may be empty)
# then one line per edge: u v weight rate gamma [; q1 q2 ...]
# the projection suffix is present only when the graph carries one.

_MAGIC = "surfsplit-graph 1"


def dumps_graph(graph: DecodingGraph) -> str:
    lines = [_MAGIC]
    t_ids = graph.boundary_vertices
    lines.append(f"{graph.n_vertices} {graph.n_edges} {len(t_ids)}")
    lines.append(" ".join(str(int(t)) for t in t_ids))
    w = graph.weights
    for i, (u, v) in enumerate(graph.edges):
        row = f"{u} {v} {w[i]:.17g} {graph.rates[i]:.17g} {int(graph.logical[i])}"
        if graph.projection is not None:
            row += " ;" + "".join(f" {q}" for q in graph.projection[i])
        lines.append(row)
    return "\n".join(lines) + "\n"


def loads_graph(text: str, name: str = "") -> DecodingGraph:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _MAGIC:
        raise ValueError("not a surfsplit graph file")
    n_v, n_e, n_t = (int(x) for x in lines[1].split())
    t_ids = [int(x) for x in lines[2].split()]
    if len(t_ids) != n_t:
        raise ValueError("T header count does not match T line")
    body = lines[3:3 + n_e]
    if len(body) != n_e:
        raise ValueError("truncated edge list")
    edges = np.empty((n_e, 2), dtype=np.int64)
    rates = np.empty(n_e)
    logical = np.zeros(n_e, dtype=bool)
    proj: list[tuple[int, ...]] = []
    has_proj = any(";" in row for row in body)
    for i, row in enumerate(body):
        head, _, tail = row.partition(";")
        u, v, _w, p, g = head.split()
        edges[i] = (int(u), int(v))
        rates[i] = float(p)
        logical[i] = g == "1"
        if has_proj:
            proj.append(tuple(int(q) for q in tail.split()))
    boundary = np.zeros(n_v, dtype=bool)
    boundary[t_ids] = True
    return DecodingGraph(n_v, edges, rates, boundary, logical,
                         tuple(proj) if has_proj else None, name)


def save_graph(graph: DecodingGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_graph(graph))


def load_graph(path) -> DecodingGraph:
    with open(path) as fh:
        return loads_graph(fh.read())


def make_graph(n_vertices: int, edges: Sequence[tuple[int, int]], rates=0.1,
               boundary: Sequence[int] = (), logical: Sequence[int] = (0,),
               name: str = "") -> DecodingGraph:
    """Convenience constructor from plain python lists."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    rates = np.broadcast_to(np.asarray(rates, dtype=float), (len(edges),))
    bmask = np.zeros(n_vertices, dtype=bool)
    bmask[list(boundary)] = True
    lmask = np.zeros(len(edges), dtype=bool)
    lmask[list(logical)] = True
    return DecodingGraph(n_vertices, edges, rates, bmask, lmask, None, name)
