"""Planar surface-code lattices with square smooth defects.

Coordinates: sites are integer points (x, y) with 0 <= x <= W, 0 <= y <= H,
y growing downwards.  Plaquette (px, py) is the unit square whose top-left
corner is site (px, py).  The horizontal edge h(x, y) joins (x, y)-(x+1, y)
and the vertical edge v(x, y) joins (x, y)-(x, y+1).

A defect with anchor plaquette (ax, ay) and size r removes the r*r
plaquettes ax..ax+r-1 by ay..ay+r-1 together with every site and edge
strictly inside the block.  The 4r edges on its perimeter remain.

Separations count edges crossed by the shortest dual path, so a buffer of b
leaves b-1 full plaquette columns between a defect and the outer boundary.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .graph import DecodingGraph

H_EDGE, V_EDGE = 0, 1


class GeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SurfaceLattice:
    r: int
    s: int
    b: int
    n_defects: int
    width: int
    height: int
    defects: tuple[tuple[int, int], ...]

    # ---- membership tests -------------------------------------------------
    def in_defect(self, px: int, py: int) -> int:
        """Index of the defect containing plaquette (px, py), or -1."""
        for k, (ax, ay) in enumerate(self.defects):
            if ax <= px < ax + self.r and ay <= py < ay + self.r:
                return k
        return -1

    def _interior_site(self, x: int, y: int) -> bool:
        for ax, ay in self.defects:
            if ax < x < ax + self.r and ay < y < ay + self.r:
                return True
        return False

    def _plaquette_exists(self, px: int, py: int) -> bool:
        return 0 <= px < self.width and 0 <= py < self.height and self.in_defect(px, py) < 0

    def _edge_plaquettes(self, kind: int, x: int, y: int) -> tuple[tuple[int, int], ...]:
        if kind == H_EDGE:
            cand = ((x, y - 1), (x, y))
        else:
            cand = ((x - 1, y), (x, y))
        return tuple(c for c in cand if self._plaquette_exists(*c))

    # ---- index sets ---------------------------------------------------------
    @cached_property
    def sites(self) -> list[tuple[int, int]]:
        return [(x, y) for y in range(self.height + 1) for x in range(self.width + 1)
                if not self._interior_site(x, y)]

    @cached_property
    def site_index(self) -> dict[tuple[int, int], int]:
        return {c: i for i, c in enumerate(self.sites)}

    @cached_property
    def plaquettes(self) -> list[tuple[int, int]]:
        return [(px, py) for py in range(self.height) for px in range(self.width)
                if self.in_defect(px, py) < 0]

    @cached_property
    def plaquette_index(self) -> dict[tuple[int, int], int]:
        return {c: i for i, c in enumerate(self.plaquettes)}

    @cached_property
    def edges(self) -> list[tuple[int, int, int]]:
        """Edges as (kind, x, y), row-major: per row, horizontals then verticals."""
        out = []
        for y in range(self.height + 1):
            for x in range(self.width):
                if self._edge_plaquettes(H_EDGE, x, y):
                    out.append((H_EDGE, x, y))
            if y < self.height:
                for x in range(self.width + 1):
                    if self._edge_plaquettes(V_EDGE, x, y):
                        out.append((V_EDGE, x, y))
        return out

    @cached_property
    def edge_index(self) -> dict[tuple[int, int, int], int]:
        return {c: i for i, c in enumerate(self.edges)}

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_plaquettes(self) -> int:
        return len(self.plaquettes)

    def edge_sites(self, e: int) -> tuple[int, int]:
        kind, x, y = self.edges[e]
        a = self.site_index[(x, y)]
        b = self.site_index[(x + 1, y) if kind == H_EDGE else (x, y + 1)]
        return a, b

    def edge_plaquettes(self, e: int) -> tuple[int, ...]:
        return tuple(self.plaquette_index[c] for c in self._edge_plaquettes(*self.edges[e]))

    def is_outer_edge(self, e: int) -> bool:
        """True for edges on the external boundary of the lattice."""
        kind, x, y = self.edges[e]
        if kind == H_EDGE:
            return y in (0, self.height)
        return x in (0, self.width)

    # Stabilizer supports in the fixed geometric order North, West, East, South.
    # Missing edges are reported as -1.
    def plaquette_edges_nwes(self, q: int) -> tuple[int, int, int, int]:
        px, py = self.plaquettes[q]
        keys = ((H_EDGE, px, py), (V_EDGE, px, py), (V_EDGE, px + 1, py), (H_EDGE, px, py + 1))
        return tuple(self.edge_index.get(k, -1) for k in keys)

    def site_edges_nwes(self, v: int) -> tuple[int, int, int, int]:
        x, y = self.sites[v]
        keys = ((V_EDGE, x, y - 1), (H_EDGE, x - 1, y), (H_EDGE, x, y), (V_EDGE, x, y))
        return tuple(self.edge_index.get(k, -1) for k in keys)

    # ---- logical chains -----------------------------------------------------
    def defect_perimeter(self, k: int = 0) -> list[int]:
        """Edge ids of the 4r-edge loop bounding defect k (the Z-type loop)."""
        ax, ay = self.defects[k]
        r = self.r
        keys = [(H_EDGE, x, ay) for x in range(ax, ax + r)]
        keys += [(H_EDGE, x, ay + r) for x in range(ax, ax + r)]
        keys += [(V_EDGE, ax, y) for y in range(ay, ay + r)]
        keys += [(V_EDGE, ax + r, y) for y in range(ay, ay + r)]
        return sorted(self.edge_index[k_] for k_ in keys)

    def dual_logical_path(self) -> list[int]:
        """Edges crossed by the canonical straight dual path (the X-type chain).

        One defect: from the outer left boundary to the defect, along the
        defect's top row.  Two defects: between the facing sides of the two
        defects, again along the top row.
        """
        ax, ay = self.defects[0]
        if self.n_defects == 1:
            xs = range(0, ax + 1)
        else:
            xs = range(ax + self.r, self.defects[1][0] + 1)
        return [self.edge_index[(V_EDGE, x, ay)] for x in xs]


def build_lattice(r: int, s: int | None = None, b: int | None = None,
                  n_defects: int = 1) -> SurfaceLattice:
    """Lattice with ``n_defects`` square defects of size r (defaults s = b = 4r)."""
    s = 4 * r if s is None else s
    b = 4 * r if b is None else b
    if r < 1:
        raise GeometryError("defect size r must be >= 1")
    if n_defects not in (1, 2):
        raise GeometryError("n_defects must be 1 or 2")
    if b < 2:
        raise GeometryError("buffer b must be >= 2: the defect would touch the outer boundary")
    if n_defects == 2 and s < 2:
        raise GeometryError("separation s must be >= 2: the defects would touch or overlap")
    if r < 2:
        warnings.warn("defect size r < 2 is below the range used for production runs",
                      stacklevel=2)
    height = 2 * b + r - 2
    if n_defects == 1:
        width = height
        defects = ((b - 1, b - 1),)
    else:
        width = 2 * b + s + 2 * r - 3
        defects = ((b - 1, b - 1), (b - 1 + r + s - 1, b - 1))
    return SurfaceLattice(r, s, b, n_defects, width, height, defects)


def build_decoding_graph(lattice: SurfaceLattice, error_kind: str, p: float = 0.01,
                         outer: str = "open") -> DecodingGraph:
    """2D decoding graph for phase-flip (``"phase"``) or bit-flip (``"bit"``) errors.

    ``outer`` only affects the bit kind: ``"open"`` keeps every outer
    boundary edge as a hanging edge; ``"closed"`` attaches all of them to a
    single ordinary vertex, so chains cannot terminate on the outer boundary.
    """
    m = lattice.n_edges
    rates = np.full(m, float(p))
    logical = np.zeros(m, dtype=bool)
    if error_kind == "phase":
        edges = np.array([lattice.edge_sites(e) for e in range(m)], dtype=np.int64).reshape(-1, 2)
        logical[lattice.dual_logical_path()] = True
        n_v = lattice.n_sites
        boundary = np.zeros(n_v, dtype=bool)
        return DecodingGraph(n_v, edges, rates, boundary, logical, None,
                             f"phase r={lattice.r}")
    if error_kind != "bit":
        raise ValueError(f"unknown error kind {error_kind!r}")
    if outer not in ("open", "closed"):
        raise ValueError("outer must be 'open' or 'closed'")
    n_p = lattice.n_plaquettes
    edges = np.empty((m, 2), dtype=np.int64)
    next_id = n_p
    outer_vertex = -1
    if outer == "closed":
        outer_vertex = next_id
        next_id += 1
    t_ids = []
    for e in range(m):
        plaq = lattice.edge_plaquettes(e)
        if len(plaq) == 2:
            edges[e] = plaq
        elif outer == "closed" and lattice.is_outer_edge(e):
            edges[e] = (plaq[0], outer_vertex)
        else:
            edges[e] = (plaq[0], next_id)
            t_ids.append(next_id)
            next_id += 1
    boundary = np.zeros(next_id, dtype=bool)
    boundary[t_ids] = True
    logical[lattice.defect_perimeter(0)] = True
    return DecodingGraph(next_id, edges, rates, boundary, logical, None,
                         f"bit r={lattice.r}")


def code_distance(graph: DecodingGraph) -> int:
    """Minimum number of edges of an odd-parity chain with empty syndrome.

    Breadth-first search on the parity double cover: a closed odd walk, or
    an odd walk between two T-vertices, is the minimal logical chain.
    """
    from collections import deque

    indptr, nbr, eid = graph.csr
    logical = graph.logical
    n = graph.n_vertices
    best = np.iinfo(np.int64).max

    def bfs(sources):
        dist = np.full((n, 2), -1, dtype=np.int64)
        dq = deque()
        for s in sources:
            dist[s, 0] = 0
            dq.append((s, 0))
        while dq:
            u, par = dq.popleft()
            for k in range(indptr[u], indptr[u + 1]):
                v, pv = nbr[k], par ^ int(logical[eid[k]])
                if dist[v, pv] < 0:
                    dist[v, pv] = dist[u, par] + 1
                    dq.append((v, pv))
        return dist

    t_ids = graph.boundary_vertices
    if len(t_ids):
        d = bfs(t_ids)
        # odd walks from the T set back to the T set
        odd = d[t_ids, 1]
        if np.any(odd >= 0):
            best = min(best, int(odd[odd >= 0].min()))
    # odd closed walks: the minimum over start vertices of d(v, v, odd)
    for v in range(n):
        if graph.boundary[v]:
            continue
        d = bfs([v])
        if d[v, 1] >= 0:
            best = min(best, int(d[v, 1]))
    return int(best)
