"""Small hand-built decoding graphs used by tests and examples."""

from __future__ import annotations

import math

import numpy as np

from .graph import DecodingGraph, make_graph

UNIT_RATE = 1.0 / (1.0 + math.e)  # phi(e) = 1


def degenerate_syndrome_graph() -> tuple[DecodingGraph, list[int]]:
    """Four syndrome vertices whose minimum chains have both parities.

    Vertices 1-2 and 3-4 are joined by straight 6-edge paths; 1-4 and 2-3
    by 4x4 grids with the two vertices at opposite corners, so each of those
    pairs has C(6,3) = 20 shortest paths.  The logical chain consists of the
    six grid edges of the 1-4 grid that cross its anti-diagonal, so every
    monotone path through that grid has odd overlap.

    Returns (graph, syndrome) with syndrome = [1, 2, 3, 4].
    """
    edges: list[tuple[int, int]] = []
    nxt = [5]  # vertex 0 is unused padding so that labels match the picture

    def fresh() -> int:
        nxt[0] += 1
        return nxt[0] - 1

    def path(a: int, b: int, length: int) -> None:
        prev = a
        for _ in range(length - 1):
            v = fresh()
            edges.append((prev, v))
            prev = v
        edges.append((prev, b))

    def grid(a: int, b: int) -> list[int]:
        ids = {}
        for i in range(4):
            for j in range(4):
                if (i, j) == (0, 0):
                    ids[i, j] = a
                elif (i, j) == (3, 3):
                    ids[i, j] = b
                else:
                    ids[i, j] = fresh()
        crossing = []
        for i in range(4):
            for j in range(4):
                for di, dj in ((1, 0), (0, 1)):
                    ii, jj = i + di, j + dj
                    if ii < 4 and jj < 4:
                        if i + j == 2:
                            crossing.append(len(edges))
                        edges.append((ids[i, j], ids[ii, jj]))
        return crossing

    path(1, 2, 6)
    path(3, 4, 6)
    gamma = grid(1, 4)
    grid(2, 3)
    g = make_graph(nxt[0], edges, UNIT_RATE, logical=gamma, name="degenerate")
    return g, [1, 2, 3, 4]


def annulus_graph(rate: float = 0.1) -> DecodingGraph:
    """Inner and outer squares joined by four spokes (12 edges, T empty).

    The logical chain is one inner edge plus the parallel outer edge, a
    dual path from the hole to the outside face.
    """
    inner = [(0, 1), (1, 2), (2, 3), (3, 0)]
    outer = [(4, 5), (5, 6), (6, 7), (7, 4)]
    spokes = [(0, 4), (1, 5), (2, 6), (3, 7)]
    return make_graph(8, inner + outer + spokes, rate, logical=[0, 4], name="annulus")


def strip_graph(rate: float = 0.1) -> DecodingGraph:
    """A 2x3 plaquette strip with hanging edges on the left and right ends.

    Plaquettes 0..5 (row-major, 2 rows of 3), T-vertices 6..9.  The logical
    chain is the pair of left hanging edges, which is a cut.
    """
    edges = [(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5),
             (0, 6), (3, 7), (2, 8), (5, 9)]
    return make_graph(10, edges, rate, boundary=[6, 7, 8, 9], logical=[7, 8],
                      name="strip")


def random_graph(rng: np.random.Generator, max_edges: int = 12, max_vertices: int = 8,
                 with_boundary: bool | None = None) -> DecodingGraph:
    """Random multigraph with random rates; T-vertices get degree one."""
    n_core = int(rng.integers(2, max_vertices + 1))
    m_core = int(rng.integers(1, max_edges + 1))
    edges = [tuple(int(x) for x in rng.choice(n_core, 2, replace=False)) for _ in range(m_core)]
    if with_boundary is None:
        with_boundary = bool(rng.random() < 0.5)
    n_t = int(rng.integers(1, 4)) if with_boundary else 0
    n_t = min(n_t, max_edges + 1 - len(edges)) if len(edges) < max_edges else 0
    boundary = []
    for k in range(n_t):
        t = n_core + k
        edges.append((int(rng.integers(n_core)), t))
        boundary.append(t)
    rates = rng.uniform(0.01, 0.5, len(edges))
    logical = [int(rng.integers(len(edges)))]
    return make_graph(n_core + n_t, edges, rates, boundary=boundary, logical=logical,
                      name="random")
