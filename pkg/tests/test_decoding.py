import itertools

import networkx as nx
import numpy as np
import pytest

from surfsplit._blossom import max_weight_matching
from surfsplit.correctability import brute_force_min_chains
from surfsplit.decoding import (REL_TOL, InfeasibleSyndrome, MatchingInstance, PathCache,
                                decode, exact_matching, match_syndrome, recovery_parity,
                                solve_problem1, solve_problem2)
from surfsplit.graph import boundary_of, make_graph, parity, syndrome_of
from surfsplit.instances import degenerate_syndrome_graph, random_graph, strip_graph


def _matching_weight(w, mate):
    return sum(int(w[i, mate[i]]) for i in range(len(mate)) if mate[i] > i)


def test_blossom_matches_networkx(rng):
    for _ in range(60):
        k = int(rng.integers(2, 12))
        w = np.zeros((k, k), dtype=np.int64)
        for i in range(k):
            for j in range(i + 1, k):
                if rng.random() < 0.6:
                    w[i, j] = w[j, i] = int(rng.integers(1, 50))
        mate = max_weight_matching(w)
        g = nx.Graph()
        g.add_nodes_from(range(k))
        for i in range(k):
            for j in range(i + 1, k):
                if w[i, j]:
                    g.add_edge(i, j, weight=int(w[i, j]))
        ref = nx.max_weight_matching(g)
        assert _matching_weight(w, mate) == sum(g[u][v]["weight"] for u, v in ref)
        for i in range(k):
            if mate[i] >= 0:
                assert mate[mate[i]] == i


def test_min_perfect_matching_brute_force(rng):
    for _ in range(30):
        k = 2 * int(rng.integers(1, 5))
        pts = rng.random((k, 2))
        D = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
        pairs = exact_matching(MatchingInstance(np.arange(k), D))
        got = sum(D[i, j] for i, j in pairs)

        def best(rest):
            if not rest:
                return 0.0
            a = rest[0]
            return min(D[a, b] + best([x for x in rest if x not in (a, b)]) for b in rest[1:])

        assert got == pytest.approx(best(list(range(k))), rel=1e-9)


def test_decoder_is_minimum_weight_on_random_graphs(rng):
    for _ in range(80):
        g = random_graph(rng, max_edges=10)
        E = rng.random(g.n_edges) < 0.4
        S = syndrome_of(g, E)
        R = decode(g, S)
        assert np.array_equal(syndrome_of(g, R), S)
        best = brute_force_min_chains(g, S)
        w_best = g.chain_weight(best[0])
        assert g.chain_weight(R) <= w_best + REL_TOL * max(1.0, w_best)


def test_recovery_parity_agrees_with_chain(rng):
    for _ in range(40):
        g = random_graph(rng, max_edges=12)
        E = rng.random(g.n_edges) < 0.3
        S = syndrome_of(g, E)
        assert recovery_parity(g, S) == parity(g, decode(g, S))


def test_problem1_ignores_boundary_vertices():
    g = strip_graph()
    # vertex 0 alone: problem 2 may go to a T vertex, problem 1 must pair it off
    R2 = solve_problem2(g, [0])
    assert list(syndrome_of(g, R2)) == [0]
    R1 = solve_problem1(g, [0, 2])
    assert list(boundary_of(g, R1)) == [0, 2]
    assert g.chain_weight(R1) == pytest.approx(2 * g.weights[0])


def test_problem2_with_explicit_boundary_set():
    g = make_graph(4, [(0, 1), (1, 2), (2, 3)], [0.1, 0.2, 0.1])
    R = solve_problem2(g, [1], T=[3])
    assert list(np.flatnonzero(R)) == [1, 2]
    R = solve_problem2(g, [1], T=[0])
    assert list(np.flatnonzero(R)) == [0]


def test_odd_syndrome_without_boundary_is_infeasible():
    g = make_graph(3, [(0, 1), (1, 2)])
    with pytest.raises(InfeasibleSyndrome):
        decode(g, [0])


def test_disconnected_pair_is_infeasible():
    g = make_graph(4, [(0, 1), (2, 3)])
    with pytest.raises(InfeasibleSyndrome):
        decode(g, [0, 2])


def test_syndrome_on_boundary_is_rejected():
    with pytest.raises(ValueError):
        decode(strip_graph(), [6])


def test_cache_updates_match_fresh_cache(rng):
    g = random_graph(rng, max_edges=12, with_boundary=True)
    cache = PathCache(g)
    E = np.zeros(g.n_edges, dtype=bool)
    for _ in range(60):
        e = int(rng.integers(g.n_edges))
        before = set(syndrome_of(g, E))
        E[e] ^= True
        after = set(syndrome_of(g, E))
        cache.update(before - after, after - before)
        S = sorted(after)
        a = match_syndrome(g, S, cache)
        b = match_syndrome(g, S, PathCache(g))
        assert a.parity == b.parity
        assert a.weight == pytest.approx(b.weight, rel=1e-12)


def test_cache_from_other_graph_is_rejected():
    with pytest.raises(ValueError):
        match_syndrome(strip_graph(), [0, 1], PathCache(strip_graph()))


def test_degenerate_instance_returns_a_minimum_chain():
    g, S = degenerate_syndrome_graph()
    R = decode(g, S)
    best = brute_force_min_chains(g, S) if g.n_edges <= 24 else None
    w = g.chain_weight(R)
    assert np.array_equal(syndrome_of(g, R), S)
    # both pairings cost 12 edges through paths or 12 through the grids
    assert w == pytest.approx(12 * g.weights[0])
    if best is not None:
        assert w == pytest.approx(g.chain_weight(best[0]))


def test_decode_is_deterministic(rng):
    g, S = degenerate_syndrome_graph()
    first = decode(g, S)
    for _ in range(5):
        assert np.array_equal(decode(g, S), first)
    assert np.array_equal(decode(g, S, PathCache(g)), first)


@pytest.mark.parametrize("k", [0, 2, 4])
def test_empty_and_small_syndromes_on_a_cycle(k):
    n = 8
    g = make_graph(n, [(i, (i + 1) % n) for i in range(n)])
    S = list(range(k))
    R = decode(g, S)
    assert list(boundary_of(g, R)) == S
    assert R.sum() == k // 2
