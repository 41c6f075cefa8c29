"""Correctable versus uncorrectable error chains.

Two notions are provided.  The decoder-specific one asks whether *our*
decoder recovers the right logical parity.  The decoder-independent one
asks whether *every* minimum-weight recovery does; it is computed exactly by
enumerating the affine space of chains with a given reduced boundary, or,
when the logical chain is a cut of the graph, by comparing two matching
problems on a graph where the boundary vertices on one side are merged.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from .decoding import REL_TOL, InfeasibleSyndrome, PathCache, decode, match_syndrome
from .graph import DecodingGraph, parity, syndrome_of

MAX_ENUM_DIM = 24


class PreconditionError(ValueError):
    pass


def is_correctable_decoder_specific(graph: DecodingGraph, chain: np.ndarray,
                                    cache: PathCache | None = None) -> bool:
    rec = match_syndrome(graph, syndrome_of(graph, chain), cache)
    return rec.parity == parity(graph, chain)


# ---------------------------------------------------------------------------
# exhaustive enumeration over an affine GF(2) space
# ---------------------------------------------------------------------------

def _solution_space(graph: DecodingGraph, S, T) -> tuple[np.ndarray, np.ndarray]:
    """Particular solution x0 and null-space basis B of (boundary R) minus T = S."""
    tmask = np.zeros(graph.n_vertices, dtype=bool)
    if T is None:
        tmask[:] = graph.boundary
    else:
        tmask[np.asarray(list(T), dtype=np.int64)] = True
    rows = np.flatnonzero(~tmask)
    m = graph.n_edges
    A = np.zeros((len(rows), m + 1), dtype=np.uint8)
    pos = {int(v): i for i, v in enumerate(rows)}
    for e, (u, v) in enumerate(graph.edges):
        for x in (u, v):
            i = pos.get(int(x))
            if i is not None:
                A[i, e] ^= 1
    for s in S:
        if int(s) not in pos:
            raise ValueError("syndrome vertex lies in the boundary set")
        A[pos[int(s)], m] ^= 1
    pivots = []
    r = 0
    for c in range(m):
        hit = np.flatnonzero(A[r:, c])
        if len(hit) == 0:
            continue
        p = r + hit[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        others = np.flatnonzero(A[:, c])
        others = others[others != r]
        A[others] ^= A[r]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    if np.any(A[r:, m]):
        raise InfeasibleSyndrome("no chain has this reduced boundary")
    x0 = np.zeros(m, dtype=np.uint8)
    for i, c in enumerate(pivots):
        x0[c] = A[i, m]
    free = [c for c in range(m) if c not in set(pivots)]
    B = np.zeros((len(free), m), dtype=np.uint8)
    for k, f in enumerate(free):
        B[k, f] = 1
        for i, c in enumerate(pivots):
            B[k, c] = A[i, f]
    return x0, B


@nb.njit(cache=True)
def _gray_scan(x0, B, w, gamma, rel_tol, collect):
    """Walk all 2^d chains x0 + span(B) in Gray-code order.

    Returns per-parity minimum weights and, when ``collect`` is set, the
    Gray codes (and parities) of every chain within tolerance of the running
    overall minimum.
    """
    d, m = B.shape
    cur = x0.copy()
    wt = 0.0
    par = 0
    for e in range(m):
        if cur[e]:
            wt += w[e]
            par ^= gamma[e]
    best = np.array([np.inf, np.inf])
    best[par] = wt
    cap = 1024
    codes = np.empty(cap, dtype=np.int64)
    wts = np.empty(cap)
    pars = np.empty(cap, dtype=np.uint8)
    cnt = 0
    if collect:
        codes[0] = 0
        wts[0] = wt
        pars[0] = par
        cnt = 1
    total = np.int64(1) << np.int64(d)
    for i in range(1, total):
        j = 0
        while ((i >> j) & 1) == 0:
            j += 1
        for e in range(m):
            if B[j, e]:
                if cur[e]:
                    wt -= w[e]
                else:
                    wt += w[e]
                cur[e] ^= 1
                par ^= gamma[e]
        if wt < best[par]:
            best[par] = wt
        if collect:
            lo = min(best[0], best[1])
            if wt <= lo + rel_tol * max(1.0, abs(lo)):
                if cnt == cap:
                    cap *= 2
                    c2 = np.empty(cap, dtype=np.int64)
                    w2 = np.empty(cap)
                    p2 = np.empty(cap, dtype=np.uint8)
                    c2[:cnt] = codes[:cnt]
                    w2[:cnt] = wts[:cnt]
                    p2[:cnt] = pars[:cnt]
                    codes, wts, pars = c2, w2, p2
                codes[cnt] = i ^ (i >> 1)
                wts[cnt] = wt
                pars[cnt] = par
                cnt += 1
    return best, codes[:cnt], wts[:cnt], pars[:cnt]


def _scan(graph, S, T, weights=None, collect=False):
    x0, B = _solution_space(graph, S, T)
    if B.shape[0] > MAX_ENUM_DIM:
        raise PreconditionError(
            f"solution space has dimension {B.shape[0]} > {MAX_ENUM_DIM}; refusing to enumerate")
    w = graph.weights if weights is None else np.asarray(weights, dtype=float)
    out = _gray_scan(x0, B, np.ascontiguousarray(w), graph.logical.astype(np.uint8),
                     REL_TOL, collect)
    return x0, B, out


def parity_minima(graph: DecodingGraph, S, T=None) -> tuple[float, float]:
    """Minimum chain weight among even and among odd chains with the given syndrome."""
    _, _, (best, *_rest) = _scan(graph, S, T)
    return float(best[0]), float(best[1])


def brute_force_min_chains(graph: DecodingGraph, S, T=None) -> list[np.ndarray]:
    """Every minimum-weight chain R with (boundary of R) minus T equal to S.

    The search covers the whole solution space, so it refuses when that
    space has more than 2**24 elements (always fine for graphs with at most
    24 edges).
    """
    x0, B, (best, codes, wts, _pars) = _scan(graph, S, T, collect=True)
    lo = float(min(best))
    keep = wts <= lo + REL_TOL * max(1.0, abs(lo))
    chains = []
    for code in codes[keep]:
        x = x0.copy()
        for j in range(B.shape[0]):
            if (int(code) >> j) & 1:
                x ^= B[j]
        chains.append(x.astype(bool))
    return chains


def _tied(a: float, b: float) -> bool:
    if not (np.isfinite(a) and np.isfinite(b)):
        return False
    return abs(a - b) <= REL_TOL * max(1.0, abs(a), abs(b))


def is_degenerate(graph: DecodingGraph, S, T=None) -> bool:
    """True iff the minimum-weight chains for S include both parities."""
    even, odd = parity_minima(graph, S, T)
    return _tied(even, odd)


def is_correctable_strong(graph: DecodingGraph, chain: np.ndarray) -> bool:
    """Decoder-independent correctability by exhaustive enumeration."""
    even, odd = parity_minima(graph, syndrome_of(graph, chain))
    own = parity(graph, chain)
    mine, other = (even, odd) if own == 0 else (odd, even)
    return mine < other and not _tied(mine, other)


def min_odd_cycle_gap(graph: DecodingGraph, r0: np.ndarray) -> float:
    """delta = min over odd cycles C of phi(R0 xor C) - phi(R0), by enumeration."""
    w = graph.weights.copy()
    r0 = np.asarray(r0, dtype=bool)
    w[r0] = -w[r0]
    tnone = np.zeros(0, dtype=np.int64)
    _, _, (best, *_rest) = _scan(graph, [], tnone, weights=w)
    return float(best[1])


def is_correctable_strong_cycles(graph: DecodingGraph, chain: np.ndarray) -> bool:
    """Decoder-independent test for T = {} via the odd-cycle gap delta.

    The chain is uncorrectable iff its minimum-weight recovery already has
    the wrong parity, or some odd cycle leaves the recovery weight unchanged
    (delta = 0).
    """
    if graph.boundary.any():
        raise PreconditionError("odd-cycle test needs an empty boundary set")
    r0 = decode(graph, syndrome_of(graph, chain))
    if parity(graph, r0) != parity(graph, chain):
        return False
    delta = min_odd_cycle_gap(graph, r0)
    return not (delta <= REL_TOL * max(1.0, graph.chain_weight(r0)))


# ---------------------------------------------------------------------------
# cut-based test
# ---------------------------------------------------------------------------

def logical_cut_sides(graph: DecodingGraph, logical: np.ndarray | None = None,
                      keep: np.ndarray | None = None) -> np.ndarray:
    """Side label (0/1) per vertex such that the logical chain is the cut.

    Raises PreconditionError when the logical chain is not a cut.  Only the
    edges flagged in ``keep`` take part.
    """
    logical = graph.logical if logical is None else logical
    keep = np.ones(graph.n_edges, dtype=bool) if keep is None else keep
    side = np.full(graph.n_vertices, -1, dtype=np.int64)
    indptr, nbr, eid = graph.csr
    for root in range(graph.n_vertices):
        if side[root] >= 0:
            continue
        side[root] = 0
        stack = [root]
        while stack:
            u = stack.pop()
            for k in range(indptr[u], indptr[u + 1]):
                e = eid[k]
                if not keep[e]:
                    continue
                v = nbr[k]
                want = side[u] ^ int(logical[e])
                if side[v] < 0:
                    side[v] = want
                    stack.append(v)
                elif side[v] != want:
                    raise PreconditionError("logical chain is not a cut of the graph")
    return side


def is_correctable_strong_cut(graph: DecodingGraph, chain: np.ndarray) -> bool:
    """Decoder-independent correctability when the logical chain is a cut."""
    S = syndrome_of(graph, chain)
    rec = match_syndrome(graph, S)
    if rec.parity != parity(graph, chain):
        return False
    tmask = graph.boundary
    tt = tmask[graph.edges[:, 0]] & tmask[graph.edges[:, 1]]
    w = graph.weights
    if np.any(tt & graph.logical & (w <= 0)):
        return False
    # positive-weight T-T edges never appear in a minimum chain: drop them
    keep = ~tt
    side = logical_cut_sides(graph, graph.logical, keep)
    t0_set = tmask & (side == 0)
    if not t0_set.any():
        return True
    old_ids = np.flatnonzero(~t0_set)
    remap = np.full(graph.n_vertices, -1, dtype=np.int64)
    remap[old_ids] = np.arange(len(old_ids))
    t0 = len(old_ids)
    remap[t0_set] = t0
    new_edges = remap[graph.edges]
    live = keep & (new_edges[:, 0] != new_edges[:, 1])
    if not live.any():
        return True
    logical = graph.logical[live]
    if not logical.any():
        logical = logical.copy()
        logical[0] = True
    g2 = DecodingGraph(t0 + 1, new_edges[live], graph.rates[live],
                       np.zeros(t0 + 1, dtype=bool), logical)
    t_tilde = np.zeros(t0 + 1, dtype=bool)
    t_tilde[remap[tmask & (side == 1)]] = True
    S_new = remap[S]

    def min_weight(targets) -> float:
        try:
            return match_syndrome(g2, targets, None, boundary=t_tilde).weight
        except InfeasibleSyndrome:
            return np.inf

    w1 = min_weight(S_new)
    w2 = min_weight(np.append(S_new, t0))
    return not _tied(w1, w2)
