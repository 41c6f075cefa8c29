"""Single-source shortest paths on CSR graphs (numba)."""

from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True)
def _heap_less(hk, hv, i, j):
    if hk[i] < hk[j]:
        return True
    if hk[i] > hk[j]:
        return False
    return hv[i] < hv[j]


@nb.njit(cache=True)
def _heap_push(hk, hv, size, key, val):
    i = size
    hk[i] = key
    hv[i] = val
    while i > 0:
        parent = (i - 1) >> 1
        if _heap_less(hk, hv, i, parent):
            hk[i], hk[parent] = hk[parent], hk[i]
            hv[i], hv[parent] = hv[parent], hv[i]
            i = parent
        else:
            break
    return size + 1


@nb.njit(cache=True)
def _heap_pop(hk, hv, size):
    key = hk[0]
    val = hv[0]
    size -= 1
    hk[0] = hk[size]
    hv[0] = hv[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        c = left
        if left + 1 < size and _heap_less(hk, hv, left + 1, left):
            c = left + 1
        if _heap_less(hk, hv, c, i):
            hk[i], hk[c] = hk[c], hk[i]
            hv[i], hv[c] = hv[c], hv[i]
            i = c
        else:
            break
    return key, val, size


@nb.njit(cache=True)
def dijkstra(indptr, nbr, eid, weight, gamma, src, dist, pred, par):
    """Fill ``dist``, ``pred`` (edge id into each vertex, -1 at the root) and
    ``par`` (logical parity of the tree path from ``src``).

    Ties are resolved deterministically: vertices leave the heap in
    (distance, id) order and a label is only replaced by a strictly
    shorter one.
    """
    n = dist.shape[0]
    for i in range(n):
        dist[i] = np.inf
        pred[i] = -1
        par[i] = 0
    cap = nbr.shape[0] + n + 1
    hk = np.empty(cap, dtype=np.float64)
    hv = np.empty(cap, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    dist[src] = 0.0
    size = _heap_push(hk, hv, 0, 0.0, src)
    while size > 0:
        d, u, size = _heap_pop(hk, hv, size)
        if done[u]:
            continue
        done[u] = True
        for k in range(indptr[u], indptr[u + 1]):
            v = nbr[k]
            if done[v]:
                continue
            e = eid[k]
            nd = d + weight[e]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = e
                par[v] = par[u] ^ gamma[e]
                size = _heap_push(hk, hv, size, nd, v)


@nb.njit(cache=True)
def nearest_in_mask(dist, mask_ids, rel_tol):
    """(vertex, distance) of the closest vertex among ``mask_ids``.

    Vertices within ``rel_tol`` of the minimum count as tied and the
    smallest id wins; the returned distance is the minimum itself.
    """
    bd = np.inf
    for t in mask_ids:
        if dist[t] < bd:
            bd = dist[t]
    if bd == np.inf:
        return -1, bd
    lim = bd + rel_tol * max(1.0, bd)
    best = -1
    for t in mask_ids:
        if dist[t] <= lim and (best < 0 or t < best):
            best = t
    return best, bd


@nb.njit(cache=True)
def trace_path(edges, pred, src, dst, out_chain):
    """XOR the tree path src -> dst (from the tree rooted at src) into ``out_chain``."""
    v = dst
    while v != src:
        e = pred[v]
        out_chain[e] ^= True
        a = edges[e, 0]
        v = edges[e, 1] if a == v else a


@nb.njit(cache=True)
def terminal_distances(indptr, nbr, eid, weight, gamma, terminals, tmask, rel_tol):
    """Distances and tree parities among ``terminals`` plus the nearest T vertex.

    Equivalent to running :func:`dijkstra` from every terminal and reading
    off the rows, but each search stops once all terminals with a larger id
    and the nearest boundary vertices are settled.  Row i only needs the
    entries j > i, because pair paths are always taken from the tree of the
    smaller id.
    """
    k = terminals.shape[0]
    n = tmask.shape[0]
    D = np.full((k, k), np.inf)
    P = np.zeros((k, k), dtype=np.uint8)
    dT = np.full(k, np.inf)
    tv = np.full(k, -1, dtype=np.int64)
    tpar = np.zeros(k, dtype=np.uint8)
    has_t = False
    for v in range(n):
        if tmask[v]:
            has_t = True
            break
    slot = np.full(n, -1, dtype=np.int64)
    for i in range(k):
        slot[terminals[i]] = i
    dist = np.empty(n)
    par = np.empty(n, dtype=np.uint8)
    done = np.zeros(n, dtype=np.bool_)
    cap = nbr.shape[0] + n + 1
    hk = np.empty(cap, dtype=np.float64)
    hv = np.empty(cap, dtype=np.int64)
    for i in range(k):
        src = terminals[i]
        for v in range(n):
            dist[v] = np.inf
            par[v] = 0
            done[v] = False
        D[i, i] = 0.0
        remaining = 0
        for j in range(i + 1, k):
            remaining += 1
        need_t = has_t
        t_limit = np.inf
        dist[src] = 0.0
        size = _heap_push(hk, hv, 0, 0.0, src)
        while size > 0:
            d, u, size = _heap_pop(hk, hv, size)
            if done[u]:
                continue
            if need_t and d > t_limit:
                need_t = False
            if remaining == 0 and not need_t:
                break
            done[u] = True
            j = slot[u]
            if j > i:
                D[i, j] = d
                D[j, i] = d
                P[i, j] = par[u]
                P[j, i] = par[u]
                remaining -= 1
            if need_t and tmask[u]:
                if tv[i] < 0:
                    tv[i] = u
                    dT[i] = d
                    tpar[i] = par[u]
                    t_limit = d + rel_tol * max(1.0, d)
                elif u < tv[i]:
                    tv[i] = u
                    tpar[i] = par[u]
            for kk in range(indptr[u], indptr[u + 1]):
                v = nbr[kk]
                if done[v]:
                    continue
                e = eid[kk]
                nd = d + weight[e]
                if nd < dist[v]:
                    dist[v] = nd
                    par[v] = par[u] ^ gamma[e]
                    size = _heap_push(hk, hv, size, nd, v)
    return D, P, dT, tv, tpar
