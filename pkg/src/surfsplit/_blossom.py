"""Dense O(n^3) weighted general matching (Edmonds blossom, primal-dual).

This is a numba port of the classic array-based formulation that keeps, for
every pair of (possibly contracted) vertices, the best original edge between
them.  Vertices are 1-indexed; index 0 means "none".  Weights are positive
int64 values; a weight of 0 means the edge is absent.  The routine returns a
maximum-weight matching (not necessarily perfect).

Recursive helpers of the textbook version (set_st, q_push, set_match) are
written with explicit stacks so that numba can compile them.
"""

from __future__ import annotations

import numba as nb
import numpy as np


@nb.njit(cache=True)
def _dist(gu, gv, gw, lab, a, b):
    u = gu[a, b]
    v = gv[a, b]
    return lab[u] + lab[v] - gw[u, v] * 2


@nb.njit(cache=True)
def _update_slack(gu, gv, gw, lab, slack, u, x):
    if slack[x] == 0 or _dist(gu, gv, gw, lab, u, x) < _dist(gu, gv, gw, lab, slack[x], x):
        slack[x] = u


@nb.njit(cache=True)
def _set_slack(n, gu, gv, gw, lab, slack, st, S, x):
    slack[x] = 0
    for u in range(1, n + 1):
        if gw[u, x] > 0 and st[u] != x and S[st[u]] == 0:
            _update_slack(gu, gv, gw, lab, slack, u, x)


@nb.njit(cache=True)
def _grow(queue, qstate):
    h = qstate[0]
    cnt = qstate[1] - h
    out = np.zeros(2 * queue.shape[0], dtype=np.int64)
    for i in range(cnt):
        out[i] = queue[h + i]
    qstate[0] = 0
    qstate[1] = cnt
    return out


@nb.njit(cache=True)
def _q_push(n, flower, flen, queue, qstate, stack, x):
    """Append the leaf vertices of x to the queue; returns the (maybe grown) queue."""
    sp = 0
    stack[sp] = x
    sp += 1
    while sp > 0:
        sp -= 1
        y = stack[sp]
        if y <= n:
            if qstate[1] >= queue.shape[0]:
                queue = _grow(queue, qstate)
            queue[qstate[1]] = y
            qstate[1] += 1
        else:
            for i in range(flen[y] - 1, -1, -1):
                stack[sp] = flower[y, i]
                sp += 1
    return queue


@nb.njit(cache=True)
def _set_st(n, flower, flen, st, stack, x, b):
    sp = 0
    stack[sp] = x
    sp += 1
    while sp > 0:
        sp -= 1
        y = stack[sp]
        st[y] = b
        if y > n:
            for i in range(flen[y]):
                stack[sp] = flower[y, i]
                sp += 1


@nb.njit(cache=True)
def _get_pr(flower, flen, b, xr):
    L = flen[b]
    pr = 0
    while flower[b, pr] != xr:
        pr += 1
    if pr % 2 == 1:
        i = 1
        j = L - 1
        while i < j:
            t = flower[b, i]
            flower[b, i] = flower[b, j]
            flower[b, j] = t
            i += 1
            j -= 1
        return L - pr
    return pr


@nb.njit(cache=True)
def _set_match(n, gu, gv, flower, flen, flower_from, match, stk_a, stk_b, tmp, u0, v0):
    sp = 0
    stk_a[sp] = u0
    stk_b[sp] = v0
    sp += 1
    while sp > 0:
        sp -= 1
        u = stk_a[sp]
        v = stk_b[sp]
        match[u] = gv[u, v]
        if u > n:
            xr = flower_from[u, gu[u, v]]
            pr = _get_pr(flower, flen, u, xr)
            for i in range(pr):
                stk_a[sp] = flower[u, i]
                stk_b[sp] = flower[u, i ^ 1]
                sp += 1
            stk_a[sp] = xr
            stk_b[sp] = v
            sp += 1
            L = flen[u]
            for i in range(L):
                tmp[i] = flower[u, (i + pr) % L]
            for i in range(L):
                flower[u, i] = tmp[i]


@nb.njit(cache=True)
def _max_weight_matching(w):
    """Maximum-weight matching for the symmetric int64 matrix ``w`` (n x n).

    Returns ``mate`` with mate[i] = partner index or -1 (0-indexed).
    """
    n = w.shape[0]
    N2 = 2 * n + 1
    gu = np.zeros((N2, N2), dtype=np.int64)
    gv = np.zeros((N2, N2), dtype=np.int64)
    gw = np.zeros((N2, N2), dtype=np.int64)
    for u in range(1, n + 1):
        for v in range(1, n + 1):
            gu[u, v] = u
            gv[u, v] = v
            if u != v:
                gw[u, v] = w[u - 1, v - 1]
    lab = np.zeros(N2, dtype=np.int64)
    match = np.zeros(N2, dtype=np.int64)
    slack = np.zeros(N2, dtype=np.int64)
    st = np.zeros(N2, dtype=np.int64)
    pa = np.zeros(N2, dtype=np.int64)
    S = np.zeros(N2, dtype=np.int64)
    vis = np.zeros(N2, dtype=np.int64)
    flower_from = np.zeros((N2, n + 1), dtype=np.int64)
    flower = np.zeros((N2, N2), dtype=np.int64)
    flen = np.zeros(N2, dtype=np.int64)
    queue = np.zeros(16 * N2 + 16, dtype=np.int64)
    qstate = np.zeros(2, dtype=np.int64)
    stack = np.zeros(4 * N2 + 4, dtype=np.int64)
    stk_a = np.zeros(4 * N2 + 4, dtype=np.int64)
    stk_b = np.zeros(4 * N2 + 4, dtype=np.int64)
    tmp = np.zeros(N2, dtype=np.int64)
    tstamp = 0

    n_x = n
    for u in range(0, n + 1):
        st[u] = u
    w_max = 0
    for u in range(1, n + 1):
        for v in range(1, n + 1):
            flower_from[u, v] = u if u == v else 0
            if gw[u, v] > w_max:
                w_max = gw[u, v]
    for u in range(1, n + 1):
        lab[u] = w_max

    while True:
        # ---------------- one augmentation phase ----------------
        for x in range(1, n_x + 1):
            S[x] = -1
            slack[x] = 0
        qstate[0] = 0
        qstate[1] = 0
        for x in range(1, n_x + 1):
            if st[x] == x and match[x] == 0:
                pa[x] = 0
                S[x] = 0
                queue = _q_push(n, flower, flen, queue, qstate, stack, x)
        if qstate[0] == qstate[1]:
            break
        augmented = False
        stop = False
        while True:
            while qstate[0] < qstate[1]:
                u = queue[qstate[0]]
                qstate[0] += 1
                if S[st[u]] == 1:
                    continue
                for v in range(1, n + 1):
                    if gw[u, v] > 0 and st[u] != st[v]:
                        if _dist(gu, gv, gw, lab, u, v) == 0:
                            res, n_x, tstamp, queue = _on_found_edge(
                                n, n_x, u, v, gu, gv, gw, lab, match, slack, st, pa, S, vis,
                                flower_from, flower, flen, queue, qstate, stack, stk_a, stk_b,
                                tmp, tstamp)
                            if res:
                                augmented = True
                                break
                        else:
                            _update_slack(gu, gv, gw, lab, slack, u, st[v])
                if augmented:
                    break
            if augmented:
                break
            d = np.int64(1) << np.int64(62)
            for b in range(n + 1, n_x + 1):
                if st[b] == b and S[b] == 1:
                    if lab[b] // 2 < d:
                        d = lab[b] // 2
            for x in range(1, n_x + 1):
                if st[x] == x and slack[x] != 0:
                    if S[x] == -1:
                        dd = _dist(gu, gv, gw, lab, slack[x], x)
                        if dd < d:
                            d = dd
                    elif S[x] == 0:
                        dd = _dist(gu, gv, gw, lab, slack[x], x) // 2
                        if dd < d:
                            d = dd
            for u in range(1, n + 1):
                if S[st[u]] == 0:
                    if lab[u] <= d:
                        stop = True
                        break
                    lab[u] -= d
                elif S[st[u]] == 1:
                    lab[u] += d
            if stop:
                break
            for b in range(n + 1, n_x + 1):
                if st[b] == b:
                    if S[st[b]] == 0:
                        lab[b] += d * 2
                    elif S[st[b]] == 1:
                        lab[b] -= d * 2
            qstate[0] = 0
            qstate[1] = 0
            for x in range(1, n_x + 1):
                if st[x] == x and slack[x] != 0 and st[slack[x]] != x \
                        and _dist(gu, gv, gw, lab, slack[x], x) == 0:
                    res, n_x, tstamp, queue = _on_found_edge(
                        n, n_x, slack[x], x, gu, gv, gw, lab, match, slack, st, pa, S, vis,
                        flower_from, flower, flen, queue, qstate, stack, stk_a, stk_b,
                        tmp, tstamp)
                    if res:
                        augmented = True
                        break
            if augmented:
                break
            for b in range(n + 1, n_x + 1):
                if st[b] == b and S[b] == 1 and lab[b] == 0:
                    queue = _expand_blossom(n, b, gu, gv, gw, lab, slack, st, pa, S, flower_from,
                                    flower, flen, queue, qstate, stack)
        if not augmented:
            break

    mate = np.full(n, -1, dtype=np.int64)
    for u in range(1, n + 1):
        if match[u] != 0:
            mate[u - 1] = match[u] - 1
    return mate


@nb.njit(cache=True)
def _augment(n, u, v, gu, gv, match, st, pa, flower, flen, flower_from, stk_a, stk_b, tmp):
    while True:
        xnv = st[match[u]]
        _set_match(n, gu, gv, flower, flen, flower_from, match, stk_a, stk_b, tmp, u, v)
        if xnv == 0:
            return
        _set_match(n, gu, gv, flower, flen, flower_from, match, stk_a, stk_b, tmp,
                   xnv, st[pa[xnv]])
        u = st[pa[xnv]]
        v = xnv


@nb.njit(cache=True)
def _get_lca(u, v, match, st, pa, vis, tstamp):
    tstamp += 1
    while u != 0 or v != 0:
        if u != 0:
            if vis[u] == tstamp:
                return u, tstamp
            vis[u] = tstamp
            u = st[match[u]]
            if u != 0:
                u = st[pa[u]]
        t = u
        u = v
        v = t
    return 0, tstamp


@nb.njit(cache=True)
def _on_found_edge(n, n_x, a, b, gu, gv, gw, lab, match, slack, st, pa, S, vis,
                   flower_from, flower, flen, queue, qstate, stack, stk_a, stk_b, tmp, tstamp):
    eu = gu[a, b]
    ev = gv[a, b]
    u = st[eu]
    v = st[ev]
    if S[v] == -1:
        pa[v] = eu
        S[v] = 1
        nu = st[match[v]]
        slack[v] = 0
        slack[nu] = 0
        S[nu] = 0
        queue = _q_push(n, flower, flen, queue, qstate, stack, nu)
    elif S[v] == 0:
        lca, tstamp = _get_lca(u, v, match, st, pa, vis, tstamp)
        if lca == 0:
            _augment(n, u, v, gu, gv, match, st, pa, flower, flen, flower_from, stk_a, stk_b, tmp)
            _augment(n, v, u, gu, gv, match, st, pa, flower, flen, flower_from, stk_a, stk_b, tmp)
            return True, n_x, tstamp, queue
        n_x, queue = _add_blossom(n, n_x, u, lca, v, gu, gv, gw, lab, match, slack, st, pa, S,
                                  flower_from, flower, flen, queue, qstate, stack)
    return False, n_x, tstamp, queue


@nb.njit(cache=True)
def _add_blossom(n, n_x, u, lca, v, gu, gv, gw, lab, match, slack, st, pa, S,
                 flower_from, flower, flen, queue, qstate, stack):
    b = n + 1
    while b <= n_x and st[b] != 0:
        b += 1
    if b > n_x:
        n_x += 1
    lab[b] = 0
    S[b] = 0
    match[b] = match[lca]
    flen[b] = 0
    flower[b, 0] = lca
    flen[b] = 1
    x = u
    while x != lca:
        flower[b, flen[b]] = x
        flen[b] += 1
        y = st[match[x]]
        flower[b, flen[b]] = y
        flen[b] += 1
        queue = _q_push(n, flower, flen, queue, qstate, stack, y)
        x = st[pa[y]]
    # reverse flower[b][1:]
    i = 1
    j = flen[b] - 1
    while i < j:
        t = flower[b, i]
        flower[b, i] = flower[b, j]
        flower[b, j] = t
        i += 1
        j -= 1
    x = v
    while x != lca:
        flower[b, flen[b]] = x
        flen[b] += 1
        y = st[match[x]]
        flower[b, flen[b]] = y
        flen[b] += 1
        queue = _q_push(n, flower, flen, queue, qstate, stack, y)
        x = st[pa[y]]
    _set_st(n, flower, flen, st, stack, b, b)
    for x in range(1, n_x + 1):
        gw[b, x] = 0
        gw[x, b] = 0
    for x in range(1, n + 1):
        flower_from[b, x] = 0
    for i in range(flen[b]):
        xs = flower[b, i]
        for x in range(1, n_x + 1):
            if gw[b, x] == 0 or _dist(gu, gv, gw, lab, xs, x) < _dist(gu, gv, gw, lab, b, x):
                gu[b, x] = gu[xs, x]
                gv[b, x] = gv[xs, x]
                gw[b, x] = gw[xs, x]
                gu[x, b] = gu[x, xs]
                gv[x, b] = gv[x, xs]
                gw[x, b] = gw[x, xs]
        for x in range(1, n + 1):
            if flower_from[xs, x] != 0:
                flower_from[b, x] = xs
    _set_slack(n, gu, gv, gw, lab, slack, st, S, b)
    return n_x, queue


@nb.njit(cache=True)
def _expand_blossom(n, b, gu, gv, gw, lab, slack, st, pa, S, flower_from,
                    flower, flen, queue, qstate, stack):
    for i in range(flen[b]):
        _set_st(n, flower, flen, st, stack, flower[b, i], flower[b, i])
    xr = flower_from[b, gu[b, pa[b]]]
    pr = _get_pr(flower, flen, b, xr)
    for i in range(0, pr, 2):
        xs = flower[b, i]
        xns = flower[b, i + 1]
        pa[xs] = gu[xns, xs]
        S[xs] = 1
        S[xns] = 0
        slack[xs] = 0
        _set_slack(n, gu, gv, gw, lab, slack, st, S, xns)
        queue = _q_push(n, flower, flen, queue, qstate, stack, xns)
    S[xr] = 1
    pa[xr] = pa[b]
    for i in range(pr + 1, flen[b]):
        xs = flower[b, i]
        S[xs] = -1
        _set_slack(n, gu, gv, gw, lab, slack, st, S, xs)
    st[b] = 0
    return queue


def max_weight_matching(w: np.ndarray) -> np.ndarray:
    """Maximum-weight matching of a symmetric positive int64 weight matrix."""
    w = np.ascontiguousarray(w, dtype=np.int64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("weight matrix must be square")
    if w.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return _max_weight_matching(w)
