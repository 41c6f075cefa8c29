"""Metropolis walk over uncorrectable error chains.

One step: pick an edge uniformly, accept the flip with probability
min(1, pi(E')/pi(E)), and keep it only if E' is still uncorrectable.
Membership is tested with the decoder only after the acceptance bit is 1.

:func:`sample_failures` simulates the same Markov chain but skips the
proposals whose acceptance bit is 0.  From state E the bit is 1 with
probability A = (|E| + sum over e not in E of r(e)) / n, r = p / (1 - p),
so the number of steps to the next such proposal is geometric with
parameter A and the proposed edge is drawn with weight 1 (e in E) or r(e)
(e not in E).  The visited states, step by step, have exactly the law of
the literal procedure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decoding import PathCache, match_syndrome
from .graph import DecodingGraph, parity, syndrome_of
from .noise import NoiseModel


class CorrectableSeed(ValueError):
    """The starting chain of a walk must be uncorrectable."""


class MetropolisState:
    """Current chain, its syndrome and path cache, and step counters."""

    def __init__(self, graph: DecodingGraph, noise: NoiseModel, chain, rng: np.random.Generator):
        if noise.n_edges != graph.n_edges:
            raise ValueError("noise model and graph disagree on the edge count")
        self.graph = graph
        self.noise = noise
        self.rng = rng
        chain = np.asarray(chain, dtype=bool).copy()
        self.chain = chain
        self.parity = parity(graph, chain)
        self.syndrome = set(int(v) for v in syndrome_of(graph, chain))
        self.cache = PathCache(graph, self.syndrome)
        self.log_prob = noise.log_probability(chain)
        self.steps = 0
        self.tests = 0
        self.flips = 0
        self._lam = noise.log_odds
        self._ratio = np.exp(np.minimum(self._lam, 0.0))  # r(e) for e not in E
        self._gamma = graph.logical
        self._edges = graph.edges
        self._tmask = graph.boundary
        if not self.failing():
            raise CorrectableSeed("initial chain is correctable")
        self._members = list(np.flatnonzero(chain))
        self._where = {int(e): i for i, e in enumerate(self._members)}
        self._cum = np.cumsum(self._ratio)
        self._r_out = float(self._ratio.sum() - self._ratio[chain].sum())
        self._snapshot: np.ndarray | None = None

    # -- membership ----------------------------------------------------------
    def failing(self, syndrome=None, par=None) -> bool:
        syndrome = self.syndrome if syndrome is None else syndrome
        par = self.parity if par is None else par
        rec = match_syndrome(self.graph, sorted(syndrome), self.cache)
        return rec.parity != par

    def _endpoint_toggle(self, e: int) -> tuple[list[int], list[int]]:
        removed, added = [], []
        for v in self._edges[e]:
            v = int(v)
            if self._tmask[v]:
                continue
            if v in self.syndrome:
                removed.append(v)
            else:
                added.append(v)
        return removed, added

    def try_flip(self, e: int) -> bool:
        """Flip edge e if the result stays uncorrectable; returns whether it moved."""
        self.tests += 1
        removed, added = self._endpoint_toggle(e)
        new_syn = (self.syndrome - set(removed)) | set(added)
        self.cache.update(removed, added)
        new_par = self.parity ^ int(self._gamma[e])
        rec = match_syndrome(self.graph, sorted(new_syn), self.cache)
        if rec.parity == new_par:
            self.cache.update(added, removed)
            return False
        self.syndrome = new_syn
        self.parity = new_par
        was_in = bool(self.chain[e])
        self.chain[e] = not was_in
        self.log_prob += -self._lam[e] if was_in else self._lam[e]
        if was_in:
            i = self._where.pop(e)
            last = self._members.pop()
            if i < len(self._members):
                self._members[i] = last
                self._where[int(last)] = i
            self._r_out += self._ratio[e]
        else:
            self._where[e] = len(self._members)
            self._members.append(e)
            self._r_out -= self._ratio[e]
        self.flips += 1
        self._snapshot = None
        return True

    def snapshot(self) -> np.ndarray:
        """Sorted edge ids of the current chain (shared until the chain changes)."""
        if self._snapshot is None:
            self._snapshot = np.flatnonzero(self.chain)
            self._snapshot.setflags(write=False)
        return self._snapshot

    # -- the literal step ------------------------------------------------------
    def step(self) -> bool:
        n = self.graph.n_edges
        e = int(self.rng.integers(n))
        self.steps += 1
        q = 1.0 if self.chain[e] else float(self._ratio[e])
        if self.rng.random() >= q:
            return False
        return self.try_flip(e)

    # -- the equivalent skip-ahead form ----------------------------------------
    def _bit_one_rate(self) -> float:
        return (len(self._members) + max(self._r_out, 0.0)) / self.graph.n_edges

    def _draw_proposal(self) -> int:
        k = len(self._members)
        total = k + max(self._r_out, 0.0)
        if self.rng.random() * total < k:
            return int(self._members[int(self.rng.integers(k))])
        while True:
            u = self.rng.random() * self._cum[-1]
            e = int(np.searchsorted(self._cum, u, side="right"))
            e = min(e, len(self._cum) - 1)
            if not self.chain[e]:
                return e

    def refresh(self) -> None:
        """Recompute running sums that accumulate rounding error."""
        self._r_out = float(self._ratio.sum() - self._ratio[self.chain].sum())
        self.log_prob = self.noise.log_probability(self.chain)

    def set_noise(self, noise: NoiseModel) -> None:
        """Move the walk to another noise level on the same graph (replica exchange).

        The failure set does not depend on the noise, so the current chain
        stays valid; only the proposal weights change.
        """
        if noise.n_edges != self.graph.n_edges:
            raise ValueError("noise model and graph disagree on the edge count")
        self.noise = noise
        self._lam = noise.log_odds
        self._ratio = np.exp(np.minimum(self._lam, 0.0))
        self._cum = np.cumsum(self._ratio)
        self.refresh()


def metropolis_step(state: MetropolisState) -> MetropolisState:
    state.step()
    return state


@dataclass
class SampleRun:
    """Recorded chains (edge-id arrays) and walk statistics."""

    records: list = field(default_factory=list)
    steps: int = 0
    tests: int = 0
    flips: int = 0
    burn_in: int = 0
    thin: int = 1

    @property
    def acceptance(self) -> float:
        return self.flips / self.steps if self.steps else 0.0


def run_walk(state: MetropolisState, n_steps: int, thin: int, burn_in: int,
             run: SampleRun | None = None, on_record=None) -> SampleRun:
    """Advance the walk by ``n_steps`` steps, recording at multiples of ``thin``.

    Step counts are absolute across calls, so a run can be extended: the
    record times are ``burn_in + k*thin`` for k >= 1.
    """
    run = run or SampleRun(burn_in=burn_in, thin=thin)
    end = state.steps + int(n_steps)
    t = state.steps
    flips0, tests0 = state.flips, state.tests

    def next_record(after: int) -> int:
        if after < burn_in:
            return burn_in + thin
        k = (after - burn_in) // thin + 1
        return burn_in + k * thin

    nxt = next_record(t)
    refresh_every = 4096
    events = 0
    while t < end:
        a = state._bit_one_rate()
        gap = int(state.rng.geometric(a)) if a > 0 else end - t + 1
        t_event = t + gap
        # states X_t .. X_{t_event - 1} all equal the current chain
        while nxt < t_event and nxt <= end:
            snap = state.snapshot()
            run.records.append(snap)
            if on_record is not None:
                on_record(snap)
            nxt += thin
        if t_event > end:
            t = end
            break
        state.try_flip(state._draw_proposal())
        t = t_event
        events += 1
        if events % refresh_every == 0:
            state.refresh()
        if nxt == t_event and nxt <= end:
            snap = state.snapshot()
            run.records.append(snap)
            if on_record is not None:
                on_record(snap)
            nxt += thin
    state.steps = end
    run.steps += int(n_steps)
    run.flips += state.flips - flips0
    run.tests += state.tests - tests0
    return run


def sample_failures(graph: DecodingGraph, noise: NoiseModel, E0, M: int,
                    thin: int | None = None, rng: np.random.Generator | None = None,
                    burn_frac: float = 0.1) -> SampleRun:
    """Record every ``thin``-th chain of an M-step walk after a burn-in of burn_frac*M."""
    rng = rng if rng is not None else np.random.default_rng()
    thin = graph.n_edges if thin is None else int(thin)
    if M <= 0:
        return SampleRun(thin=thin)
    state = MetropolisState(graph, noise, E0, rng)
    burn = int(burn_frac * M)
    return run_walk(state, M, thin, burn)


# ---------------------------------------------------------------------------
# exact transition matrix (small graphs)
# ---------------------------------------------------------------------------

def enumerate_failures(graph: DecodingGraph) -> np.ndarray:
    """Boolean mask over all 2^n chains (bit i of the index is edge i) marking F."""
    n = graph.n_edges
    if n > 20:
        raise ValueError("too many edges to enumerate")
    fail = np.zeros(1 << n, dtype=bool)
    cache = PathCache(graph)
    bits = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(bool)
    for idx in range(1 << n):
        ch = bits[idx]
        rec = match_syndrome(graph, syndrome_of(graph, ch), cache)
        fail[idx] = rec.parity != parity(graph, ch)
    return fail


def transition_matrix(graph: DecodingGraph, noise: NoiseModel,
                      failures: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Exact step kernel restricted to F, built from the step definition.

    Returns (P, states) where states lists the chain indices in F.
    """
    n = graph.n_edges
    fail = enumerate_failures(graph) if failures is None else failures
    states = np.flatnonzero(fail)
    pos = {int(s): i for i, s in enumerate(states)}
    lam = noise.log_odds
    P = np.zeros((len(states), len(states)))
    for i, s in enumerate(states):
        s = int(s)
        stay = 1.0
        for e in range(n):
            t = s ^ (1 << e)
            inside = (s >> e) & 1
            q = min(1.0, float(np.exp(-lam[e] if inside else lam[e])))
            if fail[t]:
                pr = q / n
                P[i, pos[t]] += pr
                stay -= pr
        P[i, i] += stay
    return P, states


def conditional_distribution(noise: NoiseModel, states: np.ndarray) -> np.ndarray:
    """pi(E | F) over enumerated chain indices."""
    n = noise.n_edges
    bits = ((states[:, None] >> np.arange(n)) & 1).astype(bool)
    lp = noise.log_empty + bits.astype(float) @ noise.log_odds
    w = np.exp(lp - lp.max())
    return w / w.sum()
