"""Direct Monte Carlo and the splitting ladder for the logical error rate.

The splitting estimate is P_L(p_t) = P_L(p_1) * prod_j R_j, where each
R_j = pi_{j+1}(F) / pi_j(F) comes from two Metropolis samples of
uncorrectable chains, one at each end of the rung.
"""

from __future__ import annotations

import json
import logging
import math
import os
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra as sp_dijkstra

from scipy.special import expit

from .bennett import (RatioEstimate, RungOverlapError, batch_variance_of_mean, bennett_from_deltas,
                      bennett_ratio)
from .decoding import PathCache, match_syndrome
from .graph import DecodingGraph, parity, syndrome_of
from .metropolis import CorrectableSeed, MetropolisState, SampleRun, run_walk
from .noise import NoiseModel, make_rng

log = logging.getLogger(__name__)

NoiseBuilder = Callable[[float], NoiseModel]


# ---------------------------------------------------------------------------
# anchors and ladders
# ---------------------------------------------------------------------------

def asymptotic_anchor(r: int, p: float, error_kind: str) -> float:
    """Leading low-p behaviour 0.5 * C(4r, 2r) * p^(2r), times r for path-like errors."""
    if error_kind not in ("loop", "path"):
        raise ValueError("error_kind must be 'loop' or 'path'")
    if p > 0.01:
        warnings.warn(f"asymptotic anchor used at p={p:g}; it is meant for p around 1e-3",
                      stacklevel=2)
    val = 0.5 * math.comb(4 * r, 2 * r) * p ** (2 * r)
    return val * r if error_kind == "path" else val


def make_ladder(p_start: float, p_target: float, graph: DecodingGraph | None = None,
                noise_builder: NoiseBuilder | None = None, distance: int | None = None,
                max_rungs: int = 10_000) -> list[float]:
    """Rates p_1 = p_start, ..., p_t = p_target with p_{j+1} = p_j * 2^(+-1/sqrt(w_j)).

    Uniform noise uses w_j = max(d/2, p_j * n) with n edges and code
    distance d; when ``noise_builder`` is given, w_j is the sum of its
    per-edge rates at p_j instead.
    """
    if not (0 < p_start < 0.5 and 0 < p_target < 0.5):
        raise ValueError("ladder endpoints must lie in (0, 1/2)")
    if p_start == p_target:
        return [float(p_start)]
    if noise_builder is None:
        if graph is None:
            raise ValueError("need a graph (uniform noise) or a noise builder")
        if distance is None:
            from .lattice import code_distance
            distance = code_distance(graph)
        n = graph.n_edges

        def weight(p):
            return max(distance / 2.0, p * n)
    else:
        def weight(p):
            return float(np.sum(noise_builder(p).rates))

    up = p_target > p_start
    rates = [float(p_start)]
    p = float(p_start)
    while len(rates) < max_rungs:
        w = weight(p)
        step = 2.0 ** (1.0 / math.sqrt(w))
        p = p * step if up else p / step
        if (up and p >= p_target) or (not up and p <= p_target):
            rates.append(float(p_target))
            return rates
        rates.append(p)
    raise ValueError("ladder exceeds the rung limit")


# ---------------------------------------------------------------------------
# seed chains
# ---------------------------------------------------------------------------

def _min_odd_closed_chain(graph: DecodingGraph) -> np.ndarray:
    """Lightest odd chain whose boundary lies in T (a minimum-weight logical chain)."""
    n, m = graph.n_vertices, graph.n_edges
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    g = graph.logical.astype(np.int64)
    w = np.maximum(graph.weights, 1e-12)
    # parity double cover: vertex (x, a) -> x + a*n; a super source joins T at parity 0
    src = n * 2
    rows = np.concatenate([u + 0 * n, u + n, v + 0 * n, v + n])
    cols = np.concatenate([v + g * n, v + (1 - g) * n, u + g * n, u + (1 - g) * n])
    ew = np.concatenate([w, w, w, w])
    eidx = np.concatenate([np.arange(m)] * 4)
    t_ids = graph.boundary_vertices
    rows = np.concatenate([rows, np.full(len(t_ids), src)])
    cols = np.concatenate([cols, t_ids])
    ew = np.concatenate([ew, np.full(len(t_ids), 1e-300)])
    eidx = np.concatenate([eidx, np.full(len(t_ids), -1)])
    N = 2 * n + 1
    key = {}
    for a, b, c, e in zip(rows, cols, ew, eidx):
        k = (int(a), int(b))
        if k not in key or c < key[k][0]:
            key[k] = (c, int(e))
    A = coo_matrix(([c for c, _ in key.values()], ([a for a, _ in key], [b for _, b in key])),
                   shape=(N, N)).tocsr()

    def walk_chain(pred, start, end):
        chain = np.zeros(m, dtype=bool)
        x = end
        while x != start:
            y = pred[x]
            e = key[(int(y), int(x))][1]
            if e >= 0:
                chain[e] ^= True
            x = y
        return chain

    best, best_chain = np.inf, None
    if len(t_ids):
        dist, pred = sp_dijkstra(A, indices=src, return_predecessors=True)
        odd = dist[t_ids + n]
        if np.isfinite(odd).any():
            k = int(np.argmin(odd))
            best, best_chain = float(odd[k]), walk_chain(pred, src, int(t_ids[k] + n))
    starts = np.unique(graph.edges[graph.logical].ravel())
    starts = starts[~graph.boundary[starts]]
    if len(starts):
        dist, pred = sp_dijkstra(A, indices=starts, return_predecessors=True)
        for i, s in enumerate(starts):
            d = dist[i, s + n]
            if d < best - 1e-12:
                best, best_chain = float(d), walk_chain(pred[i], int(s), int(s + n))
    if best_chain is None or not best_chain.any():
        raise ValueError("graph has no odd chain with boundary inside T")
    return best_chain


def initial_failure_chain(graph: DecodingGraph, error_kind: str | None = None,
                          lattice=None) -> np.ndarray:
    """Deterministic uncorrectable seed chain for the Metropolis walk.

    With a lattice: the loop around the first defect (``"loop"``) or the
    straight path between the defects (``"path"``).  Otherwise the lightest
    odd chain with empty syndrome, found on the parity double cover.
    """
    if lattice is not None and error_kind in ("loop", "path"):
        ids = lattice.defect_perimeter(0) if error_kind == "loop" else lattice.dual_logical_path()
        chain = graph.chain(ids)
    else:
        chain = _min_odd_closed_chain(graph)
    rec = match_syndrome(graph, syndrome_of(graph, chain))
    if rec.parity == parity(graph, chain):
        raise CorrectableSeed("seed chain is correctable")
    return chain


# ---------------------------------------------------------------------------
# direct Monte Carlo
# ---------------------------------------------------------------------------

@dataclass
class MCResult:
    p_hat: float
    sigma: float  # relative error; inf when there are no failures
    failures: int
    trials: int
    upper_bound: float | None = None  # 3/trials when there are no failures

    def as_dict(self) -> dict:
        return asdict(self)


def monte_carlo_estimate(graph: DecodingGraph, noise: NoiseModel, trials: int,
                         rng: np.random.Generator | None = None, batch: int = 1024,
                         progress: Callable[[int, int], None] | None = None) -> MCResult:
    """Fraction of independently sampled chains that the decoder gets wrong."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if noise.n_edges != graph.n_edges:
        raise ValueError("noise model and graph disagree on the edge count")
    rng = rng if rng is not None else np.random.default_rng()
    fails = 0
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        chains = noise.sample(rng, k)
        for ch in chains:
            rec = match_syndrome(graph, syndrome_of(graph, ch))
            fails += rec.parity != parity(graph, ch)
        done += k
        if progress is not None:
            progress(done, fails)
    if fails == 0:
        return MCResult(0.0, math.inf, 0, trials, 3.0 / trials)
    p_hat = fails / trials
    sigma = math.sqrt(p_hat * (1 - p_hat) / trials) / p_hat
    return MCResult(p_hat, sigma, fails, trials)


def _mc_block(args) -> int:
    graph, noise, n, master_seed, key = args
    rng = make_rng(master_seed, *key)
    fails = 0
    for ch in noise.sample(rng, n):
        rec = match_syndrome(graph, syndrome_of(graph, ch))
        fails += rec.parity != parity(graph, ch)
    return int(fails)


def monte_carlo_seeded(graph: DecodingGraph, noise: NoiseModel, trials: int, master_seed: int,
                       key: Sequence[int] = (), block: int = 1000, workers: int = 1) -> MCResult:
    """Monte Carlo in fixed blocks with streams (master seed, *key, block index).

    The answer depends only on (trials, master seed, key, block), not on the
    number of worker processes.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sizes = [block] * (trials // block) + ([trials % block] if trials % block else [])
    jobs = [(graph, noise, n, master_seed, (*key, i)) for i, n in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            fails = sum(pool.map(_mc_block, jobs))
    else:
        fails = sum(_mc_block(j) for j in jobs)
    if fails == 0:
        return MCResult(0.0, math.inf, 0, trials, 3.0 / trials)
    p_hat = fails / trials
    return MCResult(p_hat, math.sqrt(p_hat * (1 - p_hat) / trials) / p_hat, fails, trials)


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------

@dataclass
class RungRecord:
    index: int
    p_lower: float
    p_upper: float
    ratio: float
    C: float
    sigma: float
    n_lower: int
    n_upper: int
    flips: int
    steps: int
    acceptance: float
    converged: bool | None = None
    swap_acceptance: float | None = None  # replica exchange only


@dataclass
class SplittingResult:
    p_target: float
    estimate: float
    sigma: float  # relative error
    anchor: float
    anchor_source: str
    rates: list
    rungs: list = field(default_factory=list)
    levels: list = field(default_factory=list)  # (p, running estimate, running sigma)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["rungs"] = [asdict(r) if not isinstance(r, dict) else r for r in self.rungs]
        return d


def _sample_level(graph, noise, seed_chain, M, thin, burn, rng) -> tuple[SampleRun, MetropolisState]:
    state = MetropolisState(graph, noise, seed_chain, rng)
    run = run_walk(state, M, thin, burn)
    return run, state


def rung_ratio(graph: DecodingGraph, noise_lo: NoiseModel, noise_hi: NoiseModel,
               seed_lo: np.ndarray, seed_hi: np.ndarray, M: int,
               rng_lo: np.random.Generator, rng_hi: np.random.Generator,
               thin: int | None = None, burn_frac: float = 0.1,
               check_convergence: bool = False, tolerance: float | None = None,
               N: int | None = None):
    """Bennett ratio for one rung; optionally repeats with 2M steps as a check.

    Returns (estimate, runs, states, converged).  With the check on, the
    walks are extended to 2M steps, the burn-in is recomputed as burn_frac
    of the longer walk, and the two estimates must agree within
    ``tolerance`` (default: 3 combined sigmas) in log space.
    """
    thin = graph.n_edges if thin is None else int(thin)
    burn = int(burn_frac * M)
    run_lo, st_lo = _sample_level(graph, noise_lo, seed_lo, M, thin, burn, rng_lo)
    run_hi, st_hi = _sample_level(graph, noise_hi, seed_hi, M, thin, burn, rng_hi)
    est = bennett_ratio(run_lo.records, run_hi.records, noise_lo, noise_hi, N)
    converged = None
    if check_convergence:
        run_walk(st_lo, M, thin, burn, run_lo)
        run_walk(st_hi, M, thin, burn, run_hi)
        burn2 = int(burn_frac * 2 * M)
        skip = max(0, (burn2 - burn) // thin)
        est2 = bennett_ratio(run_lo.records[skip:], run_hi.records[skip:], noise_lo, noise_hi, N)
        tol = tolerance if tolerance is not None else 3 * math.hypot(est.sigma, est2.sigma)
        converged = abs(est.log_ratio - est2.log_ratio) <= tol
        est = est2
    return est, (run_lo, run_hi), (st_lo, st_hi), converged


def _load_checkpoint(path):
    if path and os.path.exists(path):
        with open(path) as fh:
            return json.load(fh)
    return None


def _save_checkpoint(path, payload):
    if not path:
        return
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=1)
    os.replace(tmp, path)


class UniformNoise:
    """Picklable builder of uniform noise on a fixed number of edges."""

    def __init__(self, n_edges: int):
        self.n_edges = int(n_edges)

    def __call__(self, p: float) -> NoiseModel:
        return NoiseModel.uniform(self.n_edges, p)


def _rung_job(args) -> tuple[dict, np.ndarray]:
    (graph, builder, j, p_lo, p_hi, seed_lo, seed_hi, M, master_seed, thin, burn_frac,
     check, N) = args
    nl, nh = builder(p_lo), builder(p_hi)
    try:
        est, runs, states, conv = rung_ratio(
            graph, nl, nh, seed_lo, seed_hi, M, make_rng(master_seed, j, 0),
            make_rng(master_seed, j, 1), thin=thin, burn_frac=burn_frac,
            check_convergence=check, N=N)
    except RungOverlapError as exc:
        raise RungOverlapError(f"rung {j} ({p_lo:g} -> {p_hi:g}): {exc}", rung=j) from exc
    flips = runs[0].flips + runs[1].flips
    steps = runs[0].steps + runs[1].steps
    rec = RungRecord(j, p_lo, p_hi, est.ratio, est.C, est.sigma, est.n_lower, est.n_upper,
                     flips, steps, flips / steps if steps else 0.0, conv)
    return asdict(rec), states[1].chain.copy()


def splitting_estimate(graph: DecodingGraph, ladder: Sequence[float], anchor: float,
                       M: int | Sequence[int], *, noise_builder: NoiseBuilder | None = None,
                       seed_chain: np.ndarray | None = None, master_seed: int = 0,
                       anchor_source: str = "asymptotic", anchor_sigma: float = 0.0,
                       thin: int | None = None, burn_frac: float = 0.1,
                       warm_start: bool = False, check_convergence: bool = False,
                       checkpoint: str | None = None, workers: int = 1, N: int | None = None,
                       on_rung: Callable[[RungRecord], None] | None = None,
                       sampler: str = "independent", swaps_per_sweep: int = 4) -> SplittingResult:
    """P_L at ladder[-1] as anchor * prod_j R_j with rung errors added in quadrature.

    ``M`` is the Metropolis step budget per chain, either one number or one
    per rung.  Each rung runs two fresh chains, both started from
    ``seed_chain`` (or the end state of the previous rung's upper chain when
    ``warm_start`` is set), with streams keyed by (master seed, rung, side),
    so results do not depend on ``workers``.  The decoding graph stays
    fixed; only the sampling distribution moves along the ladder.  A
    checkpoint file, when given, is rewritten after each rung and reused on
    restart.  ``levels`` in the result holds the running estimate at every
    ladder rate.

    ``sampler="exchange"`` hands the ladder to :func:`exchange_estimate`
    instead (one walk per level with replica swaps between neighbours).
    """
    if sampler == "exchange":
        if warm_start or check_convergence or workers > 1:
            raise ValueError("the exchange sampler runs all levels in one process "
                             "without warm start or convergence reruns")
        return exchange_estimate(graph, ladder, anchor, M, noise_builder=noise_builder,
                                 seed_chain=seed_chain, master_seed=master_seed,
                                 anchor_source=anchor_source, anchor_sigma=anchor_sigma,
                                 thin=thin, burn_frac=burn_frac, swaps_per_sweep=swaps_per_sweep,
                                 checkpoint=checkpoint, N=N, on_rung=on_rung)
    if sampler != "independent":
        raise ValueError(f"unknown sampler {sampler!r}")
    rates = [float(p) for p in ladder]
    _check_ladder(rates)
    if warm_start and workers > 1:
        raise ValueError("warm start chains rungs together; use a single worker")
    builder = noise_builder if noise_builder is not None else UniformNoise(graph.n_edges)
    if seed_chain is None:
        seed_chain = initial_failure_chain(graph)
    n_rungs = len(rates) - 1
    budgets = [int(M)] * n_rungs if np.ndim(M) == 0 else [int(x) for x in M]
    if len(budgets) != n_rungs:
        raise ValueError("need one step budget per rung")

    state = _load_checkpoint(checkpoint)
    done: dict[int, dict] = {}
    if state is not None:
        if (state.get("sampler", "independent") != "independent" or state.get("rates") != rates
                or state.get("master_seed") != master_seed):
            raise ValueError("checkpoint belongs to a different run")
        done = {int(d["index"]): d for d in state["rungs"]}

    def job(j, seed):
        return (graph, builder, j, rates[j], rates[j + 1], seed, seed, budgets[j], master_seed,
                thin, burn_frac, check_convergence, N)

    def record(d):
        done[int(d["index"])] = d
        _save_checkpoint(checkpoint, dict(rates=rates, master_seed=master_seed,
                                          rungs=[done[k] for k in sorted(done)]))
        log.info("rung %d: p %.5g -> %.5g  R=%.4g  sigma=%.3f  acc=%.3g", d["index"],
                 d["p_lower"], d["p_upper"], d["ratio"], d["sigma"], d["acceptance"])

    todo = [j for j in range(n_rungs) if j not in done]
    if workers > 1 and len(todo) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            for d, _end in pool.map(_rung_job, [job(j, seed_chain) for j in todo]):
                record(d)
    else:
        prev_end = None
        for j in todo:
            seed = prev_end if (warm_start and prev_end is not None) else seed_chain
            d, prev_end = _rung_job(job(j, seed))
            record(d)

    result = SplittingResult(rates[-1], float(anchor), 0.0, float(anchor), anchor_source, rates)
    log_total = math.log(anchor) if anchor > 0 else -math.inf
    var = anchor_sigma ** 2
    result.levels.append((rates[0], float(anchor), math.sqrt(var)))
    for j in range(n_rungs):
        rec = RungRecord(**done[j])
        if on_rung is not None:
            on_rung(rec)
        result.rungs.append(rec)
        log_total += math.log(rec.ratio)
        var += rec.sigma ** 2
        result.levels.append((rates[j + 1], math.exp(log_total), math.sqrt(var)))
    result.estimate = math.exp(log_total)
    result.sigma = math.sqrt(var)
    return result


def _check_ladder(rates):
    if any(not (0 < p < 0.5) for p in rates):
        raise ValueError("ladder rates must lie in (0, 1/2)")
    diffs = np.diff(rates)
    if len(diffs) and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("ladder must be strictly monotone")


def exchange_estimate(graph: DecodingGraph, ladder: Sequence[float], anchor: float, M: int, *,
                      noise_builder: NoiseBuilder | None = None,
                      seed_chain: np.ndarray | None = None, master_seed: int = 0,
                      anchor_source: str = "asymptotic", anchor_sigma: float = 0.0,
                      thin: int | None = None, burn_frac: float = 0.1, swaps_per_sweep: int = 4,
                      checkpoint: str | None = None, N: int | None = None, n_batches: int = 20,
                      on_rung: Callable[[RungRecord], None] | None = None) -> SplittingResult:
    """Splitting estimate with one walk per ladder level and replica swaps.

    All walks sample the same failure set F at different rates, so two
    neighbouring walks may exchange their chains; the swap is accepted with
    the Metropolis probability for the product distribution.  This lets
    failure configurations found at high rates (where the walk crosses
    between different failing cycles easily) migrate to the low rates,
    where a single-flip walk started on the minimal cycle can stay stuck.

    The rung ratios are the usual Bennett estimates between the samples of
    levels j and j+1.  Because levels share walks, rung errors are
    correlated; the returned sigma (and the running sigma in ``levels``)
    comes from batch means of the linearized log-product over all rungs at
    once.  ``M`` is the step budget of every level.  The checkpoint only
    stores the finished result.
    """
    rates = [float(p) for p in ladder]
    _check_ladder(rates)
    if not np.ndim(M) == 0:
        raise ValueError("the exchange sampler takes a single step budget")
    M = int(M)
    builder = noise_builder if noise_builder is not None else UniformNoise(graph.n_edges)
    if seed_chain is None:
        seed_chain = initial_failure_chain(graph)
    state = _load_checkpoint(checkpoint)
    if state is not None:
        if (state.get("sampler") != "exchange" or state.get("rates") != rates
                or state.get("master_seed") != master_seed):
            raise ValueError("checkpoint belongs to a different run")
        result = SplittingResult(**{k: state["result"][k] for k in
                                    ("p_target", "estimate", "sigma", "anchor", "anchor_source",
                                     "rates")})
        result.rungs = [RungRecord(**d) for d in state["result"]["rungs"]]
        result.levels = [tuple(x) for x in state["result"]["levels"]]
        for rec in result.rungs:
            if on_rung is not None:
                on_rung(rec)
        return result

    L = len(rates)
    thin = graph.n_edges if thin is None else int(thin)
    burn = int(burn_frac * M)
    chunk = max(1, thin // max(1, int(swaps_per_sweep)))
    noises = [builder(p) for p in rates]
    walkers = [MetropolisState(graph, noises[l], seed_chain, make_rng(master_seed, l, 2))
               for l in range(L)]
    at = list(range(L))  # at[level] = index of the walker currently at that level
    runs = [SampleRun(burn_in=burn, thin=thin) for _ in range(L)]
    swap_rng = make_rng(master_seed, 0, 3)
    dlam = [noises[l].log_odds - noises[l + 1].log_odds for l in range(L - 1)]
    tried = np.zeros(max(L - 1, 0))
    swapped = np.zeros(max(L - 1, 0))
    done, parity_turn = 0, 0
    while done < M:
        step = min(chunk, M - done)
        for l in range(L):
            run_walk(walkers[at[l]], step, thin, burn, runs[l])
        done += step
        for l in range(parity_turn, L - 1, 2):
            a, b = walkers[at[l]], walkers[at[l + 1]]
            log_acc = float(dlam[l][b.chain].sum() - dlam[l][a.chain].sum())
            tried[l] += 1
            if log_acc >= 0 or swap_rng.random() < math.exp(log_acc):
                swapped[l] += 1
                at[l], at[l + 1] = at[l + 1], at[l]
                a.set_noise(noises[l + 1])
                b.set_noise(noises[l])
        parity_turn ^= 1

    records = [r.records[-N:] if N is not None else r.records for r in runs]
    result = SplittingResult(rates[-1], float(anchor), 0.0, float(anchor), anchor_source, rates)
    log_total = math.log(anchor)
    result.levels.append((rates[0], float(anchor), float(anchor_sigma)))
    n_rec = min((len(x) for x in records), default=0)
    z = np.zeros(n_rec)
    for j in range(L - 1):
        lo, hi = noises[j], noises[j + 1]
        da = hi.log_probabilities(records[j]) - lo.log_probabilities(records[j])
        db = hi.log_probabilities(records[j + 1]) - lo.log_probabilities(records[j + 1])
        try:
            est = bennett_from_deltas(da, db, n_batches)
        except RungOverlapError as exc:
            raise RungOverlapError(f"rung {j} ({rates[j]:g} -> {rates[j + 1]:g}): {exc}",
                                   rung=j) from exc
        log_c = math.log(est.C)
        ga, gb = expit(da - log_c), expit(log_c - db)
        z += ga[-n_rec:] / ga.mean() - gb[-n_rec:] / gb.mean()
        var = batch_variance_of_mean(z, n_batches) + anchor_sigma ** 2
        steps = runs[j].steps + runs[j + 1].steps
        flips = runs[j].flips + runs[j + 1].flips
        rec = RungRecord(j, rates[j], rates[j + 1], est.ratio, est.C, est.sigma, est.n_lower,
                         est.n_upper, flips, steps, flips / steps if steps else 0.0, None,
                         float(swapped[j] / tried[j]) if tried[j] else 0.0)
        log.info("rung %d: p %.5g -> %.5g  R=%.4g  swap acc=%.2f", j, rates[j], rates[j + 1],
                 est.ratio, rec.swap_acceptance)
        if on_rung is not None:
            on_rung(rec)
        result.rungs.append(rec)
        log_total += est.log_ratio
        result.levels.append((rates[j + 1], math.exp(log_total), math.sqrt(var)))
    result.estimate = math.exp(log_total)
    result.sigma = result.levels[-1][2]
    _save_checkpoint(checkpoint, dict(sampler="exchange", rates=rates, master_seed=master_seed,
                                      result=result.as_dict()))
    return result


def exact_failure_probability(graph: DecodingGraph, noise: NoiseModel,
                              failures: np.ndarray | None = None) -> float:
    """pi(F) by enumerating all chains (small graphs only)."""
    from .metropolis import enumerate_failures

    fail = enumerate_failures(graph) if failures is None else failures
    states = np.flatnonzero(fail)
    n = graph.n_edges
    bits = ((states[:, None] >> np.arange(n)) & 1).astype(float)
    lp = noise.log_empty + bits @ noise.log_odds
    return float(np.exp(lp).sum())
