"""End-to-end experiments: graph set-up, estimator dispatch and result records."""

from __future__ import annotations

import logging
import math
import os
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import ResultRecord
from .config import ExperimentConfig
from .graph import DecodingGraph
from .lattice import build_decoding_graph, build_lattice, code_distance
from .noise import NoiseModel
from .splitting import (UniformNoise, asymptotic_anchor, initial_failure_chain, make_ladder,
                        monte_carlo_seeded, splitting_estimate)

log = logging.getLogger(__name__)


@dataclass
class Setup:
    """Decoding graph plus everything the estimators need for one (r, target rate)."""

    graph: DecodingGraph
    seed_chain: np.ndarray
    noise_builder: Callable[[float], NoiseModel]
    distance: int
    lattice: object
    fault_dictionary: object | None = None


def graph_kind(error_kind: str) -> str:
    """Loop-like logical errors are phase flips around one defect, path-like are bit flips."""
    return {"loop": "phase", "path": "bit"}[error_kind]


def build_setup(readout: str, error_kind: str, r: int, s: int | None = None,
                b: int | None = None, t: int | None = None, p: float = 0.01,
                outer: str | None = None) -> Setup:
    """Graph for one experiment.  ``p`` only matters for noisy readout, where it
    sets the priors the decoder uses."""
    s = 4 * r if s is None else s
    b = 4 * r if b is None else b
    t = 4 * r if t is None else t
    n_def = 1 if error_kind == "loop" else 2
    lattice = build_lattice(r, s=s, b=b, n_defects=n_def)
    kind = graph_kind(error_kind)
    if readout == "noiseless":
        graph = build_decoding_graph(lattice, kind, p, outer=outer or "closed")
        seed = initial_failure_chain(graph, error_kind, lattice)
        return Setup(graph, seed, UniformNoise(graph.n_edges), 4 * r, lattice)
    from .circuit import build_3d_decoding_graph

    graph, fd = build_3d_decoding_graph(lattice, t, p, kind)
    seed = initial_failure_chain(graph)
    return Setup(graph, seed, fd.noise, code_distance(graph), lattice, fd)


def _ladder_workers(cfg: ExperimentConfig) -> int:
    # replica exchange couples all levels, so it always runs in one process
    return cfg.workers if cfg.sampler == "independent" else 1


def _checkpoint_path(out_dir: str, tag: str) -> str:
    d = os.path.join(out_dir, "checkpoints")
    os.makedirs(d, exist_ok=True)
    return os.path.join(d, f"{tag}.json")


def run_mc(cfg: ExperimentConfig, r: int, p: float, setup: Setup | None = None,
           key: tuple = ()) -> ResultRecord:
    geo = cfg.geometry(r)
    setup = setup or build_setup(cfg.readout, cfg.error_kind, r, p=p, outer=cfg.outer, **geo)
    t0 = time.time()
    noise = setup.noise_builder(p)
    res = monte_carlo_seeded(setup.graph, noise, cfg.trials, cfg.seed,
                             key=(r, int(round(p * 1e9)), *key), workers=cfg.workers)
    val = res.p_hat if res.failures else res.upper_bound
    sig = res.sigma if res.failures else math.inf
    val, sig = _per_step(cfg, r, val, sig)
    return ResultRecord("mc", cfg.error_kind, cfg.readout, p, r, val, sig, cfg.seed, 0,
                        time.time() - t0)


def _per_step(cfg: ExperimentConfig, r: int, value: float, sigma: float) -> tuple[float, float]:
    """Noisy readout reports P_L per readout cycle."""
    if cfg.readout == "noisy":
        return value / cfg.geometry(r)["t"], sigma
    return value, sigma


def run_split_up(cfg: ExperimentConfig, r: int, targets: list[float], out_dir: str) -> list[ResultRecord]:
    """One upward ladder from the start rate through every target (uniform noise)."""
    geo = cfg.geometry(r)
    setup = build_setup(cfg.readout, cfg.error_kind, r, p=max(targets), outer=cfg.outer, **geo)
    p1 = cfg.start_rate()
    top = max(targets)
    base = make_ladder(p1, top, setup.graph, noise_builder=None if cfg.readout == "noiseless"
                       else setup.noise_builder, distance=setup.distance)
    ladder = sorted(set(base) | {p for p in targets if p >= p1})
    if cfg.anchor_policy() == "asymptotic":
        anchor, a_sig, source = asymptotic_anchor(r, p1, cfg.error_kind), 0.0, "asymptotic"
    else:
        res = monte_carlo_seeded(setup.graph, setup.noise_builder(p1), cfg.trials, cfg.seed,
                                 key=(r, int(round(p1 * 1e9)), 1), workers=cfg.workers)
        if res.failures == 0:
            raise ValueError(f"no failures in the anchor run at p={p1:g}; raise trials")
        anchor, a_sig, source = res.p_hat, res.sigma, "mc"
    t0 = time.time()
    tag = f"{cfg.readout}_{cfg.error_kind}_r{r}_up_{cfg.sampler}_seed{cfg.seed}"
    res = splitting_estimate(setup.graph, ladder, anchor, cfg.M, noise_builder=setup.noise_builder,
                             seed_chain=setup.seed_chain, master_seed=cfg.seed, N=cfg.N,
                             anchor_source=source, anchor_sigma=a_sig,
                             checkpoint=_checkpoint_path(out_dir, tag), workers=_ladder_workers(cfg),
                             sampler=cfg.sampler)
    flips = sum(q.flips for q in res.rungs)
    wall = time.time() - t0
    out = []
    wanted = set(targets)
    for p, val, sig in res.levels:
        if p in wanted:
            v, s = _per_step(cfg, r, val, sig)
            out.append(ResultRecord("split-up", cfg.error_kind, cfg.readout, p, r, v, s, cfg.seed,
                                    flips, wall))
    return out


def run_split_down(cfg: ExperimentConfig, r: int, p: float, out_dir: str) -> ResultRecord:
    """Downward ladder from the junction rate to p with an MC anchor at the junction.

    The decoder uses the priors at the target rate p along the whole
    ladder, so every rung ratio refers to the same failure set.
    """
    geo = cfg.geometry(r)
    setup = build_setup(cfg.readout, cfg.error_kind, r, p=p, outer=cfg.outer, **geo)
    p_star = cfg.p_start if cfg.p_start is not None else cfg.junction()
    ladder = make_ladder(p_star, p, setup.graph, noise_builder=None if cfg.readout == "noiseless"
                         else setup.noise_builder, distance=setup.distance)
    if cfg.anchor_policy() == "asymptotic":
        anchor, a_sig, source = asymptotic_anchor(r, p_star, cfg.error_kind), 0.0, "asymptotic"
    else:
        res = monte_carlo_seeded(setup.graph, setup.noise_builder(p_star), cfg.trials, cfg.seed,
                                 key=(r, int(round(p * 1e9)), 2), workers=cfg.workers)
        if res.failures == 0:
            raise ValueError(f"no failures in the anchor run at p={p_star:g}; raise trials")
        anchor, a_sig, source = res.p_hat, res.sigma, "mc"
    t0 = time.time()
    tag = f"{cfg.readout}_{cfg.error_kind}_r{r}_down_p{p:.6g}_{cfg.sampler}_seed{cfg.seed}"
    res = splitting_estimate(setup.graph, ladder, anchor, cfg.M, noise_builder=setup.noise_builder,
                             seed_chain=setup.seed_chain, master_seed=cfg.seed, N=cfg.N,
                             anchor_source=source, anchor_sigma=a_sig,
                             checkpoint=_checkpoint_path(out_dir, tag), workers=_ladder_workers(cfg),
                             sampler=cfg.sampler)
    v, s = _per_step(cfg, r, res.estimate, res.sigma)
    return ResultRecord("split-down", cfg.error_kind, cfg.readout, p, r, v, s, cfg.seed,
                        sum(q.flips for q in res.rungs), time.time() - t0)


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> list[ResultRecord]:
    """All records requested by the config, in (r, p) order."""
    out_dir = out_dir or cfg.output_dir()
    os.makedirs(out_dir, exist_ok=True)
    p_star = cfg.junction()
    records: list[ResultRecord] = []
    for r in cfg.r:
        rates = sorted(cfg.rates)
        if cfg.method == "mc":
            mc_rates, split_rates = rates, []
        elif cfg.method in ("split-up", "split-down"):
            mc_rates, split_rates = [], rates
        else:
            mc_rates = [p for p in rates if p >= p_star]
            split_rates = [p for p in rates if p < p_star]
        for p in mc_rates:
            records.append(run_mc(cfg, r, p))
        if not split_rates:
            continue
        downward = cfg.method == "split-down" or (cfg.method == "auto" and cfg.readout == "noisy")
        if downward:
            for p in split_rates:
                records.append(run_split_down(cfg, r, p, out_dir))
        else:
            records.extend(run_split_up(cfg, r, split_rates, out_dir))
    records.sort(key=lambda q: (q.r, q.p, q.method))
    return records
