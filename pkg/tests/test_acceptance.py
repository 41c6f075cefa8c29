"""Acceptance criteria 1-10.

Each test records one PASS/FAIL line; the lines are printed together at the
end of the pytest run (see conftest.py) and also when this file is run as a
script.  The statistical budgets below are sized for a single desktop core:
the whole file takes roughly 25 minutes.
"""

from __future__ import annotations

import math
import os
import sys
import time

import numpy as np
import pytest

from surfsplit.analysis import fit_ansatz, load_reference_coefficients, synthetic_points
from surfsplit.bennett import exact_ratio_identity, g_fermi
from surfsplit.circuit import (build_3d_decoding_graph, build_readout_circuit, cycle_events,
                               propagate_event, vertex_degrees)
from surfsplit.correctability import brute_force_min_chains
from surfsplit.decoding import solve_problem1, solve_problem2
from surfsplit.experiment import build_setup
from surfsplit.graph import boundary_of, load_graph, parity, syndrome_of
from surfsplit.instances import annulus_graph, degenerate_syndrome_graph, random_graph, strip_graph
from surfsplit.lattice import build_decoding_graph, build_lattice
from surfsplit.metropolis import conditional_distribution, enumerate_failures, transition_matrix
from surfsplit.noise import NoiseModel, make_rng
from surfsplit.splitting import (asymptotic_anchor, exact_failure_probability, make_ladder,
                                 monte_carlo_seeded, rung_ratio, splitting_estimate)

GOLDEN = os.path.join(os.path.dirname(__file__), "data", "golden_bit_r2_s5_b3_t3.txt")
REPORT: list[str] = []


def record(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    REPORT.append(line)
    print(line, flush=True)
    assert ok, line


# ---------------------------------------------------------------------------
# 1. decoder versus brute force
# ---------------------------------------------------------------------------

def _min_weight(g, S, T):
    return g.chain_weight(brute_force_min_chains(g, S, T)[0])


def test_criterion_01_decoder_oracle():
    rng = np.random.default_rng(101)
    t0 = time.time()
    worst = 0.0
    for _ in range(500):
        g = random_graph(rng, max_edges=12)
        E = rng.random(g.n_edges) < 0.4
        # problem 1: T empty, S is the full boundary
        S1 = boundary_of(g, E)
        R1 = solve_problem1(g, S1)
        assert np.array_equal(boundary_of(g, R1), S1)
        ref = _min_weight(g, S1, [])
        worst = max(worst, abs(g.chain_weight(R1) - ref) / max(1.0, ref))
        # problem 2: the graph's own T half of the time, else a random vertex subset
        if rng.random() < 0.5 and g.boundary.any():
            T = list(g.boundary_vertices)
        else:
            T = list(np.flatnonzero(rng.random(g.n_vertices) < 0.3))
        tmask = np.zeros(g.n_vertices, dtype=bool)
        tmask[T] = True
        bm = np.zeros(g.n_vertices, dtype=bool)
        bm[boundary_of(g, E)] = True
        S2 = np.flatnonzero(bm & ~tmask)
        R2 = solve_problem2(g, S2, T)
        rb = np.zeros(g.n_vertices, dtype=bool)
        rb[boundary_of(g, R2)] = True
        assert np.array_equal(np.flatnonzero(rb & ~tmask), S2)
        ref = _min_weight(g, S2, T)
        worst = max(worst, abs(g.chain_weight(R2) - ref) / max(1.0, ref))
    dt = time.time() - t0
    record(1, worst <= 1e-9 and dt < 60,
           f"500 graphs, max relative weight gap {worst:.1e}, {dt:.1f} s")


# ---------------------------------------------------------------------------
# 2. degenerate syndrome count
# ---------------------------------------------------------------------------

def test_criterion_02_degenerate_count():
    g, S = degenerate_syndrome_graph()
    chains = brute_force_min_chains(g, S)
    pars = [parity(g, c) for c in chains]
    lengths = {int(c.sum()) for c in chains}
    even, odd = pars.count(0), pars.count(1)
    record(2, even == 1 and odd == 400 and lengths == {12},
           f"{even} even and {odd} odd minimum chains, lengths {sorted(lengths)}")


# ---------------------------------------------------------------------------
# 3. detailed balance and stationarity
# ---------------------------------------------------------------------------

def test_criterion_03_detailed_balance():
    worst_db, worst_st = 0.0, 0.0
    for k, make in enumerate((annulus_graph, strip_graph)):
        g = make()
        assert g.n_edges <= 14
        nm = NoiseModel(np.random.default_rng(30 + k).uniform(0.03, 0.4, g.n_edges))
        P, states = transition_matrix(g, nm)
        pi = conditional_distribution(nm, states)
        flux = pi[:, None] * P
        worst_db = max(worst_db, float(np.abs(flux - flux.T).max()))
        worst_st = max(worst_st, float(np.abs(pi @ P - pi).max()))
    record(3, worst_db <= 1e-12 and worst_st <= 1e-10,
           f"max |pi P - (pi P)^T| = {worst_db:.1e}, max |pi P - pi| = {worst_st:.1e}")


# ---------------------------------------------------------------------------
# 4. Bennett exactness and calibration
# ---------------------------------------------------------------------------

def test_criterion_04_bennett():
    g = strip_graph()
    p_lo, p_hi = 0.04, 0.08
    lo, hi = NoiseModel.uniform(g.n_edges, p_lo), NoiseModel.uniform(g.n_edges, p_hi)
    fail = enumerate_failures(g)
    states = np.flatnonzero(fail)
    bits = ((states[:, None] >> np.arange(g.n_edges)) & 1).astype(float)
    lj = lo.log_empty + bits @ lo.log_odds
    lj1 = hi.log_empty + bits @ hi.log_odds
    exact = exact_failure_probability(g, hi, fail) / exact_failure_probability(g, lo, fail)
    rng = np.random.default_rng(404)
    cs = np.exp(rng.uniform(-5, 5, 10))
    worst = max(abs(exact_ratio_identity(lj, lj1, C, g_fermi) / exact - 1) for C in cs)

    seed = build_seed(g)
    inside = 0
    for k in range(100):
        est, _, _, _ = rung_ratio(g, lo, hi, seed, seed, 20000, make_rng(4, k, 0),
                                  make_rng(4, k, 1))
        inside += abs(est.log_ratio - math.log(exact)) <= 3 * est.sigma
    record(4, worst <= 1e-12 and inside >= 95,
           f"identity max rel error {worst:.1e} over 10 C values; "
           f"{inside}/100 sampled ratios within 3 sigma")


def build_seed(g):
    from surfsplit.splitting import initial_failure_chain

    return initial_failure_chain(g)


# ---------------------------------------------------------------------------
# 5 and 6. the noiseless r=2 loop ladder
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def loop_ladder():
    setup = build_setup("noiseless", "loop", 2)
    ladder = make_ladder(0.001, 0.05, setup.graph, distance=setup.distance)
    anchor = asymptotic_anchor(2, 0.001, "loop")
    t0 = time.time()
    # Failing configurations come in modes (which odd cycle around the defect
    # carries the failure) that single-flip walks cross only slowly; fresh
    # chains per rung started on the minimal cycle came out low by a factor
    # ~2 even with 10x longer chains.  Replica swaps between the ladder levels fix that.
    res = splitting_estimate(setup.graph, ladder, anchor, 540000, noise_builder=setup.noise_builder,
                             seed_chain=setup.seed_chain, master_seed=55, sampler="exchange")
    return setup, res, time.time() - t0


def test_criterion_05_junction(loop_ladder):
    setup, res, dt = loop_ladder
    t0 = time.time()
    mc = monte_carlo_seeded(setup.graph, setup.noise_builder(0.05), 100_000, 56)
    dt_mc = time.time() - t0
    z = abs(math.log(res.estimate / mc.p_hat)) / math.hypot(res.sigma, mc.sigma)
    record(5, mc.failures > 0 and z <= 3,
           f"split {res.estimate:.3e} (+-{res.sigma:.0%}, {len(res.rungs)} rungs, {dt:.0f} s) vs "
           f"MC {mc.p_hat:.3e} (+-{mc.sigma:.0%}, {mc.failures} failures, {dt_mc:.0f} s); "
           f"|z| = {z:.2f}")


def test_criterion_06_low_p_slope(loop_ladder):
    _, res, _ = loop_ladder
    pts = [(p, v) for p, v, _ in res.levels if 0.001 <= p <= 0.005 + 1e-12]
    x = np.log([p for p, _ in pts])
    y = np.log([v for _, v in pts])
    slope = float(np.polyfit(x, y, 1)[0])
    record(6, abs(slope - 4) <= 0.3,
           f"slope of ln P_L vs ln p over {len(pts)} levels in [0.1%, 0.5%] = {slope:.3f}")


# ---------------------------------------------------------------------------
# 7. threshold sanity
# ---------------------------------------------------------------------------

def test_criterion_07_threshold_ordering():
    budgets = {(2, 0.06): 20000, (3, 0.06): 4000, (2, 0.12): 3000, (3, 0.12): 1500}
    est = {}
    for r in (2, 3):
        setup = build_setup("noiseless", "loop", r)
        for p in (0.06, 0.12):
            res = monte_carlo_seeded(setup.graph, setup.noise_builder(p), budgets[r, p], 70 + r,
                                     key=(int(p * 1000),))
            est[r, p] = res
    below = est[3, 0.06].p_hat < est[2, 0.06].p_hat
    above = est[3, 0.12].p_hat >= est[2, 0.12].p_hat
    record(7, below and above,
           f"p=6%: r2 {est[2, 0.06].p_hat:.2e} ({est[2, 0.06].failures}) "
           f"r3 {est[3, 0.06].p_hat:.2e} ({est[3, 0.06].failures}); "
           f"p=12%: r2 {est[2, 0.12].p_hat:.3f} r3 {est[3, 0.12].p_hat:.3f}")


# ---------------------------------------------------------------------------
# 8. 3D graph structure
# ---------------------------------------------------------------------------

def test_criterion_08_3d_graph():
    lat = build_lattice(2, s=5, b=3, n_defects=2)
    degrees_ok = True
    n_bulk = 0
    for kind in ("bit", "phase"):
        g3, fd = build_3d_decoding_graph(lat, 3, 0.005, kind)
        g2 = build_decoding_graph(lat, kind, 0.01, outer="open")
        d2 = np.bincount(g2.edges.ravel(), minlength=g2.n_vertices)
        nbrs = [set() for _ in range(g2.n_vertices)]
        for u, v in g2.edges:
            nbrs[u].add(int(v))
            nbrs[v].add(int(u))
        full = lambda s: not g2.boundary[s] and d2[s] == 4
        bulk = [s for s in range(g2.n_vertices) if full(s) and all(full(x) for x in nbrs[s])]
        n_stab = sum(1 for c in fd.vertex_coords if c[1] == 0)
        deg = vertex_degrees(g3)
        for lay in (1, 2):
            for s in bulk:
                degrees_ok &= bool(deg[lay * n_stab + s] == 12)
                n_bulk += 1
    circ = build_readout_circuit(lat, 3)
    most = 0
    n_events = 0
    for tau in range(3):
        for ev in cycle_events(circ, tau):
            pr = propagate_event(circ, ev)
            most = max(most, len(pr.plaquette_detectors(circ)), len(pr.site_detectors(circ)))
            n_events += 1
    g3, _ = build_3d_decoding_graph(lat, 3, 0.005, "bit")
    ref = load_graph(GOLDEN)
    golden = (np.array_equal(ref.edges, g3.edges) and np.array_equal(ref.logical, g3.logical)
              and np.array_equal(ref.boundary, g3.boundary) and np.allclose(ref.rates, g3.rates))
    record(8, degrees_ok and n_bulk > 0 and most <= 2 and golden,
           f"{n_bulk} bulk vertices all degree 12: {degrees_ok}; max detectors per fault "
           f"{most} over {n_events} faults; golden file match: {golden}")


# ---------------------------------------------------------------------------
# 9. ansatz round trip
# ---------------------------------------------------------------------------

def test_criterion_09_ansatz_round_trip():
    coeffs = load_reference_coefficients()["noiseless", "loop"]
    rates = np.geomspace(0.001, 0.08, 12)
    pts = synthetic_points(coeffs, rates, [2, 3, 4, 5])
    res = fit_ansatz(pts)
    dev = float(np.abs(res.rel_deviation).max())
    record(9, dev < 0.01, f"max pointwise relative deviation {dev:.1e} on 12 rates x r=2..5")


# ---------------------------------------------------------------------------
# 10. derivative continuity at the noisy junction (substitute criterion)
# ---------------------------------------------------------------------------

def test_criterion_10_noisy_junction_slope():
    p_star = 0.003
    setup = build_setup("noisy", "path", 2, s=5, b=3, t=3, p=p_star)
    ladder = make_ladder(p_star, p_star / 2, noise_builder=setup.noise_builder)[:2]
    q = ladder[0] / ladder[1]
    trials = 40000
    mc0 = monte_carlo_seeded(setup.graph, setup.noise_builder(p_star), trials, 100, key=(0,))
    mc1 = monte_carlo_seeded(setup.graph, setup.noise_builder(p_star * q), trials, 100, key=(1,))
    slope_mc = math.log(mc1.p_hat / mc0.p_hat) / math.log(q)
    sig_mc = math.hypot(mc0.sigma, mc1.sigma) / math.log(q)
    res = splitting_estimate(setup.graph, ladder, mc0.p_hat, 400_000,
                             noise_builder=setup.noise_builder, seed_chain=setup.seed_chain,
                             master_seed=101, anchor_source="mc")
    rung = res.rungs[0]
    slope_split = -math.log(rung.ratio) / math.log(q)
    sig_split = rung.sigma / math.log(q)
    z = abs(slope_mc - slope_split) / math.hypot(sig_mc, sig_split)
    record(10, z <= 3,
           f"reduced noisy path geometry, p*={p_star:g}, step {q:.3f}: MC slope "
           f"{slope_mc:.2f}+-{sig_mc:.2f} above, splitting slope {slope_split:.2f}+-{sig_split:.2f} "
           f"below, |z| = {z:.2f}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
