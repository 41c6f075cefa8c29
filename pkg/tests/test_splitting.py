import json
import math

import numpy as np
import pytest

from surfsplit.correctability import is_correctable_decoder_specific
from surfsplit.instances import annulus_graph, random_graph, strip_graph
from surfsplit.noise import NoiseModel
from surfsplit.splitting import (asymptotic_anchor, exact_failure_probability,
                                 initial_failure_chain, make_ladder, monte_carlo_estimate,
                                 monte_carlo_seeded, splitting_estimate)
from surfsplit.splitting import exchange_estimate


def test_asymptotic_anchor_values():
    assert asymptotic_anchor(2, 0.001, "loop") == pytest.approx(35 * 1e-12)
    assert asymptotic_anchor(2, 0.001, "path") == pytest.approx(70 * 1e-12)
    with pytest.warns(UserWarning):
        asymptotic_anchor(2, 0.05, "loop")
    with pytest.raises(ValueError):
        asymptotic_anchor(2, 0.001, "ring")


def test_ladder_steps_and_endpoints():
    g = strip_graph()
    lad = make_ladder(0.01, 0.2, g, distance=2)
    assert lad[0] == 0.01 and lad[-1] == 0.2
    assert np.all(np.diff(lad) > 0)
    for a, b in zip(lad[:-2], lad[1:-1]):
        w = max(1.0, a * g.n_edges)
        assert b / a == pytest.approx(2 ** (1 / math.sqrt(w)))
    down = make_ladder(0.2, 0.01, g, distance=2)
    assert down[-1] == 0.01 and np.all(np.diff(down) < 0)
    assert make_ladder(0.1, 0.1, g) == [0.1]


def test_ladder_with_noise_builder():
    builder = lambda p: NoiseModel.uniform(50, p)
    lad = make_ladder(0.1, 0.02, noise_builder=builder)
    assert lad[1] == pytest.approx(0.1 / 2 ** (1 / math.sqrt(5.0)))


def test_seed_chain_is_uncorrectable(rng):
    for make in (annulus_graph, strip_graph):
        g = make()
        assert not is_correctable_decoder_specific(g, initial_failure_chain(g))
    found = 0
    while found < 20:
        g = random_graph(rng, max_edges=10)
        try:
            ch = initial_failure_chain(g)
        except ValueError:
            continue
        assert not is_correctable_decoder_specific(g, ch)
        found += 1


def test_monte_carlo_matches_exact(rng):
    g = strip_graph()
    nm = NoiseModel.uniform(g.n_edges, 0.15)
    exact = exact_failure_probability(g, nm)
    res = monte_carlo_estimate(g, nm, 20000, rng)
    assert abs(res.p_hat - exact) < 4 * res.sigma * res.p_hat


def test_seeded_monte_carlo_is_reproducible():
    g = strip_graph()
    nm = NoiseModel.uniform(g.n_edges, 0.1)
    a = monte_carlo_seeded(g, nm, 2500, 3, key=(1,))
    b = monte_carlo_seeded(g, nm, 2500, 3, key=(1,), workers=2)
    assert a == b


def test_zero_failures_reports_upper_bound(rng):
    g = strip_graph()
    res = monte_carlo_estimate(g, NoiseModel.uniform(g.n_edges, 1e-6), 100, rng)
    assert res.failures == 0 and res.upper_bound == pytest.approx(0.03)
    assert math.isinf(res.sigma)


@pytest.mark.parametrize("make", [strip_graph, annulus_graph])
def test_splitting_matches_exact(make):
    g = make()
    ladder = [0.04, 0.06, 0.09, 0.13]
    start = exact_failure_probability(g, NoiseModel.uniform(g.n_edges, ladder[0]))
    target = exact_failure_probability(g, NoiseModel.uniform(g.n_edges, ladder[-1]))
    res = splitting_estimate(g, ladder, start, 30000, master_seed=4)
    assert len(res.rungs) == 3 and len(res.levels) == 4
    assert abs(math.log(res.estimate / target)) < 3 * res.sigma


def test_checkpoint_resume_and_worker_independence(tmp_path):
    g = strip_graph()
    ladder = [0.05, 0.08, 0.12]
    ck = tmp_path / "ck.json"
    full = splitting_estimate(g, ladder, 1e-3, 3000, master_seed=2, checkpoint=str(ck))
    data = json.loads(ck.read_text())
    assert len(data["rungs"]) == 2
    # drop the last rung and resume
    data["rungs"] = data["rungs"][:1]
    ck.write_text(json.dumps(data))
    resumed = splitting_estimate(g, ladder, 1e-3, 3000, master_seed=2, checkpoint=str(ck))
    assert resumed.estimate == full.estimate
    par = splitting_estimate(g, ladder, 1e-3, 3000, master_seed=2, workers=2)
    assert par.estimate == full.estimate
    with pytest.raises(ValueError):
        splitting_estimate(g, ladder, 1e-3, 3000, master_seed=3, checkpoint=str(ck))


def test_invalid_ladders_and_options():
    g = strip_graph()
    with pytest.raises(ValueError):
        splitting_estimate(g, [0.05, 0.1, 0.07], 1e-3, 100)
    with pytest.raises(ValueError):
        splitting_estimate(g, [0.05, 0.1], 1e-3, 100, warm_start=True, workers=2)
    with pytest.raises(ValueError):
        splitting_estimate(g, [0.05, 0.1, 0.2], 1e-3, [100])


def test_convergence_check_and_truncation():
    g = strip_graph()
    res = splitting_estimate(g, [0.05, 0.1], 1.0, 20000, master_seed=1,
                             check_convergence=True, N=500)
    rung = res.rungs[0]
    assert rung.converged in (True, False)
    assert rung.n_lower == rung.n_upper == 500


@pytest.mark.parametrize("make", [strip_graph, annulus_graph])
def test_exchange_sampler_matches_exact(make):
    g = make()
    ladder = [0.04, 0.06, 0.09, 0.13]
    start = exact_failure_probability(g, NoiseModel.uniform(g.n_edges, ladder[0]))
    levels = [exact_failure_probability(g, NoiseModel.uniform(g.n_edges, p)) for p in ladder]
    res = splitting_estimate(g, ladder, start, 30000, master_seed=4, sampler="exchange")
    assert len(res.rungs) == 3 and len(res.levels) == 4
    assert all(0 < r.swap_acceptance <= 1 for r in res.rungs)
    for (p, est, sig), exact in zip(res.levels[1:], levels[1:]):
        assert abs(math.log(est / exact)) < 3 * sig


def test_exchange_sigma_covers_repeats():
    # the joint batch-means sigma should describe the scatter of repeated runs
    g = strip_graph()
    ladder = [0.04, 0.06, 0.09]
    start = exact_failure_probability(g, NoiseModel.uniform(g.n_edges, ladder[0]))
    target = math.log(exact_failure_probability(g, NoiseModel.uniform(g.n_edges, ladder[-1])))
    z = []
    for seed in range(20):
        res = exchange_estimate(g, ladder, start, 6000, master_seed=seed)
        z.append((math.log(res.estimate) - target) / res.sigma)
    z = np.array(z)
    assert np.mean(np.abs(z) < 3) >= 0.9
    assert 0.4 < np.std(z) < 2.0


def test_exchange_checkpoint_and_options(tmp_path):
    g = strip_graph()
    ladder = [0.05, 0.08, 0.12]
    ck = tmp_path / "ex.json"
    first = exchange_estimate(g, ladder, 1e-3, 3000, master_seed=2, checkpoint=str(ck))
    again = exchange_estimate(g, ladder, 1e-3, 3000, master_seed=2, checkpoint=str(ck))
    assert again.estimate == first.estimate and again.levels == first.levels
    assert exchange_estimate(g, ladder, 1e-3, 3000, master_seed=2).estimate == first.estimate
    with pytest.raises(ValueError):
        splitting_estimate(g, ladder, 1e-3, 3000, master_seed=2, checkpoint=str(ck))
    with pytest.raises(ValueError):
        splitting_estimate(g, ladder, 1e-3, 3000, sampler="exchange", workers=2)
    with pytest.raises(ValueError):
        splitting_estimate(g, ladder, 1e-3, 3000, sampler="tempered")
    with pytest.raises(ValueError):
        exchange_estimate(g, ladder, 1e-3, [3000, 3000])
