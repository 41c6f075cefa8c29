import numpy as np
import pytest
from scipy.special import expit

from surfsplit.bennett import (RungOverlapError, batch_variance_of_mean, bennett_from_deltas,
                               exact_ratio_identity, g_fermi, g_metropolis, solve_log_c)
from surfsplit.instances import annulus_graph
from surfsplit.metropolis import enumerate_failures
from surfsplit.noise import NoiseModel


def _failure_logs(g, p_lo, p_hi):
    states = np.flatnonzero(enumerate_failures(g))
    bits = ((states[:, None] >> np.arange(g.n_edges)) & 1).astype(float)
    lo, hi = NoiseModel.uniform(g.n_edges, p_lo), NoiseModel.uniform(g.n_edges, p_hi)
    return lo.log_empty + bits @ lo.log_odds, hi.log_empty + bits @ hi.log_odds


@pytest.mark.parametrize("g", [g_fermi, g_metropolis])
def test_identity_holds_for_any_constant(g):
    lj, lj1 = _failure_logs(annulus_graph(), 0.05, 0.1)
    exact = np.exp(lj1).sum() / np.exp(lj).sum()
    for C in np.logspace(-3, 3, 10):
        assert exact_ratio_identity(lj, lj1, C, g) == pytest.approx(exact, rel=1e-10)


def test_g_functions_satisfy_symmetry():
    x = np.logspace(-4, 4, 21)
    for g in (g_fermi, g_metropolis):
        assert np.allclose(g(x), g(1 / x) / x)


def test_root_balances_the_two_means(rng):
    da = rng.normal(1.0, 1.0, 500)
    db = rng.normal(2.0, 1.0, 500)
    lc = solve_log_c(da, db)
    assert expit(da - lc).mean() == pytest.approx(expit(lc - db).mean(), rel=1e-8)


def test_iid_samples_give_unbiased_ratio(rng):
    lj, lj1 = _failure_logs(annulus_graph(), 0.05, 0.1)
    exact = np.exp(lj1).sum() / np.exp(lj).sum()
    wj = np.exp(lj - lj.max())
    wj1 = np.exp(lj1 - lj1.max())
    delta = lj1 - lj
    z = []
    for _ in range(50):
        a = rng.choice(len(lj), 2000, p=wj / wj.sum())
        b = rng.choice(len(lj), 2000, p=wj1 / wj1.sum())
        est = bennett_from_deltas(delta[a], delta[b])
        z.append((est.log_ratio - np.log(exact)) / est.sigma)
    z = np.array(z)
    assert np.mean(np.abs(z) < 3) >= 0.9
    assert abs(z.mean()) < 0.6


def test_no_overlap_raises():
    with pytest.raises(RungOverlapError):
        bennett_from_deltas(np.full(100, -30.0), np.full(100, 30.0))


def test_empty_samples_raise():
    with pytest.raises(ValueError):
        bennett_from_deltas(np.array([]), np.array([1.0]))


def test_batch_variance_of_iid_mean(rng):
    reps = [batch_variance_of_mean(rng.normal(size=4000)) for _ in range(50)]
    assert np.mean(reps) == pytest.approx(1 / 4000, rel=0.2)
    assert batch_variance_of_mean(np.array([1.0])) == np.inf
