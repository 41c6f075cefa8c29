import numpy as np
import pytest

from surfsplit.noise import NoiseModel, make_rng


def test_uniform_log_probability():
    nm = NoiseModel.uniform(5, 0.1)
    ch = np.array([True, False, True, False, False])
    assert nm.log_probability(ch) == pytest.approx(2 * np.log(0.1) + 3 * np.log(0.9))
    assert nm.log_probability(np.array([0, 2])) == pytest.approx(nm.log_probability(ch))


def test_log_probabilities_shares_repeated_records():
    nm = NoiseModel(np.array([0.1, 0.2, 0.3]))
    a = np.array([0, 2])
    out = nm.log_probabilities([a, a, np.array([1])])
    assert out[0] == out[1]
    assert out[2] == pytest.approx(np.log(0.2) + np.log(0.9) + np.log(0.7))


@pytest.mark.parametrize("bad", [0.0, -0.1, 0.6])
def test_rates_out_of_range(bad):
    with pytest.raises(ValueError):
        NoiseModel(np.array([0.1, bad]))


def test_rates_are_read_only():
    nm = NoiseModel.uniform(3, 0.1)
    with pytest.raises(ValueError):
        nm.rates[0] = 0.2


def test_sample_frequency(rng):
    nm = NoiseModel(np.array([0.05, 0.3]))
    x = nm.sample(rng, 40000)
    assert x.shape == (40000, 2)
    assert np.allclose(x.mean(axis=0), [0.05, 0.3], atol=0.01)


def test_streams_are_reproducible_and_distinct():
    a = make_rng(7, 1, 2).random(4)
    b = make_rng(7, 1, 2).random(4)
    c = make_rng(7, 2, 1).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
