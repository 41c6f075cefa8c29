import math

import numpy as np
import pytest

from surfsplit.analysis import (FitError, ResultRecord, ansatz_alpha, ansatz_pl, emit_results,
                                fit_alpha, fit_ansatz, load_reference_coefficients,
                                read_results, synthetic_points, write_curves)
from surfsplit.splitting import asymptotic_anchor

RATES = [0.001, 0.002, 0.005, 0.01, 0.02, 0.03, 0.05, 0.08]


def test_reference_table_has_four_rows():
    ref = load_reference_coefficients()
    assert set(ref) == {("noiseless", "loop"), ("noiseless", "path"),
                        ("noisy", "loop"), ("noisy", "path")}
    assert ref["noiseless", "loop"]["c"] == pytest.approx(4 * math.log(2))
    assert ref["noisy", "path"]["x1"] == 1170


def test_exact_exponential_gives_exact_alpha():
    fit = fit_alpha([(r, math.exp(-2 * r), 0.0) for r in (2, 3, 4, 5)])
    assert fit.alpha == pytest.approx(2.0, abs=1e-12)
    assert fit.sigma == pytest.approx(0.0, abs=1e-9)


def test_noisy_alpha_covers_truth(rng):
    hits = 0
    for _ in range(100):
        pts = [(r, math.exp(-2 * r + rng.normal(0, 0.1)), 0.1) for r in (2, 3, 4, 5)]
        fit = fit_alpha(pts)
        hits += abs(fit.alpha - 2) < 3 * fit.sigma
    assert hits >= 95


def test_alpha_from_asymptotic_anchors():
    p = 0.001
    fit = fit_alpha([(r, asymptotic_anchor(r, p, "loop"), 0.0) for r in (2, 3, 4)])
    # the binomial prefactor grows like 16^r up to a slowly varying factor
    assert fit.alpha == pytest.approx(-4 * math.log(2) - 2 * math.log(p), rel=0.05)


def test_fit_alpha_needs_two_sizes():
    with pytest.raises(FitError):
        fit_alpha([(2, 1e-3, 0.1), (2, 2e-3, 0.1)])


@pytest.mark.parametrize("key", [("noiseless", "loop"), ("noiseless", "path"),
                                 ("noisy", "loop"), ("noisy", "path")])
def test_round_trip_every_reference_row(key):
    coeffs = load_reference_coefficients()[key]
    rates = RATES if key[0] == "noiseless" else [0.0005, 0.001, 0.002, 0.003, 0.004, 0.005]
    pts = synthetic_points(coeffs, rates, [2, 3, 4, 5])
    res = fit_ansatz(pts)
    assert np.abs(res.rel_deviation).max() < 0.01


def test_degenerate_ansatz_alpha():
    coeffs = dict(x0=1.0, x1=0.0, x2=0.0, c=3.0, y1=0.0, y2=0.0, y3=0.0)
    p = np.array(RATES)
    assert np.allclose(ansatz_alpha(p, coeffs), -3.0 - 2 * np.log(p))
    res = fit_ansatz(synthetic_points(coeffs, RATES, [2, 3, 4]))
    assert np.allclose(res.alpha(p), -3.0 - 2 * np.log(p), rtol=1e-6)


def test_alpha_consistency_with_ansatz():
    coeffs = load_reference_coefficients()["noiseless", "loop"]
    for p in (0.002, 0.02):
        pts = [(r, float(ansatz_pl(p, r, coeffs)), 0.0) for r in (2, 3, 4, 5)]
        assert fit_alpha(pts).alpha == pytest.approx(float(ansatz_alpha(p, coeffs)), rel=1e-9)


def test_pinning_c_changes_little(rng):
    coeffs = load_reference_coefficients()["noiseless", "loop"]
    pts = synthetic_points(coeffs, RATES, [2, 3, 4], sigma_rel=0.05, rng=rng)
    free = fit_ansatz(pts)
    pinned = fit_ansatz(pts, pin_c=4 * math.log(2))
    assert pinned.coefficients["c"] == 4 * math.log(2)
    dev = np.abs(np.log1p(pinned.rel_deviation) - np.log1p(free.rel_deviation))
    assert dev.max() < 0.05


def test_fit_refusals():
    coeffs = load_reference_coefficients()["noiseless", "loop"]
    with pytest.raises(FitError):
        fit_ansatz(synthetic_points(coeffs, RATES, [3, 4]))
    with pytest.raises(FitError):
        fit_ansatz(synthetic_points(coeffs, RATES[:3], [2, 3]))
    with pytest.raises(FitError):
        fit_ansatz(synthetic_points(coeffs, RATES, [2]))


def test_results_round_trip(tmp_path):
    path = tmp_path / "r.csv"
    emit_results([], path)
    assert path.read_text().strip().count("\n") == 0
    rec = ResultRecord("mc", "loop", "noiseless", 0.08, 2, 0.0123, 0.05, 7, 0, 1.5)
    emit_results([rec], path, tmp_path / "curves")
    assert read_results(path) == [rec]
    files = list((tmp_path / "curves").iterdir())
    assert len(files) == 1


def test_curve_files_sorted_by_rate(tmp_path):
    recs = [ResultRecord("split-up", "loop", "noiseless", p, 2, 35 * p ** 4, 0.3, 0)
            for p in (0.004, 0.001, 0.002)]
    (fn,) = write_curves(recs, tmp_path)
    data = np.loadtxt(fn)
    assert np.all(np.diff(data[:, 0]) > 0)
    assert np.all(np.diff(data[:, 1]) > 0)
