"""Acceptance-ratio estimate of pi_{j+1}(F) / pi_j(F) from two conditional samples.

With Delta(E) = ln pi_{j+1}(E) - ln pi_j(E) and g(x) = 1/(1+x):

    ratio = C * mean_j[ g(C exp(-Delta)) ] / mean_{j+1}[ g(exp(Delta) / C) ]

for any C > 0 (exactly, when the means are exact expectations).  The
variance-optimal C makes the two means equal, in which case ratio = C.
Everything is evaluated in log space, so extreme Delta values are safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit, logsumexp

OVERLAP_FLOOR = 1e-4
LOGC_BRACKET = (-50.0, 50.0)
LOGC_TOL = 1e-10


class RungOverlapError(RuntimeError):
    """Neighbouring distributions barely overlap; the ladder needs more rungs."""

    def __init__(self, message: str, rung: int | None = None):
        super().__init__(message)
        self.rung = rung


def g_fermi(x):
    """g(x) = 1 / (1 + x); satisfies g(x) = g(1/x) / x."""
    return 1.0 / (1.0 + np.asarray(x, dtype=float))


def g_metropolis(x):
    """g(x) = min(1, 1/x); another function with g(x) = g(1/x) / x."""
    return np.minimum(1.0, 1.0 / np.asarray(x, dtype=float))


@dataclass
class RatioEstimate:
    ratio: float
    log_ratio: float
    C: float
    sigma: float  # relative error of ratio
    n_lower: int
    n_upper: int
    overlap: float  # common value of the two g-averages at the root

    def as_dict(self) -> dict:
        return dict(ratio=self.ratio, log_ratio=self.log_ratio, C=self.C, sigma=self.sigma,
                    n_lower=self.n_lower, n_upper=self.n_upper, overlap=self.overlap)


def _log_means(delta_a, delta_b, log_c):
    la = logsumexp(log_expit(delta_a - log_c)) - np.log(len(delta_a))
    lb = logsumexp(log_expit(log_c - delta_b)) - np.log(len(delta_b))
    return la, lb


def solve_log_c(delta_a: np.ndarray, delta_b: np.ndarray,
                bracket=LOGC_BRACKET, tol: float = LOGC_TOL) -> float:
    """Root of ln mean_a g - ln mean_b g in ln C, by bisection.

    The first mean is non-increasing and the second non-decreasing in C, so
    the root is unique; both monotonicity claims are checked along the way.
    """
    lo, hi = bracket
    fa_lo, fb_lo = _log_means(delta_a, delta_b, lo)
    fa_hi, fb_hi = _log_means(delta_a, delta_b, hi)
    if fa_lo - fb_lo < 0 or fa_hi - fb_hi > 0:
        raise RungOverlapError("no self-consistent constant inside the search bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fa, fb = _log_means(delta_a, delta_b, mid)
        slack = 1e-12 * max(1.0, abs(fa), abs(fb))
        if fa > fa_lo + slack or fa < fa_hi - slack or fb < fb_lo - slack or fb > fb_hi + slack:
            raise AssertionError("acceptance-ratio equation lost monotonicity")
        if fa - fb > 0:
            lo, fa_lo, fb_lo = mid, fa, fb
        else:
            hi, fa_hi, fb_hi = mid, fa, fb
    return 0.5 * (lo + hi)


def batch_variance_of_mean(x: np.ndarray, n_batches: int = 20) -> float:
    """Variance of the sample mean from non-overlapping batch means."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        return np.inf
    b = min(n_batches, n // 2) if n >= 4 else n
    size = n // b
    trimmed = x[: b * size].reshape(b, size).mean(axis=1)
    return float(trimmed.var(ddof=1) / b)


def bennett_from_deltas(delta_a: np.ndarray, delta_b: np.ndarray,
                        n_batches: int = 20) -> RatioEstimate:
    """Ratio estimate from log-probability differences of the two samples."""
    delta_a = np.asarray(delta_a, dtype=float)
    delta_b = np.asarray(delta_b, dtype=float)
    if len(delta_a) == 0 or len(delta_b) == 0:
        raise ValueError("both sample sets must be nonempty")
    log_c = solve_log_c(delta_a, delta_b)
    ga = expit(delta_a - log_c)
    gb = expit(log_c - delta_b)
    ma, mb = ga.mean(), gb.mean()
    overlap = float(min(ma, mb))
    if overlap < OVERLAP_FLOOR:
        raise RungOverlapError(f"g-average {overlap:.3g} below {OVERLAP_FLOOR:g}")
    var = batch_variance_of_mean(ga, n_batches) / ma ** 2 + batch_variance_of_mean(gb, n_batches) / mb ** 2
    log_ratio = log_c + np.log(ma) - np.log(mb)
    return RatioEstimate(float(np.exp(log_ratio)), float(log_ratio), float(np.exp(log_c)),
                         float(np.sqrt(var)), len(delta_a), len(delta_b), overlap)


def bennett_ratio(samples_j, samples_j1, noise_j, noise_j1, N: int | None = None,
                  n_batches: int = 20) -> RatioEstimate:
    """Ratio pi_{j+1}(F)/pi_j(F) from chains sampled at the two noise levels.

    ``samples_*`` are sequences of edge-id arrays (as recorded by the
    sampler).  ``N`` optionally truncates both sample sets to their last N
    records.
    """
    if N is not None:
        samples_j = samples_j[-N:]
        samples_j1 = samples_j1[-N:]
    da = noise_j1.log_probabilities(samples_j) - noise_j.log_probabilities(samples_j)
    db = noise_j1.log_probabilities(samples_j1) - noise_j.log_probabilities(samples_j1)
    return bennett_from_deltas(da, db, n_batches)


def exact_ratio_identity(log_pj: np.ndarray, log_pj1: np.ndarray, C: float, g=g_fermi) -> float:
    """Right-hand side of the ratio identity with exact conditional expectations.

    ``log_pj``/``log_pj1`` are log pi over the complete failure set F.
    """
    wj = np.exp(log_pj - log_pj.max())
    wj /= wj.sum()
    wj1 = np.exp(log_pj1 - log_pj1.max())
    wj1 /= wj1.sum()
    x = np.exp(log_pj - log_pj1)
    num = np.sum(wj * g(C * x))
    den = np.sum(wj1 * g(1.0 / (C * x)))
    return float(C * num / den)
