"""Independent per-edge noise and seeded random streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Per-edge error rates p(e); uniform noise is the special case of equal rates."""

    rates: np.ndarray
    label: float | None = None  # the physical rate p this model was built for

    def __post_init__(self):
        rates = np.ascontiguousarray(self.rates, dtype=float)
        if rates.ndim != 1 or np.any(rates <= 0) or np.any(rates > 0.5):
            raise ValueError("noise rates must lie in (0, 1/2]")
        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)

    @classmethod
    def uniform(cls, n_edges: int, p: float) -> "NoiseModel":
        return cls(np.full(n_edges, float(p)), float(p))

    @property
    def n_edges(self) -> int:
        return len(self.rates)

    @property
    def log_odds(self) -> np.ndarray:
        """lambda(e) = ln(p(e) / (1 - p(e)))."""
        return np.log(self.rates) - np.log1p(-self.rates)

    @property
    def log_empty(self) -> float:
        """log pi(empty chain) = sum of ln(1 - p(e))."""
        return float(np.log1p(-self.rates).sum())

    def log_probability(self, chain) -> float:
        """log pi(E) for a boolean chain or an array of edge ids."""
        # boolean masks and id arrays index the same way
        return self.log_empty + float(self.log_odds[np.asarray(chain)].sum())

    def log_probabilities(self, records) -> np.ndarray:
        """log pi(E) for a sequence of edge-id arrays (shared arrays are cheap)."""
        lam = self.log_odds
        base = self.log_empty
        cache: dict[int, float] = {}
        out = np.empty(len(records))
        for i, rec in enumerate(records):
            key = id(rec)
            v = cache.get(key)
            if v is None:
                v = base + float(lam[rec].sum())
                cache[key] = v
            out[i] = v
        return out

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Independent per-edge flips; shape (n_edges,) or (size, n_edges)."""
        shape = (self.n_edges,) if size is None else (size, self.n_edges)
        return rng.random(shape) < self.rates


def chain_log_probability(noise: NoiseModel, chain) -> float:
    return noise.log_probability(chain)


def make_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Counter-based stream for (master seed, key...), independent of worker layout."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
