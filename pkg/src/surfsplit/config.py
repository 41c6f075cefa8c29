"""Experiment configuration: a flat YAML mapping with validated fields."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields

import yaml

OUTPUT_ENV = "SURFSPLIT_OUTPUT"

# junction rates between Monte Carlo and splitting
DEFAULT_P_STAR = {
    ("noiseless", "loop"): 0.05,
    ("noiseless", "path"): 0.03,
    ("noisy", "loop"): 0.005,
    ("noisy", "path"): 0.003,
}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class ExperimentConfig:
    readout: str = "noiseless"  # noiseless | noisy
    error_kind: str = "loop"  # loop | path
    r: list = field(default_factory=lambda: [2])
    s: int | None = None  # defect separation, default 4r
    b: int | None = None  # buffer to the outer boundary, default 4r
    t: int | None = None  # readout cycles (noisy only), default 4r
    outer: str | None = None  # noiseless path-like: open | closed (default closed)
    rates: list = field(default_factory=lambda: [0.05])
    method: str = "auto"  # mc | split-up | split-down | auto
    p_star: float | None = None
    p_start: float | None = None  # first ladder rate
    anchor: str | None = None  # asymptotic | mc
    trials: int = 100_000
    M: int = 200_000  # Metropolis steps per chain per rung
    N: int | None = None  # keep only the last N records per chain
    sampler: str = "independent"  # independent | exchange (replica swaps between levels)
    seed: int = 0
    workers: int = 1
    output: str | None = None

    # -- derived defaults ------------------------------------------------------
    def junction(self) -> float:
        return self.p_star if self.p_star is not None else DEFAULT_P_STAR[(self.readout, self.error_kind)]

    def geometry(self, r: int) -> dict:
        return dict(s=self.s if self.s is not None else 4 * r,
                    b=self.b if self.b is not None else 4 * r,
                    t=self.t if self.t is not None else 4 * r)

    def start_rate(self) -> float:
        if self.p_start is not None:
            return self.p_start
        return 0.001 if self.readout == "noiseless" else self.junction()

    def anchor_policy(self) -> str:
        if self.anchor is not None:
            return self.anchor
        return "asymptotic" if self.readout == "noiseless" else "mc"

    def output_dir(self) -> str:
        if self.output:
            return self.output
        return os.environ.get(OUTPUT_ENV, "surfsplit-out")

    # -- validation and serialization -------------------------------------------
    def validate(self) -> "ExperimentConfig":
        def check(ok, name, msg):
            if not ok:
                raise ConfigError(name, msg)

        check(self.readout in ("noiseless", "noisy"), "readout", "must be noiseless or noisy")
        check(self.error_kind in ("loop", "path"), "error_kind", "must be loop or path")
        check(isinstance(self.r, list) and len(self.r) > 0, "r", "must be a nonempty list")
        for i, r in enumerate(self.r):
            check(isinstance(r, int) and r >= 1, f"r[{i}]", "must be a positive integer")
        for name in ("s", "b", "t"):
            v = getattr(self, name)
            check(v is None or (isinstance(v, int) and v >= 1), name, "must be a positive integer")
        check(self.outer in (None, "open", "closed"), "outer", "must be open or closed")
        check(isinstance(self.rates, list) and len(self.rates) > 0, "rates", "must be a nonempty list")
        for i, p in enumerate(self.rates):
            check(isinstance(p, (int, float)) and 0 < p < 0.5, f"rates[{i}]", "must lie in (0, 1/2)")
        check(self.method in ("mc", "split-up", "split-down", "auto"), "method",
              "must be mc, split-up, split-down or auto")
        for name in ("p_star", "p_start"):
            v = getattr(self, name)
            check(v is None or (isinstance(v, (int, float)) and 0 < v < 0.5), name, "must lie in (0, 1/2)")
        check(self.anchor in (None, "asymptotic", "mc"), "anchor", "must be asymptotic or mc")
        check(isinstance(self.trials, int) and self.trials >= 1, "trials", "must be >= 1")
        check(isinstance(self.M, int) and self.M >= 1, "M", "must be >= 1")
        check(self.N is None or (isinstance(self.N, int) and self.N >= 2), "N", "must be >= 2")
        check(self.sampler in ("independent", "exchange"), "sampler",
              "must be independent or exchange")
        check(isinstance(self.seed, int) and self.seed >= 0, "seed", "must be a nonnegative integer")
        check(isinstance(self.workers, int) and self.workers >= 1, "workers", "must be >= 1")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a mapping")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(str(key), "unknown field")
        data = dict(data)
        for key in ("r", "rates"):
            if key in data and not isinstance(data[key], list):
                data[key] = [data[key]]
        return cls(**data).validate()

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError("<root>", f"not valid YAML: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.loads(fh.read())
