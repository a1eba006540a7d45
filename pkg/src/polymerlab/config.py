"""Run configuration: validation, defaults, and round-trip
serialization for the command-line driver."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import ConfigError

COMMANDS = ("gpl", "p2p", "phase-grid", "table1", "classify", "clt-check",
            "monotonicity", "localize")


@dataclass
class RunConfig:
    command: str
    model: dict = field(default_factory=lambda: {"family": "uniform01",
                                                 "params": []})
    kernel: dict = field(default_factory=lambda: {"kind": "simple", "d": 3})
    beta: float = 1.0
    betas: Optional[list] = None          # monotonicity sweep grid
    h: Optional[list] = None              # field vector; defaults to 0
    h_grid: Optional[list] = None         # list of field vectors (phase-grid)
    ts: Optional[list] = None             # field magnitudes along e1 (gpl)
    n: int = 64
    samples: int = 100
    seed: Optional[int] = None
    threads: int = 1
    memory_budget: Optional[int] = None
    out: str = "."
    exact: bool = False                   # force the generic log-space engine
    n_terms: int = 64                     # return-series horizon
    burn_in: float = 0.1                  # exponent-fit burn-in fraction

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; "
                              f"choose one of {', '.join(COMMANDS)}")
        if self.command in ("gpl", "p2p", "monotonicity") and self.beta <= 0 \
                and not self.betas:
            raise ConfigError("beta must be > 0")
        if not self.beta >= 0:
            raise ConfigError("beta must be >= 0")
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.seed is None:
            raise ConfigError("seed is mandatory (no wall-clock seeding)")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if not 0 <= self.burn_in < 1:
            raise ConfigError("burn_in must be in [0, 1)")
        if self.memory_budget is not None and self.memory_budget <= 0:
            raise ConfigError("memory_budget must be positive")
        if self.betas is not None:
            if any(b <= 0 for b in self.betas):
                raise ConfigError("betas must be > 0")

    @classmethod
    def from_dict(cls, spec: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(spec) - known
        if extra:
            raise ConfigError(
                f"unknown config keys: {', '.join(sorted(extra))}")
        if "command" not in spec:
            raise ConfigError("config must name a command")
        try:
            return cls(**spec)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            out[f.name] = getattr(self, f.name)
        return out

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                spec = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(spec, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(spec)
