"""Weight distributions, their cumulant functions, and seeded environments.

The weight field omega(t, x) is an iid family addressable by (seed,
sample, t, x); the same site always returns the same value, and the
stream does not depend on beta, the field h, or the step kernel, so
common-random-number comparisons across parameters are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from ._rng import stream_base, coord_hash, to_unit

FAMILIES = ("uniform01", "gaussian", "bernoulli", "pointmass")


@dataclass(frozen=True)
class WeightModel:
    """Distribution of a single weight with exact cumulant data."""

    family: str
    params: tuple = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown weight family {self.family!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        n_expected = {"uniform01": 0, "gaussian": 2, "bernoulli": 1, "pointmass": 1}
        if len(self.params) != n_expected[self.family]:
            raise ValueError(
                f"{self.family} takes {n_expected[self.family]} parameters, "
                f"got {len(self.params)}")
        if self.family == "gaussian" and self.params[1] < 0:
            raise ValueError("gaussian stdev must be >= 0")
        if self.family == "bernoulli" and not 0.0 <= self.params[0] <= 1.0:
            raise ValueError("bernoulli success probability must be in [0, 1]")

    @property
    def is_degenerate(self) -> bool:
        return self.family == "pointmass" or (
            self.family == "gaussian" and self.params[1] == 0.0) or (
            self.family == "bernoulli" and self.params[0] in (0.0, 1.0))

    @classmethod
    def from_config(cls, spec: dict) -> "WeightModel":
        extra = set(spec) - {"family", "params"}
        if extra:
            raise ValueError(f"unknown weight model keys {sorted(extra)}")
        return cls(spec["family"], tuple(spec.get("params", ())))

    def to_config(self) -> dict:
        return {"family": self.family, "params": list(self.params)}


def log_mgf(model: WeightModel, beta: float) -> float:
    """Log moment generating function of one weight, log E[exp(beta*w)]."""
    b = float(beta)
    if not math.isfinite(b):
        raise ValueError("beta must be finite")
    if model.family == "uniform01":
        # log((e^b - 1)/b); removable singularity at b = 0
        if abs(b) < 1e-4:
            return b / 2 + b * b / 24 - b ** 4 / 2880
        if b > 0:
            # b + log(1 - e^-b) - log b avoids overflow for large b
            return b + math.log1p(-math.exp(-b)) - math.log(b)
        return math.log(math.expm1(b) / b)
    if model.family == "gaussian":
        mu, sigma = model.params
        return mu * b + 0.5 * (sigma * b) ** 2
    if model.family == "bernoulli":
        p = model.params[0]
        if p == 0.0:
            return 0.0
        if p == 1.0:
            return b
        return float(np.logaddexp(math.log1p(-p), math.log(p) + b))
    # pointmass
    return model.params[0] * b


def log_mgf_prime(model: WeightModel, beta: float) -> float:
    """Analytic derivative of log_mgf in beta."""
    b = float(beta)
    if model.family == "uniform01":
        if abs(b) < 1e-4:
            return 0.5 + b / 12 - b ** 3 / 720
        return 1.0 / (-math.expm1(-b)) - 1.0 / b
    if model.family == "gaussian":
        mu, sigma = model.params
        return mu + sigma * sigma * b
    if model.family == "bernoulli":
        p = model.params[0]
        if p == 0.0:
            return 0.0
        return 1.0 / (1.0 + (1.0 - p) / p * math.exp(-b))
    return model.params[0]


def relative_entropy(model: WeightModel, beta: float) -> float:
    """Relative entropy of the Gibbs-biased weight law vs the base law.

    Equals beta * d/dbeta log_mgf - log_mgf; nonnegative, zero iff
    beta = 0 or the distribution is a point mass.
    """
    b = float(beta)
    return max(b * log_mgf_prime(model, b) - log_mgf(model, b), 0.0)


def second_moment_ratio(model: WeightModel, beta: float) -> float:
    """M(2*beta) / M(beta)^2, the weight-side factor of the L2 condition."""
    return math.exp(log_mgf(model, 2.0 * beta) - 2.0 * log_mgf(model, beta))


class Environment:
    """Seeded, reproducible weight field addressable by (t, x)."""

    def __init__(self, model: WeightModel, seed: int, sample_index: int = 0):
        if sample_index < 0:
            raise ValueError("sample_index must be >= 0")
        if not 0 <= int(seed) < 2 ** 63:
            raise ValueError("seed must be a nonnegative 63-bit integer")
        self.model = model
        self.seed = int(seed)
        self.sample_index = int(sample_index)

    def with_sample(self, sample_index: int) -> "Environment":
        return Environment(self.model, self.seed, sample_index)

    def _transform(self, u: np.ndarray) -> np.ndarray:
        fam = self.model.family
        if fam == "uniform01":
            return u
        if fam == "gaussian":
            mu, sigma = self.model.params
            return mu + sigma * ndtri(u)
        if fam == "bernoulli":
            return (u < self.model.params[0]).astype(np.float64)
        return np.full_like(u, self.model.params[0])

    def weight_box(self, t: int, lo, hi) -> np.ndarray:
        """Dense weights on the box prod_j [lo_j, hi_j] at time t."""
        if t <= 0:
            raise ValueError("weights exist for t >= 1 only")
        lo = np.atleast_1d(np.asarray(lo, dtype=np.int64))
        hi = np.atleast_1d(np.asarray(hi, dtype=np.int64))
        base = stream_base(self.seed, self.sample_index, t)
        d = len(lo)
        coords = []
        for j in range(d):
            shape = [1] * d
            shape[j] = hi[j] - lo[j] + 1
            coords.append(np.arange(lo[j], hi[j] + 1).reshape(shape))
        return self._transform(to_unit(coord_hash(base, coords)))

    def sample_weight(self, t: int, x) -> float:
        """Single weight omega(t, x); x is a scalar (d=1) or d-vector."""
        x = np.atleast_1d(np.asarray(x, dtype=np.int64))
        return float(self.weight_box(t, x, x).ravel()[0])
