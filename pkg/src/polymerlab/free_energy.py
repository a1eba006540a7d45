"""Monte Carlo free-energy estimation.

Point-to-level estimates with the annealed (Jensen) bound, sample-
averaged point-to-point surfaces with their Legendre transform, and
the paired-environment monotonicity sweep in beta.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import partial
from typing import Optional, Sequence

import numpy as np

from . import kernels as kmod
from .disorder import Environment, WeightModel, log_mgf
from .engine import run_polymer
from .errors import ConfigError, EmptySurface
from .kernels import StepKernel
from .parallel import map_samples


@dataclass
class FreeEnergyEstimate:
    """Mean point-to-level free energy with its standard error and the
    annealed bound (1/beta)(Lambda(beta) + Lambda_p(beta*h))."""

    beta: float
    h: list
    n: int
    samples: int
    g_mean: float
    g_se: float
    annealed: float

    @property
    def gap(self) -> float:
        return self.annealed - self.g_mean

    @property
    def gap_se(self) -> float:
        return self.g_se


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    m = float(values.mean())
    if len(values) < 2:
        return m, float("inf")
    sd = float(values.std(ddof=1))
    return m, sd / math.sqrt(len(values))


def _gpl_sample(model, q, beta, n, seed, budget, i):
    env = Environment(model, seed, i)
    res = run_polymer(q, beta, env, n, budget=budget)
    return float(res.logz_pl[-1])


def estimate_gpl(model: WeightModel, p: StepKernel, beta: float, h,
                 n: int, samples: int, seed: int, *, threads: int = 1,
                 budget: Optional[int] = None) -> FreeEnergyEstimate:
    """Estimate g_pl(beta, h) = E[(1/(beta n)) log Z_{n,beta,q(h)}]
    + Lambda_p(beta h)/beta over iid environments."""
    if beta <= 0:
        raise ConfigError("estimate_gpl requires beta > 0")
    h = np.atleast_1d(np.asarray(h, dtype=np.float64))
    q = kmod.tilt(p, beta, h)
    shift = q.log_mgf_at_tilt / beta        # Lambda_p(beta h)/beta
    logzs = np.array(map_samples(
        partial(_gpl_sample, model, q, beta, n, seed, budget),
        range(samples), threads))
    vals = logzs / (beta * n) + shift
    g_mean, g_se = _mean_se(vals)
    annealed = (log_mgf(model, beta) + q.log_mgf_at_tilt) / beta
    return FreeEnergyEstimate(float(beta), h.tolist(), n, samples,
                              g_mean, g_se, annealed)


@dataclass
class P2PSurface:
    """Sample-averaged (1/(beta n)) log Z_n(0, x) on the reachable
    window; -inf marks unreachable (or fully flushed) sites."""

    beta: float
    n: int
    samples: int
    lo: np.ndarray
    hi: np.ndarray
    values: np.ndarray

    @property
    def d(self) -> int:
        return len(self.lo)

    def finite_sites(self) -> tuple[np.ndarray, np.ndarray]:
        """(sites (k,d), values (k,)) over sites finite in every sample."""
        mask = np.isfinite(self.values)
        grids = np.meshgrid(
            *[np.arange(self.lo[j], self.hi[j] + 1) for j in range(self.d)],
            indexing="ij")
        sites = np.stack([g[mask] for g in grids], axis=1)
        return sites, self.values[mask]


def _p2p_sample(model, p, beta, n, seed, budget, i):
    env = Environment(model, seed, i)
    res = run_polymer(p, beta, env, n, keep_field=True, budget=budget)
    return res.final_field.logz()


def p2p_surface(model: WeightModel, p: StepKernel, beta: float, n: int,
                samples: int, seed: int, *, threads: int = 1,
                budget: Optional[int] = None) -> P2PSurface:
    """Average of (1/(beta n)) log Z_n(0, x) over environments, on the
    full reachable window of the base kernel p."""
    if beta <= 0:
        raise ConfigError("p2p_surface requires beta > 0")
    fields = map_samples(
        partial(_p2p_sample, model, p, beta, n, seed, budget),
        range(samples), threads)
    acc = np.zeros_like(fields[0])
    for f in fields:
        acc += f
    lo = p.support_min * n
    hi = p.support_max * n
    return P2PSurface(float(beta), n, samples, lo, hi,
                      acc / (samples * beta * n))


def legendre(surface: P2PSurface, h, method: str = "sup") -> float:
    """Convex conjugate of the surface at field h.

    method="sup": discrete sup over simulated velocities v = x/n of
    surface(v) + h.v (the limiting duality formula; biased low by
    ~(d/2) log n/(beta n) at finite n from endpoint concentration).

    method="sum": the pre-limit dual (1/(beta n)) log sum_x
    exp(beta n (surface + h.v)), which is the exact finite-n identity
    between point-to-point and tilted point-to-level partition
    functions and converges to the same sup.
    """
    h = np.atleast_1d(np.asarray(h, dtype=np.float64))
    sites, vals = surface.finite_sites()
    if len(vals) == 0:
        raise EmptySurface("surface has no finite sites")
    a = vals + (sites @ h) / surface.n
    if method == "sup":
        return float(np.max(a))
    if method == "sum":
        bn = surface.beta * surface.n
        m = float(np.max(a))
        return m + math.log(float(np.sum(np.exp(bn * (a - m))))) / bn
    raise ValueError(f"unknown legendre method {method!r}")


@dataclass
class MonotonicityTable:
    """Paired-environment sweep of ghat_n(beta, h0) - Lambda(beta)."""

    betas: list
    h0: list
    n: int
    samples: int
    mean: np.ndarray            # per beta
    se: np.ndarray
    diffs: np.ndarray           # first differences of the mean
    diff_se: np.ndarray         # SE of the paired per-sample differences
    violation_rate: np.ndarray  # per-sample fraction with positive diff


def _mono_sample(model, q, betas, n, seed, budget, i):
    env = Environment(model, seed, i)
    out = np.empty(len(betas))
    for j, beta in enumerate(betas):
        res = run_polymer(q, float(beta), env, n, budget=budget)
        out[j] = res.logz_pl[-1] / n - log_mgf(model, float(beta))
    return out


def monotonicity_sweep(model: WeightModel, p: StepKernel, h0,
                       betas: Sequence[float], n: int, samples: int,
                       seed: int, *, threads: int = 1,
                       budget: Optional[int] = None) -> MonotonicityTable:
    """For each beta on an ascending grid, estimate
    (1/n) log Z_{n,beta,q(h0)} - Lambda(beta) with common environments
    across beta; the mean sequence should be nonincreasing."""
    betas = [float(b) for b in betas]
    if any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ConfigError("betas must be strictly ascending")
    h0 = np.atleast_1d(np.asarray(h0, dtype=np.float64))
    q = kmod.tilt(p, 1.0, h0) if np.any(h0 != 0) else p
    rows = np.array(map_samples(
        partial(_mono_sample, model, q, betas, n, seed, budget),
        range(samples), threads))            # (samples, n_beta)
    mean = rows.mean(axis=0)
    se = rows.std(axis=0, ddof=1) / math.sqrt(samples)
    pair = np.diff(rows, axis=1)             # per-sample first differences
    diffs = pair.mean(axis=0)
    diff_se = pair.std(axis=0, ddof=1) / math.sqrt(samples)
    violation = (pair > 0).mean(axis=0)
    return MonotonicityTable(betas, h0.tolist(), n, samples, mean, se,
                             diffs, diff_se, violation)


def write_gpl_curve(estimates: Sequence[FreeEnergyEstimate], path) -> None:
    if not estimates:
        raise ValueError("no estimates to write")
    d = len(estimates[0].h)
    cols = ["beta"] + [f"h{j+1}" for j in range(d)] + \
        ["n", "samples", "g_mean", "g_se", "annealed", "gap"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for e in estimates:
            w.writerow([repr(e.beta)] + [repr(v) for v in e.h]
                       + [e.n, e.samples, repr(e.g_mean), repr(e.g_se),
                          repr(e.annealed), repr(e.gap)])


def write_surface(surface: P2PSurface, path) -> None:
    sites, vals = surface.finite_sites()
    cols = [f"x{j+1}" for j in range(surface.d)] + ["value"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for site, v in zip(sites, vals):
            w.writerow([int(c) for c in site] + [repr(float(v))])
