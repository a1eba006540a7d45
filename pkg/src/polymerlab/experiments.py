"""Experiment drivers: fluctuation statistics with exponent fits,
free-energy-vs-field curves, and phase-diagram grids."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import partial
from typing import Optional, Sequence

import numpy as np

from . import kernels as kmod
from . import phase
from .disorder import Environment, WeightModel, log_mgf
from .engine import run_polymer
from .errors import NonPositiveValues
from .free_energy import P2PSurface, legendre
from .kernels import StepKernel
from .parallel import map_samples


@dataclass
class ExponentFit:
    """Least-squares slope of log t(k) vs log k past a burn-in."""

    name: str
    slope: float
    slope_se: float
    r2: float
    burn_in: float
    n_points: int


def fit_exponent(series, burn_in: float = 0.1,
                 name: str = "") -> ExponentFit:
    """Fit log t(k) = a + slope * log k on k > burn_in * n."""
    t = np.asarray(series, dtype=np.float64)
    n = len(t)
    k = np.arange(1, n + 1)
    mask = k > burn_in * n
    t = t[mask]
    k = k[mask]
    if np.any(t <= 0) or not np.all(np.isfinite(t)):
        raise NonPositiveValues(
            f"series {name!r} must be positive and finite in the fit window")
    x = np.log(k)
    y = np.log(t)
    m = len(x)
    xbar = x.mean()
    ybar = y.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    slope = float(np.sum((x - xbar) * (y - ybar)) / sxx)
    resid = y - ybar - slope * (x - xbar)
    ssr = float(np.sum(resid ** 2))
    syy = float(np.sum((y - ybar) ** 2))
    se = math.sqrt(ssr / (m - 2) / sxx) if m > 2 else float("inf")
    r2 = 1.0 - ssr / syy if syy > 0 else 1.0
    return ExponentFit(name, slope, se, r2, burn_in, m)


TABLE1_NAMES = ("logz_std", "gibbs_endpoint_std", "annealed_endpoint_std",
                "favorite_site_std")


def _table1_sample(model, q, beta, n, seed, budget, i):
    env = Environment(model, seed, i)
    res = run_polymer(q, beta, env, n, stats=True, budget=budget)
    a_norm = np.sqrt(np.sum(res.A.astype(np.float64) ** 2, axis=1))
    return res.logz_pl, res.mean_abs, res.mean_sq, a_norm


def table1_statistics(model: WeightModel, p: StepKernel, beta: float, h,
                      n: int, samples: int, seed: int, *,
                      burn_in: float = 0.1, threads: int = 1,
                      budget: Optional[int] = None) -> dict:
    """The four endpoint/partition-function fluctuation series with
    their fitted growth exponents:

    1. stdev over environments of log Z_k;
    2. sqrt of the mean quenched variance of |X| under the Gibbs
       measure;
    3. stdev of |X| under the annealed Gibbs measure,
       sqrt(E<|X|^2> - (E<|X|>)^2);
    4. stdev over environments of |A_k|, the most likely site.
    """
    h = np.atleast_1d(np.asarray(h, dtype=np.float64))
    q = kmod.tilt(p, beta, h) if beta > 0 and np.any(h != 0) else p
    s_logz = np.zeros(n)
    s_logz2 = np.zeros(n)
    s_var = np.zeros(n)
    s_mabs = np.zeros(n)
    s_msq = np.zeros(n)
    s_a = np.zeros(n)
    s_a2 = np.zeros(n)
    worker = partial(_table1_sample, model, q, beta, n, seed, budget)
    for logz, mabs, msq, a_norm in map_samples(worker, range(samples),
                                               threads):
        s_logz += logz
        s_logz2 += logz ** 2
        s_var += msq - mabs ** 2
        s_mabs += mabs
        s_msq += msq
        s_a += a_norm
        s_a2 += a_norm ** 2
    inv = 1.0 / samples
    series = {
        "logz_std": np.sqrt(np.maximum(s_logz2 * inv - (s_logz * inv) ** 2,
                                       0.0)),
        "gibbs_endpoint_std": np.sqrt(np.maximum(s_var * inv, 0.0)),
        "annealed_endpoint_std": np.sqrt(
            np.maximum(s_msq * inv - (s_mabs * inv) ** 2, 0.0)),
        "favorite_site_std": np.sqrt(np.maximum(s_a2 * inv - (s_a * inv) ** 2,
                                                0.0)),
    }
    fits = {}
    for name in TABLE1_NAMES:
        try:
            fits[name] = fit_exponent(series[name], burn_in, name)
        except NonPositiveValues:
            fits[name] = None
    return {"series": series, "fits": fits,
            "meta": {"beta": beta, "h": h.tolist(), "n": n,
                     "samples": samples, "seed": seed, "burn_in": burn_in}}


@dataclass
class FieldCurve:
    """g_pl(t * e1) along a 1-D field slice vs the annealed bound."""

    beta: float
    ts: np.ndarray
    g_legendre: np.ndarray        # pre-limit ("sum") dual of the mean surface
    g_sup: np.ndarray             # discrete-sup dual of the mean surface
    g_mean: np.ndarray            # mean of per-sample duals
    g_se: np.ndarray
    annealed: np.ndarray
    surface: P2PSurface


def _fig2_sample(model, p, beta, n, ts, budget, seed, i):
    env = Environment(model, seed, i)
    res = run_polymer(p, beta, env, n, keep_field=True, budget=budget)
    logz = res.final_field.logz()
    d = p.d
    # per-sample legendre values at each field point t*e1
    mask = np.isfinite(logz)
    grids = np.meshgrid(*[res.final_field.coords(j) for j in range(d)],
                        indexing="ij")
    x1 = grids[0][mask]
    a = logz[mask]
    # per-sample pre-limit dual: (1/(beta n)) log sum_x Z(x) e^{beta t x1}
    per_t = np.empty(len(ts))
    for j, t in enumerate(ts):
        b = a + beta * t * x1
        m = float(np.max(b))
        per_t[j] = (m + math.log(float(np.sum(np.exp(b - m))))) / (beta * n)
    return logz, per_t


def figure2_curve(model: WeightModel, p: StepKernel, beta: float,
                  ts: Sequence[float], n: int, samples: int, seed: int, *,
                  threads: int = 1, budget: Optional[int] = None
                  ) -> FieldCurve:
    """One point-to-point surface per beta, Legendre-transformed along
    the h = t * e1 axis, with the analytic annealed bound."""
    ts = np.asarray(ts, dtype=np.float64)
    d = p.d
    acc = None
    per_sample = []
    worker = partial(_fig2_sample, model, p, beta, n, ts, budget, seed)
    for logz, per_t in map_samples(worker, range(samples), threads):
        acc = logz if acc is None else acc + logz
        per_sample.append(per_t)
    per_sample = np.array(per_sample)
    surface = P2PSurface(beta, n, samples, p.support_min * n,
                         p.support_max * n, acc / (samples * beta * n))
    e1 = np.zeros(d)
    g_leg = np.empty(len(ts))
    g_sup = np.empty(len(ts))
    ann = np.empty(len(ts))
    lam = log_mgf(model, beta)
    for j, t in enumerate(ts):
        e1[0] = t
        g_leg[j] = legendre(surface, e1, method="sum")
        g_sup[j] = legendre(surface, e1, method="sup")
        ann[j] = (lam + kmod.kernel_log_mgf(p, beta * e1)) / beta
    g_mean = per_sample.mean(axis=0)
    if samples > 1:
        g_se = per_sample.std(axis=0, ddof=1) / math.sqrt(samples)
    else:
        g_se = np.full(len(ts), np.inf)
    return FieldCurve(beta, ts, g_leg, g_sup, g_mean, g_se, ann, surface)


def phase_grid(model: WeightModel, p: StepKernel, beta: float,
               h_points: Sequence, n_terms: int = 64) -> list:
    """Classify each field point; flag candidate bad-set points where
    the maximizer set K(h) is not a singleton."""
    out = []
    for h in h_points:
        rep = phase.classify(model, p, beta, h, n_terms)
        rec = rep.to_json()
        k_set = kmod.argmax_set(p, np.asarray(h, dtype=np.float64))
        rec["k_size"] = int(len(k_set))
        rec["bad_set_candidate"] = bool(len(k_set) > 1)
        out.append(rec)
    return out


def write_series_csv(series: dict, path) -> None:
    names = list(series)
    n = len(series[names[0]])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k"] + names)
        for k in range(n):
            w.writerow([k + 1] + [repr(float(series[nm][k]))
                                  for nm in names])


def write_curve_csv(curve: FieldCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "g_legendre", "g_sup", "g_mean", "g_se", "annealed",
                    "gap"])
        for j in range(len(curve.ts)):
            w.writerow([repr(float(curve.ts[j])),
                        repr(float(curve.g_legendre[j])),
                        repr(float(curve.g_sup[j])),
                        repr(float(curve.g_mean[j])),
                        repr(float(curve.g_se[j])),
                        repr(float(curve.annealed[j])),
                        repr(float(curve.annealed[j]
                                   - curve.g_legendre[j]))])
