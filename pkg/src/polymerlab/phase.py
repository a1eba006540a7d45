"""Analytic and semi-analytic phase classifiers for (beta, h).

Two sufficient criteria are implemented:

* the second-moment (L2) condition M2(beta) < 1/pi(q(h)), with the
  return probability pi computed from an exact finite-horizon return
  series plus a rigorous polynomial tail bound;
* the fractional-moment test min_theta r(theta) < 1, which certifies
  the low-temperature (strong disorder) regime.

Both are sufficient, not exhaustive; points certified by neither are
reported UNDETERMINED.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import zeta

from . import kernels as kmod
from .disorder import WeightModel, log_mgf, relative_entropy, \
    second_moment_ratio
from .errors import DimensionTooLow, InfiniteRange, NotSymmetric, NumericError
from .kernels import LatticeBasis, StepKernel

_CERT_MARGIN = 1e-9


def _generic_return_probs(dk: StepKernel, n_steps: int) -> np.ndarray:
    """Dense numpy convolution fallback for any dimension."""
    d = dk.d
    lo = dk.support_min
    hi = dk.support_max
    probs = np.exp(dk.logp)
    cur = np.ones((1,) * d)
    out = np.empty(n_steps)
    origin = -lo * 0
    for t in range(1, n_steps + 1):
        shape = tuple(((hi - lo) * t + 1).tolist())
        new = np.zeros(shape)
        for s, pr in zip(dk.steps, probs):
            off = s - lo
            sl = tuple(slice(o, o + m) for o, m in zip(off, cur.shape))
            new[sl] += pr * cur
        cur = new
        out[t - 1] = cur[tuple((-lo * t).tolist())]
    return out


def return_probs(dk: StepKernel, n_steps: int) -> np.ndarray:
    """P(T_t = 0), t = 1..n_steps, by exact slab convolution."""
    if dk.d == 3:
        from . import _fast
        return _fast.return_probs_3d(dk, n_steps)
    return _generic_return_probs(dk, n_steps)


def return_series(dk: StepKernel, basis: LatticeBasis,
                  n_terms: int = 64) -> tuple[float, float]:
    """(R_hat, tail_bound) with R = sum_{n>=1} P(T_n = 0).

    The tail uses the local-CLT decay P(T_n = 0) <= C n^{-d/2} with C
    calibrated as 1.5 times the largest n^{d/2} P(T_n=0) over the last
    10 computed terms, summed via the Hurwitz zeta function.
    """
    d = dk.d
    if d <= 2:
        raise DimensionTooLow(
            f"return series requires d >= 3, got d={d}")
    if not dk.is_symmetric():
        raise NotSymmetric("difference kernel must be symmetric")
    if not any(np.all(s == 0) for s in dk.steps):
        raise NotSymmetric("difference kernel must contain the zero step")
    probs = return_probs(dk, n_terms)
    r_hat = float(probs.sum())
    last = probs[-10:]
    ns = np.arange(n_terms - len(last) + 1, n_terms + 1, dtype=np.float64)
    c = 1.5 * float(np.max(last * ns ** (d / 2.0)))
    tail = c * float(zeta(d / 2.0, n_terms + 1))
    return r_hat, tail


def return_probability(r_hat: float, tail: float) -> tuple[float, float]:
    """pi = R/(1+R) with a one-sided error from the tail bound."""
    pi = r_hat / (1.0 + r_hat)
    pi_hi = (r_hat + tail) / (1.0 + r_hat + tail)
    return pi, pi_hi - pi


def l2_criterion(model: WeightModel, p: StepKernel, beta: float, h,
                 n_terms: int = 64) -> tuple[bool, dict]:
    """True iff M2(beta) < 1/(pi_hat + error): the tilted polymer is in
    the L2 (hence weak disorder) region."""
    q = kmod.tilt(p, beta, h) if beta != 0.0 or np.any(np.asarray(h) != 0) \
        else p
    dk = kmod.difference_walk(q)
    basis = kmod.lattice_basis(dk)
    r_hat, tail = return_series(dk, basis, n_terms)
    pi, pi_err = return_probability(r_hat, tail)
    m2 = second_moment_ratio(model, beta)
    bound = 1.0 / (pi + pi_err)
    report = {
        "M2": m2, "R": r_hat, "R_tail": tail,
        "pi": pi, "pi_err": pi_err,
        "l2_margin": bound - m2,
    }
    return m2 < bound, report


def fractional_moment(model: WeightModel, q: StepKernel, beta: float,
                      theta: float) -> float:
    """r(theta) = M(theta*beta)/M(beta)^theta * sum_x q(x)^theta."""
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    log_r = (log_mgf(model, theta * beta) - theta * log_mgf(model, beta)
             + _logsumexp(theta * q.logp))
    return math.exp(log_r)


def _logsumexp(a: np.ndarray) -> float:
    m = float(np.max(a))
    return m + math.log(float(np.sum(np.exp(a - m))))


def strong_disorder_test(model: WeightModel, p: StepKernel, beta: float,
                         h) -> tuple[bool, float, float, dict]:
    """Minimize r(theta) over theta in (0,1).

    r is log-convex with r(1) = 1 and d/dtheta log r at 1 equal to
    H(Q_beta|P) - H(q(h)); a minimum strictly below 1 certifies the
    low-temperature regime.  Returns (certified, theta_star, r_min,
    report).
    """
    q = kmod.tilt(p, beta, h) if beta != 0.0 or np.any(np.asarray(h) != 0) \
        else p

    def objective(theta):
        return (log_mgf(model, theta * beta)
                - theta * log_mgf(model, beta)
                + _logsumexp(theta * q.logp))

    res = minimize_scalar(objective, bounds=(1e-9, 1.0), method="bounded",
                          options={"xatol": 1e-8})
    theta_star = float(res.x)
    r_min = math.exp(float(res.fun))
    # endpoint check: the bounded minimizer stays interior by
    # construction, but r(theta) -> values >= ... near the ends; keep
    # the better of the interior minimum and a coarse grid as a guard
    grid = np.linspace(0.01, 0.99, 99)
    vals = np.array([objective(t) for t in grid])
    gi = int(np.argmin(vals))
    if vals[gi] < math.log(r_min):
        theta_star = float(grid[gi])
        r_min = math.exp(float(vals[gi]))
    h_weights = relative_entropy(model, beta)
    h_walk = kmod.shannon_entropy(q)
    report = {
        "theta_star": theta_star,
        "r_min": r_min,
        "H_weights": h_weights,
        "H_walk": h_walk,
        "entropy_sufficient": h_weights > h_walk,
        "entropy_margin": h_weights - h_walk,
    }
    return r_min < 1.0 - _CERT_MARGIN, theta_star, r_min, report


@dataclass
class PhaseReport:
    """Assembled per-point classification with all criterion values."""

    beta: float
    h: list
    M2: Optional[float]
    pi: Optional[float]
    pi_err: Optional[float]
    r_min: float
    theta_star: float
    H_weights: float
    H_walk: float
    H_K: Optional[float]
    classification: str
    margins: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "beta": self.beta, "h": list(self.h),
            "M2": self.M2, "pi": self.pi, "pi_err": self.pi_err,
            "r_min": self.r_min, "theta_star": self.theta_star,
            "H_weights": self.H_weights, "H_walk": self.H_walk,
            "H_K": self.H_K, "class": self.classification,
            **{k: v for k, v in self.margins.items()},
        }


def classify(model: WeightModel, p: StepKernel, beta: float, h,
             n_terms: int = 64) -> PhaseReport:
    """Run both sufficient criteria and assemble a PhaseReport.

    The criteria certify disjoint regimes; if both ever certified at
    once that would be a numerical contradiction and is raised as such.
    """
    h = np.atleast_1d(np.asarray(h, dtype=np.float64))
    l2_ok = False
    m2 = pi = pi_err = None
    margins = {}
    try:
        l2_ok, l2_rep = l2_criterion(model, p, beta, h, n_terms)
        m2, pi, pi_err = l2_rep["M2"], l2_rep["pi"], l2_rep["pi_err"]
        margins["l2_margin"] = l2_rep["l2_margin"]
    except DimensionTooLow:
        pass
    sd_ok, theta_star, r_min, sd_rep = strong_disorder_test(model, p, beta, h)
    margins["entropy_margin"] = sd_rep["entropy_margin"]
    margins["r_margin"] = 1.0 - r_min
    try:
        k_set = kmod.argmax_set(p, h)
        h_k = kmod.conditional_entropy(p, k_set)
    except InfiniteRange:
        h_k = None
    if l2_ok and sd_ok:
        raise NumericError(
            f"both phase certificates passed at beta={beta}, h={h.tolist()}")
    if l2_ok:
        cls = "L2_WEAK"
    elif sd_ok:
        cls = "ENTROPY_LOW_TEMP"
    else:
        cls = "UNDETERMINED"
    return PhaseReport(float(beta), h.tolist(), m2, pi, pi_err,
                       r_min, theta_star,
                       sd_rep["H_weights"], sd_rep["H_walk"], h_k,
                       cls, margins)
