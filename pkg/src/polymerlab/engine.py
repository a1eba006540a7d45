"""Log-space dynamic programming for partition functions, the
normalized martingale, Gibbs endpoint statistics, and localization.

Two representations of the slab are supported:

* ``log``: dense log Z over the window, exact; the reference
  implementation used by the oracle tests.
* ``linear``: Z relative to a running scalar offset (renormalized by
  the slab maximum each step).  Sites whose relative mass falls below
  the double-precision floor read as -inf; their true mass is below
  exp(-745) of the maximum, far under any statistical tolerance.

A numba fast path (``_fast``) reproduces the linear mode for
nearest-neighbor kernels in d = 1 and d = 3; it is validated against
the generic stepper in the test suite.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .disorder import Environment, WeightModel, log_mgf
from .errors import ResourceError
from .kernels import StepKernel, TiltedKernel

_DEFAULT_BUDGET = 4 * 1024 ** 3


def memory_budget(explicit: Optional[int] = None) -> int:
    if explicit is not None:
        return int(explicit)
    return int(os.environ.get("POLYMERLAB_MEM_BUDGET", _DEFAULT_BUDGET))


def _window_bytes(kernel: StepKernel, n: int) -> int:
    span = (kernel.support_max - kernel.support_min) * n + 1
    return 2 * int(np.prod(span.astype(np.float64))) * 8


def check_budget(kernel: StepKernel, n: int, budget: Optional[int] = None):
    need = _window_bytes(kernel, n)
    cap = memory_budget(budget)
    if need > cap:
        raise ResourceError(
            f"window for n={n} needs ~{need} bytes, budget is {cap}")


@dataclass
class PolymerField:
    """Slab of (log) partition-function values over the reachable window."""

    kernel: StepKernel
    beta: float
    env: Environment
    t: int
    lo: np.ndarray
    hi: np.ndarray
    mode: str                 # "log" | "linear"
    data: np.ndarray          # logZ, or Z/exp(offset)
    offset: float = 0.0       # linear mode only
    weight_checksum: float = 0.0

    def logz(self) -> np.ndarray:
        """Dense log Z_n(x) over the window (-inf where unreachable)."""
        if self.mode == "log":
            return self.data.copy()
        with np.errstate(divide="ignore"):
            return self.offset + np.log(self.data)

    def logz_pl(self) -> float:
        """Point-to-level log Z_n."""
        if self.mode == "log":
            return _logsumexp(self.data)
        return self.offset + math.log(float(self.data.sum()))

    def coords(self, axis: int) -> np.ndarray:
        return np.arange(self.lo[axis], self.hi[axis] + 1)


def _logsumexp(a: np.ndarray) -> float:
    m = float(a.max())
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.exp(a - m).sum()))


def make_field(kernel: StepKernel, beta: float, env: Environment,
               mode: str = "log") -> PolymerField:
    d = kernel.d
    lo = np.zeros(d, dtype=np.int64)
    hi = np.zeros(d, dtype=np.int64)
    if mode == "log":
        data = np.zeros((1,) * d)
    else:
        data = np.ones((1,) * d)
    return PolymerField(kernel, float(beta), env, 0, lo, hi, mode, data)


@dataclass
class StepInfo:
    """Pre-weight endpoint data from one transfer step: the probability
    of the most likely next site under the Gibbs measure at the previous
    time, folded with one free kernel step."""

    J: float
    A: np.ndarray


def step(fld: PolymerField) -> tuple[PolymerField, StepInfo]:
    """Advance the field one time step: convolve with the kernel and
    multiply in the new layer of Gibbs weights."""
    k = fld.kernel
    t = fld.t + 1
    lo = fld.lo + k.support_min
    hi = fld.hi + k.support_max
    shape = tuple((hi - lo + 1).tolist())
    old_shape = fld.data.shape

    if fld.mode == "linear":
        conv = np.zeros(shape)
        for s, lp in zip(k.steps, k.logp):
            off = s - k.support_min
            sl = tuple(slice(o, o + n) for o, n in zip(off, old_shape))
            conv[sl] += math.exp(lp) * fld.data
        total = float(conv.sum())
        flat_arg = int(np.argmax(conv))
        A = np.array(np.unravel_index(flat_arg, shape)) + lo
        J = float(conv.flat[flat_arg]) / total
        if fld.beta != 0.0:
            w = fld.env.weight_box(t, lo, hi)
            fld_checksum = fld.weight_checksum + float(w.sum())
            conv *= np.exp(fld.beta * w)
        else:
            fld_checksum = fld.weight_checksum
        mx = float(conv.max())
        conv /= mx
        new = PolymerField(k, fld.beta, fld.env, t, lo, hi, "linear", conv,
                           fld.offset + math.log(mx), fld_checksum)
        return new, StepInfo(J, A)

    conv = np.full(shape, -np.inf)
    for s, lp in zip(k.steps, k.logp):
        off = s - k.support_min
        sl = tuple(slice(o, o + n) for o, n in zip(off, old_shape))
        np.logaddexp(conv[sl], fld.data + lp, out=conv[sl])
    lse = _logsumexp(conv)
    flat_arg = int(np.argmax(conv))
    A = np.array(np.unravel_index(flat_arg, shape)) + lo
    J = math.exp(float(conv.flat[flat_arg]) - lse)
    fld_checksum = fld.weight_checksum
    if fld.beta != 0.0:
        w = fld.env.weight_box(t, lo, hi)
        fld_checksum += float(w.sum())
        conv += fld.beta * w
    new = PolymerField(k, fld.beta, fld.env, t, lo, hi, "log", conv,
                       0.0, fld_checksum)
    return new, StepInfo(J, A)


def normalized_martingale(fld: PolymerField, model: WeightModel) -> float:
    """W_n = Z_n / M(beta)^n for the kernel-normalized partition
    function; the field term is already absorbed into the tilted kernel."""
    return math.exp(fld.logz_pl() - fld.t * log_mgf(model, fld.beta))


@dataclass
class EndpointMeasure:
    """Gibbs endpoint distribution at time n, with cached statistics."""

    t: int
    lo: np.ndarray
    hi: np.ndarray
    mu: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    mean_abs: float
    mean_sq: float
    max_prob: float
    max_site: np.ndarray
    J: float                  # max over z of (mu * kernel)(z): paper J_{n+1}
    A: np.ndarray

    def moments(self):
        return self.mean, self.cov


def endpoint_measure(fld: PolymerField) -> EndpointMeasure:
    d = fld.kernel.d
    if fld.mode == "log":
        m = float(fld.data.max())
        mu = np.exp(fld.data - m)
    else:
        mu = fld.data.copy()
    mu /= mu.sum()
    grids = np.meshgrid(*[fld.coords(j) for j in range(d)], indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1).astype(np.float64)
    w = mu.ravel()
    mean = w @ coords
    xc = coords - mean
    cov = (xc * w[:, None]).T @ xc
    sq = w @ np.sum(coords ** 2, axis=1)
    mean_abs = float(w @ np.sqrt(np.sum(coords ** 2, axis=1)))
    flat_arg = int(np.argmax(w))
    max_site = coords[flat_arg].astype(np.int64)
    # fold one free kernel step (no weight) for the localization functional
    k = fld.kernel
    shape = tuple((fld.hi - fld.lo + 1 + k.support_max - k.support_min).tolist())
    folded = np.zeros(shape)
    for s, lp in zip(k.steps, k.logp):
        off = s - k.support_min
        sl = tuple(slice(o, o + n) for o, n in zip(off, mu.shape))
        folded[sl] += math.exp(lp) * mu
    jarg = int(np.argmax(folded))
    A = (np.array(np.unravel_index(jarg, shape))
         + fld.lo + k.support_min).astype(np.int64)
    return EndpointMeasure(fld.t, fld.lo.copy(), fld.hi.copy(), mu, mean, cov,
                           mean_abs, float(sq), float(w[flat_arg]), max_site,
                           float(folded.flat[jarg]), A)


def localization_average(j_series) -> float:
    """Cesaro average (1/n) sum_{t<=n} J_t."""
    j = np.asarray(j_series, dtype=np.float64)
    if j.size == 0:
        raise ValueError("empty J series")
    return float(j.mean())


@dataclass
class RunResult:
    """Per-step records of one polymer run in a fixed environment."""

    n: int
    logz_pl: np.ndarray             # (n,)
    J: np.ndarray                   # (n,) paper convention: J_t from mu_{t-1}
    A: np.ndarray                   # (n, d)
    mean_vec: Optional[np.ndarray] = None    # (n, d)
    mean_abs: Optional[np.ndarray] = None    # (n,)
    mean_sq: Optional[np.ndarray] = None     # (n,)
    final_mean: Optional[np.ndarray] = None  # (d,)
    final_cov: Optional[np.ndarray] = None   # (d, d)
    final_field: Optional[PolymerField] = None
    weight_checksum: float = 0.0

    def martingale(self, model: WeightModel, beta: float) -> np.ndarray:
        lam = log_mgf(model, beta)
        return np.exp(self.logz_pl - lam * np.arange(1, self.n + 1))


def run_polymer(kernel: StepKernel, beta: float, env: Environment, n: int,
                *, stats: bool = False, keep_field: bool = False,
                mode: str = "auto", force_generic: bool = False,
                budget: Optional[int] = None) -> RunResult:
    """Run the transfer recursion for n steps and collect records.

    Dispatches to the numba fast path for nearest-neighbor kernels with
    uniform01 / bernoulli / pointmass weights unless force_generic is
    set.
    """
    check_budget(kernel, n, budget)
    if not force_generic:
        from . import _fast
        if _fast.supported(kernel, env.model):
            return _fast.run_nn(kernel, beta, env, n, stats=stats,
                                keep_field=keep_field)
    if mode == "auto":
        mode = "log"
    d = kernel.d
    fld = make_field(kernel, beta, env, mode)
    logz = np.empty(n)
    jser = np.empty(n)
    aser = np.empty((n, d), dtype=np.int64)
    mv = np.empty((n, d)) if stats else None
    ma = np.empty(n) if stats else None
    ms = np.empty(n) if stats else None
    for t in range(1, n + 1):
        fld, info = step(fld)
        logz[t - 1] = fld.logz_pl()
        jser[t - 1] = info.J
        aser[t - 1] = info.A
        if stats:
            em = endpoint_measure(fld)
            mv[t - 1] = em.mean
            ma[t - 1] = em.mean_abs
            ms[t - 1] = em.mean_sq
    final = endpoint_measure(fld)
    return RunResult(n, logz, jser, aser, mv, ma, ms,
                     final.mean, final.cov,
                     fld if keep_field else None, fld.weight_checksum)


def endpoint_clt_check(model: WeightModel, p: StepKernel, beta: float, h,
                       n: int, samples: int, seed: int,
                       budget: Optional[int] = None) -> dict:
    """Compare rescaled Gibbs endpoint moments against the Gaussian
    limit with the tilted kernel's drift and one-step covariance.

    Emits a phase_mismatch warning flag when the second-moment
    criterion does not certify the parameters.
    """
    from . import kernels as kmod
    from . import phase

    q = kmod.tilt(p, beta, h)
    certified, _ = phase.l2_criterion(model, p, beta, h)
    mq, Sq = q.drift, q.step_cov
    d = p.d
    per_sample = []
    for s in range(samples):
        res = run_polymer(q, beta, Environment(model, seed, s), n,
                          budget=budget)
        mean = res.final_mean
        cov = res.final_cov
        z = (mean - n * mq) / math.sqrt(n)
        sec = cov / n + np.outer(z, z)     # <(X-nm)(X-nm)^T>/n
        per_sample.append((mean, z, sec))
    mean_drift = np.mean([m for m, _, _ in per_sample], axis=0) / n
    zbar = np.mean([z for _, z, _ in per_sample], axis=0)
    sec_bar = np.mean([s2 for _, _, s2 in per_sample], axis=0)
    report = {
        "certified_l2": bool(certified),
        "phase_mismatch": not certified,
        "n": n, "samples": samples,
        "drift_target": mq.tolist(),
        "endpoint_drift": mean_drift.tolist(),
        "centered_mean": zbar.tolist(),
        "second_moment": sec_bar.tolist(),
        "second_moment_target": Sq.tolist(),
        "abs_sq_over_n": float(np.trace(sec_bar)),
        "trace_target": float(np.trace(Sq)),
        "cross_moment": float(sec_bar[0, 1]) if d >= 2 else 0.0,
    }
    return report
