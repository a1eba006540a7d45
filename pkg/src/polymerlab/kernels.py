"""Step kernels on Z^d: tilting, entropies, difference walks, lattice
bases, and the local-CLT reference density.

All kernel arithmetic happens in log space with a single exp at the
end, so tilts with large fields do not overflow.  Kernels are immutable
after construction and share freely across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import (DimensionTooLow, EmptyK, EmptySupport, InfiniteRange,
                     NotSymmetric, NumericError, RankDeficient,
                     SingularCovariance)

_DG_TAIL = 1e-12
_DG_MAX_RADIUS = 64


@dataclass(frozen=True)
class StepKernel:
    """Probability kernel on Z^d given by support points and log-probs."""

    steps: np.ndarray          # (m, d) int64
    logp: np.ndarray           # (m,)
    finite_range: bool = True
    kind: str = "table"

    def __post_init__(self):
        steps = np.atleast_2d(np.asarray(self.steps, dtype=np.int64))
        logp = np.asarray(self.logp, dtype=np.float64)
        if steps.shape[0] != logp.shape[0]:
            raise ValueError("steps/probabilities length mismatch")
        if steps.shape[0] == 0:
            raise EmptySupport("kernel has empty support")
        total = float(np.exp(logsumexp(logp)))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"kernel probabilities sum to {total}, not 1")
        order = np.lexsort(steps.T[::-1])
        object.__setattr__(self, "steps", steps[order])
        object.__setattr__(self, "logp", logp[order])

    @property
    def d(self) -> int:
        return self.steps.shape[1]

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.logp)

    @property
    def support_min(self) -> np.ndarray:
        return self.steps.min(axis=0)

    @property
    def support_max(self) -> np.ndarray:
        return self.steps.max(axis=0)

    def mean(self) -> np.ndarray:
        return self.probs @ self.steps

    def covariance(self) -> np.ndarray:
        p = self.probs
        m = p @ self.steps
        xc = self.steps - m
        return (xc * p[:, None]).T @ xc

    def is_symmetric(self, tol: float = 1e-14) -> bool:
        table = {tuple(s): lp for s, lp in zip(map(tuple, self.steps), self.logp)}
        for s, lp in table.items():
            neg = tuple(-c for c in s)
            if neg not in table or abs(table[neg] - lp) > tol:
                return False
        return True


@dataclass(frozen=True)
class TiltedKernel(StepKernel):
    """Kernel q(h, x) = exp(beta*x.h) p(x) / M_p(beta*h), with cached
    drift and one-step covariance."""

    base: StepKernel = None
    beta: float = 0.0
    h: np.ndarray = None
    log_mgf_at_tilt: float = 0.0       # Lambda_p(beta*h)
    drift: np.ndarray = field(default=None)      # m_q
    step_cov: np.ndarray = field(default=None)   # Sigma_q

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "drift", self.mean())
        object.__setattr__(self, "step_cov", self.covariance())


def simple_walk(d: int) -> StepKernel:
    """Standard nearest-neighbor walk: each of the 2d unit steps with
    probability 1/(2d)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    steps = np.vstack([np.eye(d, dtype=np.int64), -np.eye(d, dtype=np.int64)])
    logp = np.full(2 * d, -math.log(2 * d))
    return StepKernel(steps, logp, finite_range=True, kind="simple")


def table_kernel(steps, probs) -> StepKernel:
    steps = np.atleast_2d(np.asarray(steps, dtype=np.int64))
    probs = np.asarray(probs, dtype=np.float64)
    if np.any(probs <= 0):
        raise ValueError("table kernel probabilities must be > 0")
    return StepKernel(steps, np.log(probs), finite_range=True, kind="table")


def _dg_box(d: int, center: np.ndarray):
    """Support box and unnormalized log-weights exp(-|x|^2/2) covering a
    Gaussian centered at `center` and the base Gaussian at 0, truncated
    so the discarded tail mass is below _DG_TAIL."""
    center = np.asarray(center, dtype=np.float64)
    for radius in range(8, _DG_MAX_RADIUS + 1):
        lo = np.minimum(0.0, center).astype(np.int64) - radius
        hi = np.maximum(0.0, center).astype(np.int64) + radius
        # 1-d tail of exp(-(x-c)^2/2) beyond the box, worst center offset 0.5
        edge = radius - 1.0
        tail_1d = math.exp(-0.5 * edge * edge) * 4.0
        if tail_1d < _DG_TAIL / max(d, 1):
            grids = np.meshgrid(*[np.arange(l, u + 1) for l, u in zip(lo, hi)],
                                indexing="ij")
            steps = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
            logw = -0.5 * np.sum(steps.astype(np.float64) ** 2, axis=1)
            return steps, logw
    raise NumericError("discrete Gaussian truncation cannot reach tolerance "
                       f"within radius {_DG_MAX_RADIUS}")


def discrete_gaussian(d: int) -> StepKernel:
    """Kernel p(x) = C exp(-|x|^2/2) on Z^d, truncated far below any
    statistical tolerance."""
    steps, logw = _dg_box(d, np.zeros(d))
    logp = logw - logsumexp(logw)
    return StepKernel(steps, logp, finite_range=False, kind="discrete_gaussian")


def kernel_log_mgf(k: StepKernel, t) -> float:
    """Lambda_p(t) = log sum_x p(x) exp(t.x) over the kernel support."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    return float(logsumexp(k.logp + k.steps @ t))


def tilt(p: StepKernel, beta: float, h) -> TiltedKernel:
    """Exponentially tilted kernel q with tilt exponent beta*h.x."""
    if beta <= 0:
        raise ValueError("beta must be > 0")
    h = np.atleast_1d(np.asarray(h, dtype=np.float64))
    if h.shape != (p.d,):
        raise ValueError(f"field must have dimension {p.d}")
    if p.kind == "discrete_gaussian":
        # rebuild the truncation window around the tilted center beta*h
        steps, logw = _dg_box(p.d, beta * h)
        base_norm = logsumexp(-0.5 * np.sum(
            _dg_box(p.d, np.zeros(p.d))[0].astype(np.float64) ** 2, axis=1))
        logp_on_box = logw - base_norm
        lam = float(logsumexp(logp_on_box + beta * (steps @ h)))
        logq = logp_on_box + beta * (steps @ h) - lam
        return TiltedKernel(steps, logq, finite_range=False,
                            kind=p.kind, base=p, beta=beta, h=h,
                            log_mgf_at_tilt=lam)
    lam = kernel_log_mgf(p, beta * h)
    logq = p.logp + beta * (p.steps @ h) - lam
    return TiltedKernel(p.steps, logq, finite_range=p.finite_range,
                        kind=p.kind, base=p, beta=beta, h=h,
                        log_mgf_at_tilt=lam)


def shannon_entropy(k: StepKernel) -> float:
    """-sum q(x) log q(x)."""
    return float(-np.sum(np.exp(k.logp) * k.logp))


def argmax_set(p: StepKernel, h) -> np.ndarray:
    """K(h): support points maximizing h.x, within 1e-9*(1+|h|)."""
    if not p.finite_range:
        raise InfiniteRange("argmax over an infinite-range kernel is undefined")
    h = np.atleast_1d(np.asarray(h, dtype=np.float64))
    proj = p.steps @ h
    tol = 1e-9 * (1.0 + float(np.linalg.norm(h)))
    return p.steps[proj >= proj.max() - tol]


def conditional_entropy(p: StepKernel, K) -> float:
    """Shannon entropy of the walk conditioned to step inside K."""
    K = np.atleast_2d(np.asarray(K, dtype=np.int64))
    if K.shape[0] == 0:
        raise EmptyK("conditioning set is empty")
    keys = {tuple(s): lp for s, lp in zip(map(tuple, p.steps), p.logp)}
    logs = []
    for row in K:
        key = tuple(row)
        if key not in keys:
            raise ValueError(f"{key} not in kernel support")
        logs.append(keys[key])
    logs = np.array(logs)
    log_pk = logsumexp(logs)
    cond = logs - log_pk
    return float(-np.sum(np.exp(cond) * cond))


def entropy_limit_check(p: StepKernel, h, lambdas) -> list[float]:
    """Entropies of q(lambda*h) along a schedule of lambdas; for a
    finite-range kernel they approach the conditional entropy on K(h)."""
    if argmax_set(p, h).shape[0] == 0:
        raise EmptySupport("argmax set is empty")
    h = np.asarray(h, dtype=np.float64)
    return [shannon_entropy(tilt(p, 1.0, lam * h)) for lam in lambdas]


def gaussian_entropy_exact(t: float, d: int) -> float:
    """Entropy of the tilted discrete-Gaussian walk by the exact series:
    d * (ln C0 + C2/(2 C0)) with C0, C2 summed over the shifted lattice
    Z - t, truncated when terms fall below 1e-16."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    frac = float(t) - math.floor(float(t))
    c0 = c2 = 0.0
    n = 0
    while True:
        done = True
        for x in ({-n - frac, n - frac} if n else {-frac}):
            w = math.exp(-0.5 * x * x)
            if w >= 1e-16:
                c0 += w
                c2 += x * x * w
                done = False
        if n and done:
            break
        n += 1
    return d * (math.log(c0) + c2 / (2.0 * c0))


def difference_walk(k: StepKernel) -> StepKernel:
    """Kernel of X - X' for independent X, X' ~ k; symmetric, 0 in
    support."""
    diffs = {}
    for s1, lp1 in zip(k.steps, k.logp):
        for s2, lp2 in zip(k.steps, k.logp):
            key = tuple(s1 - s2)
            diffs.setdefault(key, []).append(lp1 + lp2)
    steps = np.array(sorted(diffs), dtype=np.int64)
    logp = np.array([logsumexp(diffs[tuple(s)]) for s in steps])
    logp -= logsumexp(logp)    # absorb truncation slack for infinite-range bases
    return StepKernel(steps, logp, finite_range=k.finite_range, kind="table")


@dataclass(frozen=True)
class LatticeBasis:
    """Integer matrix whose columns generate the Z-span of a symmetric
    kernel's support; canonical (Hermite-normal-form) representative."""

    A: np.ndarray

    @property
    def det(self) -> int:
        return abs(int(round(np.linalg.det(self.A.astype(np.float64)))))

    def contains(self, x, tol: float = 1e-9) -> bool:
        y = np.linalg.solve(self.A.astype(np.float64),
                            np.asarray(x, dtype=np.float64))
        return bool(np.all(np.abs(y - np.round(y)) < tol))


def _hermite_columns(M: np.ndarray) -> np.ndarray:
    """Column-style Hermite normal form of an integer matrix (d x m).
    Returns a lower-triangular d x d basis; raises if rank < d."""
    M = M.astype(object).copy()
    d, m = M.shape
    c = 0
    for i in range(d):
        # clear row i to a single positive pivot among columns >= c
        while True:
            nz = [j for j in range(c, m) if M[i, j] != 0]
            if not nz:
                raise RankDeficient("support spans a lattice of lower dimension")
            if len(nz) == 1:
                break
            nz.sort(key=lambda j: abs(M[i, j]))
            jp = nz[0]
            for j in nz[1:]:
                q = M[i, j] // M[i, jp]
                M[:, j] -= q * M[:, jp]
        jp = nz[0]
        M[:, [c, jp]] = M[:, [jp, c]]
        if M[i, c] < 0:
            M[:, c] = -M[:, c]
        # reduce earlier columns against the new pivot
        for j in range(c):
            q = M[i, j] // M[i, c]
            M[:, j] -= q * M[:, c]
        c += 1
    return M[:, :d].astype(np.int64)


def lattice_basis(p: StepKernel) -> LatticeBasis:
    """Basis of the Z-span of the support; requires a symmetric kernel
    with 0 in the support (difference walks qualify)."""
    if not any(np.all(s == 0) for s in p.steps):
        raise NotSymmetric("kernel must contain 0 in its support")
    if not p.is_symmetric():
        raise NotSymmetric("kernel must be symmetric about the origin")
    cols = p.steps[np.any(p.steps != 0, axis=1)].T
    if cols.shape[1] == 0:
        raise RankDeficient("support is {0}")
    return LatticeBasis(_hermite_columns(cols))


def local_clt_density(basis: LatticeBasis, Sigma, m, n: int, x) -> float:
    """Gaussian reference density for P(S_n = x) on the sublattice
    A Z^d: det(Sigma^{-1/2} A) / (2 pi n)^{d/2} *
    exp(-(x - m n) . Sigma^{-1} (x - m n) / (2 n))."""
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=np.float64))
    m = np.atleast_1d(np.asarray(m, dtype=np.float64))
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    d = Sigma.shape[0]
    if n < 1:
        raise ValueError("n must be >= 1")
    sign, logdet = np.linalg.slogdet(Sigma)
    if sign <= 0 or np.any(np.linalg.eigvalsh(Sigma) <= 0):
        raise SingularCovariance("covariance must be positive definite")
    if not basis.contains(x):
        raise ValueError("x is not on the sublattice A Z^d")
    z = x - m * n
    quad = float(z @ np.linalg.solve(Sigma, z))
    pref = basis.det * math.exp(-0.5 * logdet) / (2.0 * math.pi * n) ** (d / 2.0)
    return pref * math.exp(-quad / (2.0 * n))


def kernel_from_config(spec: dict) -> StepKernel:
    kind = spec.get("kind")
    if kind == "simple":
        return simple_walk(int(spec["d"]))
    if kind == "table":
        steps = [s for s, _ in spec["steps"]]
        probs = [pr for _, pr in spec["steps"]]
        k = table_kernel(steps, probs)
        if k.d != int(spec["d"]):
            raise ValueError("table steps do not match declared dimension")
        return k
    if kind == "discrete_gaussian":
        return discrete_gaussian(int(spec["d"]))
    raise ValueError(f"unknown kernel kind {kind!r}")


def kernel_to_config(k: StepKernel) -> dict:
    if k.kind == "simple":
        return {"kind": "simple", "d": k.d}
    if k.kind == "discrete_gaussian":
        return {"kind": "discrete_gaussian", "d": k.d}
    return {"kind": "table", "d": k.d,
            "steps": [[list(map(int, s)), float(p)]
                      for s, p in zip(k.steps, k.probs)]}
