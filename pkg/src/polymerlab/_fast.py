"""Numba fast paths for the heavy workloads.

Covers nearest-neighbor kernels (the simple walk and its tilts) with
uniform01 / bernoulli / pointmass weights in d = 1 and d = 3, plus the
difference-walk return-probability convolution and a Monte Carlo
return-count walker.

The weight hash re-implements the arithmetic of ``_rng`` scalar-wise;
the test suite checks bit-identical agreement with the numpy path.
All slab recursions use the scaled-linear representation described in
``engine``: values are stored relative to the running slab maximum, a
scalar log offset tracks the scale, and sites more than ~745 nats
below the maximum flush to zero (mass below any tolerance in use).
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

from ._rng import _M1, _M2, _K_SAMPLE, _K_TIME, _K_COORD
from .disorder import Environment

_U = np.uint64
_S30, _S27, _S31, _S11 = _U(30), _U(27), _U(31), _U(11)
_INV53 = 1.0 / (1 << 53)

_FAM_CODE = {"uniform01": 0, "bernoulli": 1, "pointmass": 2}


@nb.njit(inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@nb.njit(inline="always")
def _base(seed, sample, t):
    h = _mix(_U(seed) ^ _M2)
    h = _mix(h ^ (_U(sample) * _K_SAMPLE))
    return _mix(h ^ (_U(t) * _K_TIME))


@nb.njit(inline="always")
def _unit(h):
    return (np.float64(h >> _S11) + 0.5) * _INV53


@nb.njit(cache=True, fastmath=True)
def _run_d1(n, qm, qp, beta, fam, par, seed, sample, want_stats, want_final,
            logz, jser, aser, mvec, mabs, msq, fmean, covout, final):
    W = 2 * n + 3
    a = np.zeros(W)
    b = np.zeros(W)
    a[n + 1] = 1.0
    prev, cur = a, b
    off = 0.0
    inv = 1.0
    ebeta = math.exp(beta)
    epc = math.exp(beta * par) if fam == 2 else 1.0
    for t in range(1, n + 1):
        base = _base(seed, sample, t)
        convmax = -1.0
        convarg = 0
        convsum = 0.0
        rawmax = -1.0
        rawsum = 0.0
        sx = 0.0
        sax = 0.0
        sxx = 0.0
        collect = want_stats or t == n
        for x in range(-t, t + 1, 2):
            i = x + n + 1
            c = (qm * prev[i + 1] + qp * prev[i - 1]) * inv
            convsum += c
            if c > convmax:
                convmax = c
                convarg = x
            if beta == 0.0:
                v = c
            elif fam == 2:
                v = c * epc
            else:
                hh = _mix(base ^ (_U(np.int64(x)) * _K_COORD))
                u = _unit(hh)
                if fam == 0:
                    v = c * math.exp(beta * u)
                else:
                    v = c * ebeta if u < par else c
            cur[i] = v
            rawsum += v
            if v > rawmax:
                rawmax = v
            if collect:
                sx += v * x
                sax += v * abs(x)
                sxx += v * x * x
        logz[t - 1] = off + math.log(rawsum)
        jser[t - 1] = convmax / convsum
        aser[t - 1, 0] = convarg
        if want_stats:
            mvec[t - 1, 0] = sx / rawsum
            mabs[t - 1] = sax / rawsum
            msq[t - 1] = sxx / rawsum
        if t == n:
            m1 = sx / rawsum
            fmean[0] = m1
            covout[0, 0] = sxx / rawsum - m1 * m1
        off += math.log(rawmax)
        inv = 1.0 / rawmax
        prev, cur = cur, prev
    if want_final:
        scale = inv
        for x in range(-n, n + 1):
            i = x + n + 1
            if (x + n) % 2 == 0:
                final[i] = prev[i] * scale
            else:
                final[i] = 0.0
    return off


@nb.njit(cache=True, fastmath=True)
def _run_d3(n, q, beta, fam, par, seed, sample, want_stats, want_final,
            logz, jser, aser, mvec, mabs, msq, fmean, covout, final):
    W = 2 * n + 3
    a = np.zeros((W, W, W))
    b = np.zeros((W, W, W))
    a[n + 1, n + 1, n + 1] = 1.0
    prev, cur = a, b
    off = 0.0
    inv = 1.0
    q0, q1, q2, q3, q4, q5 = q[0], q[1], q[2], q[3], q[4], q[5]
    ebeta = math.exp(beta)
    epc = math.exp(beta * par) if fam == 2 else 1.0
    for t in range(1, n + 1):
        base = _base(seed, sample, t)
        convmax = -1.0
        a1 = 0
        a2 = 0
        a3 = 0
        convsum = 0.0
        rawmax = -1.0
        rawsum = 0.0
        s1 = 0.0
        s2 = 0.0
        s3 = 0.0
        s11 = 0.0
        s22 = 0.0
        s33 = 0.0
        s12 = 0.0
        s13 = 0.0
        s23 = 0.0
        sax = 0.0
        collect = want_stats or t == n
        for x1 in range(-t, t + 1):
            h1 = _mix(base ^ (_U(np.int64(x1)) * _K_COORD))
            r1 = t - abs(x1)
            i1 = x1 + n + 1
            for x2 in range(-r1, r1 + 1):
                h2 = _mix(h1 ^ (_U(np.int64(x2)) * _K_COORD))
                r2 = r1 - abs(x2)
                i2 = x2 + n + 1
                for x3 in range(-r2, r2 + 1, 2):
                    i3 = x3 + n + 1
                    c = (q0 * prev[i1 + 1, i2, i3]
                         + q1 * prev[i1 - 1, i2, i3]
                         + q2 * prev[i1, i2 + 1, i3]
                         + q3 * prev[i1, i2 - 1, i3]
                         + q4 * prev[i1, i2, i3 + 1]
                         + q5 * prev[i1, i2, i3 - 1]) * inv
                    convsum += c
                    if c > convmax:
                        convmax = c
                        a1 = x1
                        a2 = x2
                        a3 = x3
                    if beta == 0.0:
                        v = c
                    elif fam == 2:
                        v = c * epc
                    else:
                        hh = _mix(h2 ^ (_U(np.int64(x3)) * _K_COORD))
                        u = _unit(hh)
                        if fam == 0:
                            v = c * math.exp(beta * u)
                        else:
                            v = c * ebeta if u < par else c
                    cur[i1, i2, i3] = v
                    rawsum += v
                    if v > rawmax:
                        rawmax = v
                    if collect:
                        s1 += v * x1
                        s2 += v * x2
                        s3 += v * x3
                        s11 += v * x1 * x1
                        s22 += v * x2 * x2
                        s33 += v * x3 * x3
                        s12 += v * x1 * x2
                        s13 += v * x1 * x3
                        s23 += v * x2 * x3
                        sax += v * math.sqrt(
                            float(x1 * x1 + x2 * x2 + x3 * x3))
        logz[t - 1] = off + math.log(rawsum)
        jser[t - 1] = convmax / convsum
        aser[t - 1, 0] = a1
        aser[t - 1, 1] = a2
        aser[t - 1, 2] = a3
        if want_stats:
            mvec[t - 1, 0] = s1 / rawsum
            mvec[t - 1, 1] = s2 / rawsum
            mvec[t - 1, 2] = s3 / rawsum
            mabs[t - 1] = sax / rawsum
            msq[t - 1] = (s11 + s22 + s33) / rawsum
        if t == n:
            m1 = s1 / rawsum
            m2 = s2 / rawsum
            m3 = s3 / rawsum
            fmean[0] = m1
            fmean[1] = m2
            fmean[2] = m3
            covout[0, 0] = s11 / rawsum - m1 * m1
            covout[1, 1] = s22 / rawsum - m2 * m2
            covout[2, 2] = s33 / rawsum - m3 * m3
            covout[0, 1] = s12 / rawsum - m1 * m2
            covout[1, 0] = covout[0, 1]
            covout[0, 2] = s13 / rawsum - m1 * m3
            covout[2, 0] = covout[0, 2]
            covout[1, 2] = s23 / rawsum - m2 * m3
            covout[2, 1] = covout[1, 2]
        off += math.log(rawmax)
        inv = 1.0 / rawmax
        prev, cur = cur, prev
    if want_final:
        scale = inv
        for x1 in range(-n, n + 1):
            r1 = n - abs(x1)
            i1 = x1 + n + 1
            for x2 in range(-n, n + 1):
                i2 = x2 + n + 1
                r2 = r1 - abs(x2)
                for x3 in range(-n, n + 1):
                    i3 = x3 + n + 1
                    if r2 >= abs(x3) and (x1 + x2 + x3 + n) % 2 == 0:
                        final[i1, i2, i3] = prev[i1, i2, i3] * scale
                    else:
                        final[i1, i2, i3] = 0.0
    return off


@nb.njit(cache=True, fastmath=True)
def _return_probs_3d(offsets, probs, n_steps, rad, l1):
    H = rad * n_steps + rad
    W = 2 * H + 1
    prev = np.zeros((W, W, W))
    cur = np.zeros((W, W, W))
    prev[H, H, H] = 1.0
    m = offsets.shape[0]
    out = np.empty(n_steps)
    for t in range(1, n_steps + 1):
        b1 = min(l1 * t, H - rad)
        for x1 in range(-b1, b1 + 1):
            r1 = l1 * t - abs(x1)
            i1 = x1 + H
            for x2 in range(-min(r1, b1), min(r1, b1) + 1):
                r2 = r1 - abs(x2)
                i2 = x2 + H
                for x3 in range(-min(r2, b1), min(r2, b1) + 1):
                    i3 = x3 + H
                    acc = 0.0
                    for k in range(m):
                        acc += probs[k] * prev[i1 - offsets[k, 0],
                                               i2 - offsets[k, 1],
                                               i3 - offsets[k, 2]]
                    cur[i1, i2, i3] = acc
        out[t - 1] = cur[H, H, H]
        prev, cur = cur, prev
    return out


@nb.njit(cache=True)
def _mc_return_counts(offsets, cumprobs, n_walks, n_steps, seed):
    d = offsets.shape[1]
    m = offsets.shape[0]
    pos = np.zeros(d, dtype=np.int64)
    total = 0.0
    total_sq = 0.0
    for w in range(n_walks):
        key = _mix(_U(seed) ^ (_U(w + 1) * _K_SAMPLE))
        for j in range(d):
            pos[j] = 0
        cnt = 0
        for s in range(n_steps):
            u = _unit(_mix(key + _U(s + 1) * _K_TIME))
            k = 0
            while k < m - 1 and u > cumprobs[k]:
                k += 1
            at_zero = True
            for j in range(d):
                pos[j] += offsets[k, j]
                if pos[j] != 0:
                    at_zero = False
            if at_zero:
                cnt += 1
        total += cnt
        total_sq += cnt * cnt
    return total, total_sq


def supported(kernel, model) -> bool:
    """True when the nearest-neighbor jit path applies."""
    d = kernel.d
    if d not in (1, 3):
        return False
    if model.family not in _FAM_CODE:
        return False
    if len(kernel.steps) != 2 * d:
        return False
    want = {tuple(int(v) for v in sgn * np.eye(d, dtype=np.int64)[j])
            for j in range(d) for sgn in (+1, -1)}
    have = {tuple(int(v) for v in s) for s in kernel.steps}
    return have == want


def _axis_probs(kernel):
    """probs ordered [minus_1, plus_1, minus_2, plus_2, ...]."""
    d = kernel.d
    probs = np.exp(kernel.logp)
    lookup = {tuple(int(v) for v in s): float(p)
              for s, p in zip(kernel.steps, probs)}
    out = np.empty(2 * d)
    for j in range(d):
        e = [0] * d
        e[j] = -1
        out[2 * j] = lookup[tuple(e)]
        e[j] = 1
        out[2 * j + 1] = lookup[tuple(e)]
    return out


def run_nn(kernel, beta: float, env: Environment, n: int, *,
           stats: bool = False, keep_field: bool = False):
    """Fast-path equivalent of engine.run_polymer (linear mode)."""
    from .engine import PolymerField, RunResult

    d = kernel.d
    fam = _FAM_CODE[env.model.family]
    par = env.model.params[0] if env.model.params else 0.0
    q = _axis_probs(kernel)
    logz = np.empty(n)
    jser = np.empty(n)
    aser = np.empty((n, d), dtype=np.int64)
    mvec = np.empty((n, d)) if stats else np.empty((0, d))
    mabs = np.empty(n) if stats else np.empty(0)
    msq = np.empty(n) if stats else np.empty(0)
    fmean = np.zeros(d)
    cov = np.zeros((d, d))
    W = 2 * n + 3
    shape = (W,) * d
    final = np.empty(shape) if keep_field else np.empty((0,) * d)
    args = (n, float(beta), fam, float(par), env.seed, env.sample_index,
            stats, keep_field, logz, jser, aser, mvec, mabs, msq, fmean, cov,
            final)
    if d == 1:
        off = _run_d1(n, q[0], q[1], *args[1:])
    else:
        off = _run_d3(n, q, *args[1:])
    fld = None
    if keep_field:
        core = final[(slice(1, -1),) * d]
        lo = np.full(d, -n, dtype=np.int64)
        hi = np.full(d, n, dtype=np.int64)
        fld = PolymerField(kernel, float(beta), env, n, lo, hi, "linear",
                           core, off, float("nan"))
    return RunResult(n, logz, jser, aser,
                     mvec if stats else None,
                     mabs if stats else None,
                     msq if stats else None,
                     fmean, cov, fld, float("nan"))


def return_probs_3d(kernel, n_steps: int) -> np.ndarray:
    """P(T_t = 0) for t = 1..n_steps by exact convolution of a d = 3
    finite kernel (the difference walk, in practice)."""
    offsets = np.ascontiguousarray(kernel.steps)
    probs = np.exp(kernel.logp)
    rad = int(np.abs(offsets).max())
    l1 = int(np.abs(offsets).sum(axis=1).max())
    return _return_probs_3d(offsets, probs, n_steps, rad, l1)


def mc_return_counts(kernel, n_walks: int, n_steps: int, seed: int):
    """Monte Carlo estimate of E[#returns in 1..n_steps] with its
    standard error, via independent counter-seeded walks."""
    offsets = np.ascontiguousarray(kernel.steps)
    cum = np.cumsum(np.exp(kernel.logp))
    total, total_sq = _mc_return_counts(offsets, cum, n_walks, n_steps, seed)
    mean = total / n_walks
    var = max(total_sq / n_walks - mean * mean, 0.0)
    se = math.sqrt(var / n_walks)
    return mean, se
