"""Counter-based random-access RNG for disorder fields.

Every weight is a pure function of (seed, sample, t, x): we mix the
coordinates through a splitmix64-style avalanche so weights can be
generated in any order, in parallel, and identically from numpy or
from the numba fast paths (see _fast.py, which re-implements the same
arithmetic scalar-wise).
"""

from __future__ import annotations

import numpy as np

# splitmix64 finalizer constants
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
# per-field stream constants (odd, arbitrary)
_K_SAMPLE = np.uint64(0x9E3779B97F4A7C15)
_K_TIME = np.uint64(0xD1B54A32D192ED03)
_K_COORD = np.uint64(0x8CB92BA72F3D8DD7)

_INV53 = 1.0 / (1 << 53)


def _mix(z):
    # uint64 wraparound is the point of the finalizer
    with np.errstate(over="ignore"):
        z = np.uint64(z) if np.isscalar(z) else z
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def stream_base(seed: int, sample: int, t: int) -> np.uint64:
    """Mixed state shared by all lattice sites of one time slice."""
    with np.errstate(over="ignore"):
        h = _mix(np.uint64(seed) ^ _M2)
        h = _mix(h ^ (np.uint64(sample) * _K_SAMPLE))
        h = _mix(h ^ (np.uint64(t) * _K_TIME))
    return h


def coord_hash(base, coord_arrays):
    """Fold lattice coordinates into the per-slice state.

    `coord_arrays` is a sequence of d broadcastable integer arrays; the
    result has their broadcast shape.  int -> uint64 casts use two's
    complement, so negative coordinates are fine.
    """
    h = base
    with np.errstate(over="ignore"):
        for c in coord_arrays:
            c64 = np.asarray(c).astype(np.int64).view(np.uint64) \
                if not np.isscalar(c) else np.int64(c).view(np.uint64)
            h = _mix(h ^ (c64 * _K_COORD))
    return h


def to_unit(h):
    """uint64 -> double in the open interval (0, 1)."""
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * _INV53
