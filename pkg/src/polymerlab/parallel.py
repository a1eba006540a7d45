"""Sample-level parallel map with deterministic aggregation order.

Results are always collected in sample order, so the aggregate is
bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable


def map_samples(fn: Callable, sample_indices: Iterable[int],
                threads: int = 1) -> list:
    idx = list(sample_indices)
    if threads <= 1:
        return [fn(i) for i in idx]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, idx))
