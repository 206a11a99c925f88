"""Max-min fair water-filling, shared by the baselines and the flow level."""

from __future__ import annotations

import numpy as np


def water_fill(demands, capacity: float) -> np.ndarray:
    """Max-min fair split of `capacity` across demands, capped at each demand.

    When capacity covers the total demand every entry receives exactly its
    demand.  Otherwise the unique water level w with sum(min(d, w)) ==
    capacity is found and each entry receives min(d, w).  The result depends
    only on the multiset of demands, so permuting the input permutes the
    output identically.
    """
    d = np.asarray(demands, dtype=float)
    if d.ndim != 1:
        raise ValueError("demands must be a 1-D array")
    if np.any(d < 0):
        raise ValueError("demands must be non-negative")
    if d.size == 0:
        return np.zeros(0)
    if capacity <= 0:
        return np.zeros_like(d)
    total = float(d.sum())
    if total <= capacity:
        return d.copy()

    ds = np.sort(d)
    csum = np.cumsum(ds)
    n = d.size
    level = ds[-1]
    for j in range(n):
        served_below = csum[j - 1] if j else 0.0
        candidate = (capacity - served_below) / (n - j)
        if candidate <= ds[j]:
            level = candidate
            break
    return np.minimum(d, max(level, 0.0))
