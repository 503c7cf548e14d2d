"""Bitmask helpers: subsets of {0..n-1} are Python ints / int64 arrays."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

TOP_CODE = -1


def items_of(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def mask_of(items) -> int:
    m = 0
    for x in items:
        m |= 1 << x
    return m


def _scan_key(mask: int):
    return (mask.bit_count(), items_of(mask))


@lru_cache(maxsize=None)
def scan_order(n: int) -> tuple[int, ...]:
    """All masks over n items ordered by (cardinality, sorted items)."""
    return tuple(sorted(range(1 << n), key=_scan_key))


@lru_cache(maxsize=None)
def scan_rank(n: int) -> np.ndarray:
    rank = np.empty(1 << n, dtype=np.int64)
    for r, m in enumerate(scan_order(n)):
        rank[m] = r
    rank.setflags(write=False)
    return rank


@lru_cache(maxsize=None)
def popcounts(n: int) -> np.ndarray:
    arr = np.array([m.bit_count() for m in range(1 << n)], dtype=np.int64)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def all_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Every (Y, Y') pair, Y-major in scan order."""
    order = np.array(scan_order(n), dtype=np.int64)
    ys = np.repeat(order, len(order))
    yps = np.tile(order, len(order))
    ys.setflags(write=False)
    yps.setflags(write=False)
    return ys, yps


@lru_cache(maxsize=None)
def nested_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Every (Y, Y') with Y a subset of Y', Y-major in scan order."""
    ys, yps = [], []
    order = scan_order(n)
    for y in order:
        for yp in order:
            if y & ~yp == 0:
                ys.append(y)
                yps.append(yp)
    a, b = np.array(ys, dtype=np.int64), np.array(yps, dtype=np.int64)
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


def subsets_of(mask: int):
    """Yield every submask of mask (including 0 and mask itself)."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask
