"""Integer apportionment with per-item bounds.

Real-valued quotas are scaled by a common factor, clamped to ``[lower, upper]``
(water-filling), and the items left strictly inside their bounds are rounded by
the largest-remainder (Hamilton) method. The result always sums to the
requested total. Remainder ties go to the lower index.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import BudgetError, InvariantError

QUOTA_RANGE = 1e-200


def largest_remainder(quotas, total: int, lower=None) -> np.ndarray:
    """Round non-negative real ``quotas`` to integers summing to ``total``.

    Units left over after flooring go to the largest fractional parts. If the
    floors already overshoot (possible only through float error), units are
    taken back from the smallest fractional parts, never below ``lower``.
    """
    q = np.asarray(quotas, dtype=np.float64)
    n = q.size
    floors = np.floor(q).astype(np.int64)
    lo = np.zeros(n, dtype=np.int64) if lower is None else np.broadcast_to(np.asarray(lower, dtype=np.int64), (n,))
    floors = np.maximum(floors, lo)
    rem = q - floors
    extra = int(total) - int(floors.sum())
    out = floors.copy()
    if extra > 0:
        order = sorted(range(n), key=lambda i: (-rem[i], i))
        if extra > n:
            raise BudgetError(f"cannot place {extra} leftover units over {n} items")
        for i in order[:extra]:
            out[i] += 1
    elif extra < 0:
        order = sorted(range(n), key=lambda i: (rem[i], -i))
        for i in order:
            if extra == 0:
                break
            if out[i] > lo[i]:
                out[i] -= 1
                extra += 1
        if extra:
            raise BudgetError("floors exceed the total and cannot be reduced")
    return out


def _solve_scale(q: np.ndarray, lo: np.ndarray, hi: np.ndarray, total: int) -> float:
    """Find ``lam >= 0`` with ``sum(clip(lam * q, lo, hi)) == total``."""
    pos = q > 0
    breaks = np.unique(np.concatenate([lo[pos] / q[pos], hi[pos] / q[pos], [0.0]]))

    filled = np.clip(breaks[:, None] * q[None, :], lo, hi).sum(axis=1)
    hit = int(np.searchsorted(filled, total, side="left"))
    if hit >= breaks.size:
        return float(breaks[-1])
    b = float(breaks[hit])
    if filled[hit] == total or hit == 0:
        return b
    # linear on [prev, b]; slope is the quota mass of items inside their bounds
    prev = float(breaks[hit - 1])
    mid = 0.5 * (prev + b)
    inside = pos & (mid * q > lo) & (mid * q < hi)
    slope = float(q[inside].sum())
    if slope <= 0.0:
        return b
    return prev + (total - float(filled[hit - 1])) / slope


def bounded_apportion(quotas, total: int, lower, upper) -> np.ndarray:
    """Apportion ``total`` integer units proportionally to ``quotas``.

    Each item ``i`` receives between ``lower[i]`` and ``upper[i]`` units. Excess
    over an upper bound and deficit under a lower bound are absorbed by the
    unclamped items in proportion to their quotas. All-zero quotas fall back
    to uniform quotas.
    """
    q = np.asarray(quotas, dtype=np.float64)
    n = q.size
    lo = np.broadcast_to(np.asarray(lower, dtype=np.int64), (n,)).astype(np.float64)
    hi = np.broadcast_to(np.asarray(upper, dtype=np.int64), (n,)).astype(np.float64)
    total = int(total)
    if n == 0:
        if total != 0:
            raise BudgetError(f"cannot place {total} units over zero items")
        return np.zeros(0, dtype=np.int64)
    if (q < 0).any() or not np.isfinite(q).all():
        raise ValueError("quotas must be finite and non-negative")
    if (lo > hi).any():
        raise BudgetError("lower bound exceeds upper bound")
    if not lo.sum() <= total <= hi.sum():
        raise BudgetError(f"total {total} outside feasible range [{int(lo.sum())}, {int(hi.sum())}]")
    if q.sum() <= 0.0:
        q = np.ones(n)
    # work relative to the largest quota so the scale factor stays finite;
    # quotas beyond QUOTA_RANGE below it could only be reached by overflowing
    q = q / q.max()
    q[q < QUOTA_RANGE] = 0.0
    pos = q > 0
    saturated = int(hi[pos].sum())
    if total > saturated + int(lo[~pos].sum()):
        # scaling never lifts a zero-quota item off its lower bound, so once every
        # positive item is full the rest is spread evenly over the zero-quota ones
        out = hi.astype(np.int64)
        out[~pos] = bounded_apportion(np.ones(int((~pos).sum())), total - saturated, lo[~pos], hi[~pos])
        return out

    lam = _solve_scale(q, lo, hi, total)
    real = np.clip(lam * q, lo, hi)
    fixed = (real <= lo) | (real >= hi)
    out = np.where(real >= hi, hi, lo).astype(np.int64)
    free = np.flatnonzero(~fixed)
    if free.size:
        target = total - int(out[fixed].sum())
        out[free] = largest_remainder(real[free], target, lower=lo[free].astype(np.int64))
        # float slack in the scale can push a free item one unit past its bound
        over = out > hi
        under = out < lo
        if over.any() or under.any():
            out = _repair(out, real, total, lo.astype(np.int64), hi.astype(np.int64))
    if int(out.sum()) != total:
        raise InvariantError(f"apportioned {int(out.sum())} units, expected {total}")
    return out


def _repair(out: np.ndarray, real: np.ndarray, total: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    out = np.clip(out, lo, hi)
    diff = total - int(out.sum())
    step = 1 if diff > 0 else -1
    order = sorted(range(out.size), key=lambda i: (-(real[i] - out[i]) * step, i))
    while diff:
        moved = False
        for i in order:
            if diff and lo[i] <= out[i] + step <= hi[i]:
                out[i] += step
                diff -= step
                moved = True
        if not moved:
            raise BudgetError("could not repair apportionment")
    return out


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))
