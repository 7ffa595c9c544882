"""Spatial budget allocation: which tokens of a frame to keep.

Tokens are scored by an activation map (normalized L1 norm of each token)
minus a redundancy penalty, the cosine similarity to a per-position EMA memory
of previously kept tokens. A frame's budget is split across contiguous patches
by mean activation, then the best-scoring tokens are kept inside each patch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .apportion import bounded_apportion
from .errors import BudgetError, ConfigurationError, DimensionError
from .temporal import check_alpha
from .tensors import minmax_normalize


@dataclass(frozen=True)
class PatchPartition:
    patch_size: int
    bounds: np.ndarray  # P + 1 token offsets, raster order

    @property
    def count(self) -> int:
        return self.bounds.size - 1

    @property
    def capacities(self) -> np.ndarray:
        return np.diff(self.bounds)

    @property
    def n_tokens(self) -> int:
        return int(self.bounds[-1])


def make_partition(N: int, k: int) -> PatchPartition:
    """Contiguous patches of ``k`` tokens; the last one may be shorter."""
    if k < 1:
        raise ConfigurationError(f"patch size must be >= 1, got {k}")
    if N < 1:
        raise ConfigurationError(f"tokens per frame must be >= 1, got {N}")
    P = math.ceil(N / k)
    bounds = np.minimum(np.arange(P + 1, dtype=np.int64) * k, N)
    bounds.setflags(write=False)
    return PatchPartition(k, bounds)


@dataclass(frozen=True)
class SelectionMask:
    mask: np.ndarray

    @property
    def selected_count(self) -> int:
        return int(self.mask.sum())

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)


class SpatialMemory:
    """Per-position EMA of kept tokens. Rows never kept stay exactly zero."""

    def __init__(self, N: int, D: int, alpha: float) -> None:
        self.alpha = check_alpha(alpha)
        self.m_s = np.zeros((N, D))
        self.touched = np.zeros(N, dtype=bool)

    @property
    def shape(self) -> tuple[int, int]:
        return self.m_s.shape  # type: ignore[return-value]

    def copy(self) -> "SpatialMemory":
        new = SpatialMemory(*self.shape, self.alpha)
        new.m_s[:] = self.m_s
        new.touched[:] = self.touched
        return new


def _frame(frame) -> np.ndarray:
    f = np.ascontiguousarray(frame, dtype=np.float64)
    if f.ndim != 2:
        raise DimensionError(f"expected an (N, D) frame, got shape {f.shape}")
    return f


def _check_memory(frame: np.ndarray, mem: SpatialMemory) -> None:
    if frame.shape != mem.shape:
        raise DimensionError(f"frame shape {frame.shape} does not match memory {mem.shape}")


def activation_map(frame, backend=None) -> np.ndarray:
    return minmax_normalize(_backend.get(backend).abs_row_sums(_frame(frame)))


def patch_scores(A, part: PatchPartition) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.size != part.n_tokens:
        raise DimensionError(f"activation map has {A.size} entries, partition covers {part.n_tokens}")
    return np.add.reduceat(A, part.bounds[:-1]) / part.capacities


def patch_apportion(s, B_t: int, capacities) -> np.ndarray:
    cap = np.asarray(capacities, dtype=np.int64)
    if B_t > int(cap.sum()):
        raise BudgetError(f"frame budget {B_t} exceeds patch capacity {int(cap.sum())}")
    return bounded_apportion(s, B_t, 0, cap)


def redundancy(frame, mem: SpatialMemory, backend=None) -> np.ndarray:
    f = _frame(frame)
    _check_memory(f, mem)
    return _backend.get(backend).row_cosine(f, mem.m_s, mem.touched)


def token_scores(A, red, beta: float) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    red = np.asarray(red, dtype=np.float64)
    if A.shape != red.shape:
        raise DimensionError(f"length mismatch: {A.size} vs {red.size}")
    if beta < 0:
        raise ConfigurationError(f"beta must be >= 0, got {beta}")
    if beta == 0:
        return A.copy()
    return A - beta * red


def select_topk_per_patch(scores, part: PatchPartition, n, backend=None) -> SelectionMask:
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    n = np.ascontiguousarray(n, dtype=np.int64)
    if n.size != part.count:
        raise DimensionError(f"{n.size} patch counts for {part.count} patches")
    if (n > part.capacities).any() or (n < 0).any():
        raise BudgetError("patch count outside [0, capacity]")
    mask = _backend.get(backend).topk_per_patch(scores, part.bounds, n)
    mask.setflags(write=False)
    return SelectionMask(mask)


def memory_update(mem: SpatialMemory, frame, mask: SelectionMask, backend=None) -> SpatialMemory:
    """EMA-update the memory rows at kept positions, in place."""
    f = _frame(frame)
    _check_memory(f, mem)
    m = np.ascontiguousarray(mask.mask, dtype=bool)
    _backend.get(backend).ema_rows_update(mem.m_s, mem.touched, f, m, mem.alpha)
    return mem


@dataclass(frozen=True)
class FrameSelection:
    mask: SelectionMask
    patch_budgets: np.ndarray
    scores: np.ndarray


def select_frame(
    frame,
    budget: int,
    mem: SpatialMemory,
    part: PatchPartition,
    beta: float,
    backend=None,
) -> FrameSelection:
    """Score against the memory from earlier frames, select, then update the memory."""
    f = _frame(frame)
    A = activation_map(f, backend)
    n = patch_apportion(patch_scores(A, part), budget, part.capacities)
    if beta > 0:
        scores = token_scores(A, redundancy(f, mem, backend), beta)
    else:
        scores = A
    sel = select_topk_per_patch(scores, part, n, backend)
    memory_update(mem, f, sel, backend)
    return FrameSelection(sel, n, scores)
