"""Temporal budget allocation.

A global EMA memory of mean-pooled frame features measures how novel each
frame is; the global token budget is then split across frames in proportion
to that novelty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .apportion import bounded_apportion, round_half_up
from .errors import ConfigurationError, DimensionError
from .tensors import VideoTokens, global_pool

FIRST_FRAME_RULES = ("mean", "max")
# distances this small relative to the vectors compared are EMA rounding residue,
# not novelty; left in, they would decide the split for static content
NOVELTY_RTOL = 1e-12


def check_alpha(alpha: float) -> float:
    if not 0.0 < alpha <= 1.0:
        raise ConfigurationError(f"alpha must be in (0, 1], got {alpha}")
    return float(alpha)


def check_retention(R: float) -> float:
    if not 0.0 < R <= 1.0:
        raise ConfigurationError(f"retention ratio must be in (0, 1], got {R}")
    return float(R)


@dataclass(frozen=True)
class TemporalMemory:
    m_g: np.ndarray
    alpha: float
    initialized: bool = True


def memory_init(first_frame_pooled, alpha: float) -> TemporalMemory:
    alpha = check_alpha(alpha)
    m = np.array(first_frame_pooled, dtype=np.float64)
    if m.ndim != 1:
        raise DimensionError(f"pooled feature must be a vector, got shape {m.shape}")
    m.setflags(write=False)
    return TemporalMemory(m, alpha)


def novelty_step(mem: TemporalMemory, frame_pooled) -> tuple[float, TemporalMemory]:
    """Distance of ``frame_pooled`` to the memory, then the EMA update.

    The distance is taken against the memory *before* it absorbs the frame.
    """
    if not mem.initialized:
        raise ConfigurationError("temporal memory used before initialization")
    x = np.asarray(frame_pooled, dtype=np.float64)
    if x.shape != mem.m_g.shape:
        raise DimensionError(f"pooled feature has shape {x.shape}, memory has {mem.m_g.shape}")
    delta = float(np.linalg.norm(x - mem.m_g))
    if delta <= NOVELTY_RTOL * (np.linalg.norm(x) + np.linalg.norm(mem.m_g)):
        delta = 0.0
    m = (1.0 - mem.alpha) * mem.m_g + mem.alpha * x
    m.setflags(write=False)
    return delta, TemporalMemory(m, mem.alpha)


def first_frame_delta(later: np.ndarray, rule: str = "mean") -> float:
    """Novelty assigned to frame 0, which has no predecessor to compare with."""
    if later.size == 0:
        return 1.0
    if rule == "mean":
        return float(later.mean())
    if rule == "max":
        return float(later.max())
    raise ConfigurationError(f"unknown first-frame rule {rule!r}; expected one of {FIRST_FRAME_RULES}")


def frame_deltas(video: VideoTokens, alpha: float, first_frame: str = "mean") -> np.ndarray:
    mem = memory_init(global_pool(video.frame(0)), alpha)
    later = np.empty(video.T - 1)
    for t in range(1, video.T):
        later[t - 1], mem = novelty_step(mem, global_pool(video.frame(t)))
    return np.concatenate([[first_frame_delta(later, first_frame)], later])


@dataclass(frozen=True)
class NoveltyProfile:
    deltas: np.ndarray
    weights: np.ndarray


def build_profile(deltas) -> NoveltyProfile:
    """Normalize per-frame deltas to weights summing to one (uniform if all zero)."""
    d = np.array(deltas, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise DimensionError("deltas must be a non-empty vector")
    if (d < 0).any():
        raise ValueError("deltas must be non-negative")
    s = d.sum()
    w = d / s if s > 0 else np.full(d.size, 1.0 / d.size)
    d.setflags(write=False)
    w.setflags(write=False)
    return NoveltyProfile(d, w)


@dataclass(frozen=True)
class FrameBudget:
    budgets: np.ndarray
    retention_ratio: float
    total: int
    # True when the global budget is smaller than the frame count, so some
    # frames had to receive zero tokens despite the one-token floor
    floor_shortfall: bool = False

    def __len__(self) -> int:
        return self.budgets.size


def global_total(T: int, N: int, R: float) -> int:
    return round_half_up(T * N * R)


def apportion(profile: NoveltyProfile, N: int, R: float, min_one_token: bool = True) -> FrameBudget:
    """Split ``round(T * N * R)`` tokens over frames in proportion to the weights.

    Each frame gets at most ``N`` tokens and, when the floor is on and the
    budget allows it, at least one.
    """
    R = check_retention(R)
    if N < 1:
        raise ConfigurationError(f"tokens per frame must be >= 1, got {N}")
    w = profile.weights
    T = w.size
    total = global_total(T, N, R)

    shortfall = False
    if min_one_token and total < T:
        # one token each for the highest-weight frames, lower index first on ties
        order = sorted(range(T), key=lambda t: (-w[t], t))
        budgets = np.zeros(T, dtype=np.int64)
        budgets[order[:total]] = 1
        shortfall = True
    else:
        lower = 1 if min_one_token else 0
        budgets = bounded_apportion(w, total, lower, N)
    budgets.setflags(write=False)
    return FrameBudget(budgets, R, total, shortfall)


def uniform_budget(T: int, N: int, R: float, min_one_token: bool = True) -> FrameBudget:
    """Budget with equal weight per frame (temporal allocation disabled)."""
    return apportion(build_profile(np.ones(T)), N, R, min_one_token)
