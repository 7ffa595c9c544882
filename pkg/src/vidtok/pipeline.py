"""Two-stage compression, batch and streaming.

Batch mode splits the global budget over all frames by novelty, then selects
tokens frame by frame in temporal order with the spatial memory carried along.
Streaming mode sees one frame at a time and cannot normalize novelty over the
future, so it scales each frame's budget by its novelty relative to the mean
of a sliding window of recent novelties. That streaming budget policy is this
package's own causal stand-in, not part of the two-stage method itself.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .apportion import round_half_up
from .errors import ConfigurationError, DimensionError, InvariantError, SessionError
from .spatial import SelectionMask, SpatialMemory, make_partition, select_frame
from .temporal import (
    FIRST_FRAME_RULES,
    FrameBudget,
    NoveltyProfile,
    apportion,
    build_profile,
    check_alpha,
    check_retention,
    frame_deltas,
    global_total,
    memory_init,
    novelty_step,
)
from .tensors import VideoTokens, global_pool

STREAM_POLICY = "windowed-self-normalization"


@dataclass(frozen=True)
class CompressionConfig:
    retention: float = 0.25
    alpha: float = 0.9
    beta: float = 0.1
    patch_size: int = 14
    enable_tba: bool = True
    enable_sba: bool = True
    min_one_token_floor: bool = True
    stream_window: int = 8
    first_frame: str = "mean"

    def __post_init__(self) -> None:
        check_retention(self.retention)
        check_alpha(self.alpha)
        if self.beta < 0:
            raise ConfigurationError(f"beta must be >= 0, got {self.beta}")
        if self.patch_size < 1:
            raise ConfigurationError(f"patch_size must be >= 1, got {self.patch_size}")
        if self.stream_window < 1:
            raise ConfigurationError(f"stream_window must be >= 1, got {self.stream_window}")
        if self.first_frame not in FIRST_FRAME_RULES:
            raise ConfigurationError(f"first_frame must be one of {FIRST_FRAME_RULES}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CompressionConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @property
    def effective_beta(self) -> float:
        return self.beta if self.enable_sba else 0.0


@dataclass(frozen=True)
class FrameRecord:
    t: int
    delta: float
    weight: float
    budget: int
    indices: list[int]
    patch_budgets: list[int]


@dataclass(frozen=True)
class CompressionResult:
    masks: np.ndarray  # (T, N) bool
    budgets: FrameBudget
    profile: NoveltyProfile
    compressed: np.ndarray  # (K, D) kept tokens in frame order
    provenance: np.ndarray  # (K, 2) original (t, n) of each kept token
    records: list[FrameRecord]
    config: CompressionConfig
    timings: dict = field(default_factory=dict, compare=False)

    @property
    def retained(self) -> int:
        return int(self.masks.sum())

    def mask(self, t: int) -> SelectionMask:
        return SelectionMask(self.masks[t])


def _partition(cfg: CompressionConfig, N: int):
    # without spatial allocation the whole frame is one patch
    return make_partition(N, cfg.patch_size if cfg.enable_sba else N)


def compress_batch(video: VideoTokens, cfg: CompressionConfig | None = None, backend=None) -> CompressionResult:
    cfg = cfg or CompressionConfig()
    T, N, D = video.shape
    clock = time.perf_counter

    t0 = clock()
    deltas = frame_deltas(video, cfg.alpha, cfg.first_frame)
    if cfg.enable_tba:
        profile = build_profile(deltas)
    else:
        uniform = build_profile(np.ones(T))
        profile = NoveltyProfile(build_profile(deltas).deltas, uniform.weights)
    budget = apportion(profile, N, cfg.retention, cfg.min_one_token_floor)
    t1 = clock()

    part = _partition(cfg, N)
    mem = SpatialMemory(N, D, cfg.alpha)
    masks = np.zeros((T, N), dtype=bool)
    records = []
    for t in range(T):
        sel = select_frame(video.frame(t), int(budget.budgets[t]), mem, part, cfg.effective_beta, backend)
        masks[t] = sel.mask.mask
        records.append(
            FrameRecord(
                t=t,
                delta=float(profile.deltas[t]),
                weight=float(profile.weights[t]),
                budget=int(budget.budgets[t]),
                indices=sel.mask.indices.tolist(),
                patch_budgets=sel.patch_budgets.tolist(),
            )
        )
    t2 = clock()

    if int(masks.sum()) != budget.total:
        raise InvariantError(f"kept {int(masks.sum())} tokens, budget was {budget.total}")
    masks.setflags(write=False)
    prov = np.argwhere(masks)
    kept = video.data[masks]
    return CompressionResult(
        masks=masks,
        budgets=budget,
        profile=profile,
        compressed=kept,
        provenance=prov,
        records=records,
        config=cfg,
        timings={"temporal_s": t1 - t0, "spatial_s": t2 - t1},
    )


def reconstruct(result: CompressionResult, video: VideoTokens) -> np.ndarray:
    """Kept tokens at their original positions, zeros elsewhere."""
    if result.masks.shape != video.shape[:2]:
        raise DimensionError(f"result masks {result.masks.shape} do not match video {video.shape[:2]}")
    out = np.zeros(video.shape)
    out[result.masks] = video.data[result.masks]
    return out


@dataclass(frozen=True)
class StreamFrameStats:
    t: int
    delta: float
    window_mean: float
    budget: int
    indices: list[int]
    patch_budgets: list[int]
    policy: str = STREAM_POLICY


class StreamSession:
    """Causal per-stream compressor. Calls must be serialized per session."""

    def __init__(self, cfg: CompressionConfig | None = None, backend=None) -> None:
        self.cfg = cfg or CompressionConfig()
        self.backend = backend
        self._t = 0
        self._shape: tuple[int, int] | None = None
        self._temporal = None
        self._spatial: SpatialMemory | None = None
        self._window: deque[float] = deque(maxlen=self.cfg.stream_window)
        self._part = None
        self.kept = 0
        self.seen = 0

    @property
    def frames_seen(self) -> int:
        return self._t

    def _base_budget(self, N: int) -> int:
        return round_half_up(N * self.cfg.retention)

    def _clamp(self, b: int, N: int) -> int:
        floor = 1 if self.cfg.min_one_token_floor else 0
        return max(floor, min(N, b))

    def push(self, frame, t: int | None = None) -> tuple[SelectionMask, StreamFrameStats]:
        if t is not None and t != self._t:
            raise SessionError(f"expected frame {self._t}, got frame {t}")
        f = np.ascontiguousarray(frame, dtype=np.float64)
        if f.ndim != 2:
            raise SessionError(f"expected an (N, D) frame, got shape {f.shape}")
        if not np.isfinite(f).all():
            raise SessionError("frame contains non-finite values")
        if self._shape is None:
            self._shape = f.shape
            self._spatial = SpatialMemory(*f.shape, self.cfg.alpha)
            self._part = _partition(self.cfg, f.shape[0])
        elif f.shape != self._shape:
            raise SessionError(f"frame shape {f.shape} differs from stream shape {self._shape}")
        N = f.shape[0]

        pooled = global_pool(f)
        if self._temporal is None:
            self._temporal = memory_init(pooled, self.cfg.alpha)
            delta, mean = 0.0, 0.0
            budget = self._base_budget(N)
        else:
            delta, self._temporal = novelty_step(self._temporal, pooled)
            self._window.append(delta)
            mean = float(np.mean(self._window))
            if not self.cfg.enable_tba or mean <= 0.0:
                budget = self._base_budget(N)
            else:
                budget = round_half_up(N * self.cfg.retention * delta / mean)
        budget = self._clamp(budget, N)

        sel = select_frame(f, budget, self._spatial, self._part, self.cfg.effective_beta, self.backend)
        stats = StreamFrameStats(
            t=self._t,
            delta=delta,
            window_mean=mean,
            budget=budget,
            indices=sel.mask.indices.tolist(),
            patch_budgets=sel.patch_budgets.tolist(),
        )
        self._t += 1
        self.kept += budget
        self.seen += N
        return sel.mask, stats

    @property
    def retention(self) -> float:
        return self.kept / self.seen if self.seen else 0.0


def compress_stream(session: StreamSession, frame, t: int | None = None):
    return session.push(frame, t)


def expected_total(video: VideoTokens, cfg: CompressionConfig) -> int:
    return global_total(video.T, video.N, cfg.retention)
