"""Synthetic token videos and positional-bias measurements.

Real encoder features are replaced by seeded Gaussian tokens whose frame-to-frame
correlation follows a redundancy schedule. An optional hotspot inflates the
feature magnitudes of one token position in every frame, mimicking a spatial
location that receives high activation regardless of content.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .pipeline import CompressionConfig, compress_batch
from .spatial import activation_map, make_partition
from .tensors import VideoTokens


def scene_cut_schedule(T: int, every: int = 4, redundancy: float = 0.98) -> list[float]:
    """Fresh content every ``every`` frames, near-copies of the previous frame otherwise."""
    return [0.0 if t % every == 0 else redundancy for t in range(T)]


@dataclass(frozen=True)
class SynthSpec:
    T: int
    N: int
    D: int
    redundancy: float | Sequence[float] = 0.0
    bias_position: int | None = None
    bias_strength: float = 0.0
    seed: int = 0

    def schedule(self) -> np.ndarray:
        r = np.asarray(self.redundancy, dtype=np.float64)
        if r.ndim == 0:
            r = np.full(self.T, float(r))
        if r.shape != (self.T,):
            raise ConfigurationError(f"redundancy schedule needs {self.T} entries, got {r.size}")
        if ((r < 0) | (r > 1)).any():
            raise ConfigurationError("redundancy coefficients must lie in [0, 1]")
        return r


def synth_video(spec: SynthSpec) -> VideoTokens:
    if min(spec.T, spec.N, spec.D) < 1:
        raise ConfigurationError("T, N and D must all be >= 1")
    if spec.bias_position is not None and not 0 <= spec.bias_position < spec.N:
        raise ConfigurationError(f"bias_position {spec.bias_position} outside [0, {spec.N})")
    if spec.bias_strength < 0:
        raise ConfigurationError("bias_strength must be >= 0")
    r = spec.schedule()
    rng = np.random.default_rng(spec.seed)
    base = rng.standard_normal((spec.N, spec.D))
    out = np.empty((spec.T, spec.N, spec.D))
    for t in range(spec.T):
        if t > 0:
            noise = rng.standard_normal((spec.N, spec.D))
            base = r[t] * base + (1.0 - r[t]) * noise
        out[t] = base
    if spec.bias_position is not None and spec.bias_strength > 0:
        # the hotspot rides on top of the content and does not feed back into it
        hot = out[:, spec.bias_position]
        sign = np.where(hot < 0, -1.0, 1.0)
        out[:, spec.bias_position] = sign * (np.abs(hot) + spec.bias_strength)
    return VideoTokens(out)


def minimal_hotspot_strength(spec: SynthSpec, patch_size: int = 14) -> float:
    """Smallest strength at which the hotspot tops its patch's L1 activation in every frame.

    The hotspot adds ``strength`` to each of the ``D`` component magnitudes, so
    its L1 sum grows by exactly ``D * strength`` while its neighbours are
    untouched; the threshold therefore has a closed form.
    """
    if spec.bias_position is None:
        raise ConfigurationError("spec has no bias_position")
    plain = synth_video(replace(spec, bias_strength=0.0))
    part = make_partition(spec.N, patch_size)
    p = spec.bias_position
    i = int(np.searchsorted(part.bounds, p, side="right")) - 1
    a, b = int(part.bounds[i]), int(part.bounds[i + 1])
    if b - a == 1:
        return 0.0
    l1 = np.abs(plain.data[:, a:b]).sum(axis=2)
    rivals = np.delete(l1, p - a, axis=1).max(axis=1)
    return max(0.0, float((rivals - l1[:, p - a]).max()) / spec.D)


def hotspot_spec(
    seed: int,
    T: int = 32,
    N: int = 56,
    D: int = 16,
    strength: float | None = None,
    margin: float = 0.05,
    patch_size: int = 14,
) -> SynthSpec:
    """The fixed protocol used for bias-mitigation runs.

    Scene cuts every four frames with near-static content in between; the
    hotspot sits in the second patch. With ``strength=None`` the hotspot is
    made just strong enough (plus ``margin``) to top its patch in every frame.
    """
    spec = SynthSpec(
        T=T,
        N=N,
        D=D,
        redundancy=scene_cut_schedule(T),
        bias_position=min(20, N - 1),
        bias_strength=0.0,
        seed=seed,
    )
    if strength is None:
        strength = minimal_hotspot_strength(spec, patch_size) * (1.0 + margin) + 1e-9
    return replace(spec, bias_strength=strength)


@dataclass(frozen=True)
class BiasCurve:
    cumulative_selections: np.ndarray
    final_rate: float
    variant: str = field(default="", compare=False)

    @property
    def final(self) -> int:
        return int(self.cumulative_selections[-1])


def bias_curve(video: VideoTokens, cfg: CompressionConfig, bias_position: int, backend=None, variant: str = "") -> BiasCurve:
    if not 0 <= bias_position < video.N:
        raise ConfigurationError(f"bias_position {bias_position} outside [0, {video.N})")
    res = compress_batch(video, cfg, backend)
    cum = np.cumsum(res.masks[:, bias_position].astype(np.int64))
    cum.setflags(write=False)
    return BiasCurve(cum, float(cum[-1]) / video.T, variant)


def ablation_config(cfg: CompressionConfig) -> CompressionConfig:
    d = cfg.to_dict()
    d.update(enable_tba=False, enable_sba=False)
    return CompressionConfig.from_dict(d)


def paired_curves(video: VideoTokens, cfg: CompressionConfig, bias_position: int, backend=None) -> tuple[BiasCurve, BiasCurve]:
    """Curves for ``cfg`` and for the same config with both stages disabled."""
    full = bias_curve(video, cfg, bias_position, backend, "full")
    abl = bias_curve(video, ablation_config(cfg), bias_position, backend, "ablation")
    return full, abl


def accumulated_activation(video: VideoTokens, backend=None) -> np.ndarray:
    """Per-position mean of the activation map over all frames."""
    acc = np.zeros(video.N)
    for f in video.frames():
        acc += activation_map(f, backend)
    return acc / video.T


def write_curves_csv(path, curves: Sequence[BiasCurve]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame_index", "cumulative_count", "variant"])
        for c in curves:
            for t, v in enumerate(c.cumulative_selections):
                w.writerow([t, int(v), c.variant])


def write_heat_csv(path, heat) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["token_index", "value"])
        for n, v in enumerate(heat):
            w.writerow([n, repr(float(v))])
