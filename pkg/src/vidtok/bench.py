"""Latency harness.

A downstream consumer is simulated by one dense softmax self-attention pass
over the kept tokens, whose cost grows quadratically with the token count.
Total cost per retention level is compression time plus that pass.
"""

from __future__ import annotations

import gc
import statistics
import time
from dataclasses import dataclass, replace

import numpy as np

from . import _backend
from .bias import SynthSpec, scene_cut_schedule, synth_video
from .pipeline import CompressionConfig, compress_batch
from .tensors import VideoTokens


def attention_pass(tokens: np.ndarray) -> np.ndarray:
    x = np.asarray(tokens, dtype=np.float32)
    if x.shape[0] == 0:
        return x
    s = (x @ x.T) * np.float32(1.0 / np.sqrt(x.shape[1]))
    s -= s.max(axis=1, keepdims=True)
    np.exp(s, out=s)
    s /= s.sum(axis=1, keepdims=True)
    return s @ x


@dataclass(frozen=True)
class LevelStats:
    retention: float
    tokens: int
    compress_ms_mean: float
    compress_ms_std: float
    downstream_ms_mean: float
    downstream_ms_std: float
    total_ms_mean: float
    total_ms_std: float
    modeled_cost: float  # tokens**2, arbitrary units

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _ms(samples: list[float]) -> tuple[float, float]:
    mean = statistics.fmean(samples) * 1e3
    std = statistics.stdev(samples) * 1e3 if len(samples) > 1 else 0.0
    return mean, std


def bench_video(T: int = 32, N: int = 98, D: int = 64, seed: int = 0) -> VideoTokens:
    return synth_video(SynthSpec(T, N, D, redundancy=scene_cut_schedule(T), seed=seed))


def _timed(video, cfg, backend):
    t0 = time.perf_counter()
    res = compress_batch(video, cfg, backend)
    t1 = time.perf_counter()
    attention_pass(res.compressed)
    t2 = time.perf_counter()
    return t1 - t0, t2 - t1, t2 - t0, res.retained


def run_bench(
    video: VideoTokens,
    retentions=(1.0, 0.25, 0.1),
    repeats: int = 20,
    cfg: CompressionConfig | None = None,
    backend=None,
    warmup: int = 1,
) -> list[LevelStats]:
    base = cfg or CompressionConfig()
    out = []
    for R in retentions:
        c = replace(base, retention=R)
        for _ in range(warmup):
            attention_pass(compress_batch(video, c, backend).compressed)
        gc_was_enabled = gc.isenabled()
        gc.disable()  # collector pauses would otherwise land in random samples
        try:
            samples = [_timed(video, c, backend) for _ in range(repeats)]
        finally:
            if gc_was_enabled:
                gc.enable()
        comp, down, total, kept_counts = zip(*samples)
        kept = kept_counts[-1]
        cm, cs = _ms(comp)
        dm, ds = _ms(down)
        tm, ts = _ms(total)
        out.append(LevelStats(R, kept, cm, cs, dm, ds, tm, ts, float(kept) ** 2))
    return out


def compare_backends(video: VideoTokens, cfg: CompressionConfig | None = None, repeats: int = 10) -> dict[str, dict]:
    """Compression wall-clock per available kernel backend, plus a mask agreement check."""
    cfg = cfg or CompressionConfig()
    results, masks = {}, {}
    for name in sorted(_backend.AVAILABLE):
        compress_batch(video, cfg, name)
        samples = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            res = compress_batch(video, cfg, name)
            samples.append(time.perf_counter() - t0)
        mean, std = _ms(samples)
        results[name] = {"compress_ms_mean": mean, "compress_ms_std": std}
        masks[name] = res.masks
    names = list(masks)
    results["masks_agree"] = all(np.array_equal(masks[names[0]], masks[n]) for n in names[1:])
    if "python" in results and "cython" in results:
        results["speedup"] = results["python"]["compress_ms_mean"] / results["cython"]["compress_ms_mean"]
    return results
