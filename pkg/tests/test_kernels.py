"""Compiled and pure-Python kernels must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidtok import _backend, _kernels_py
from vidtok.pipeline import CompressionConfig, compress_batch
from vidtok.tensors import VideoTokens

compiled = pytest.mark.skipif("cython" not in _backend.AVAILABLE, reason="extension not built")


def test_unknown_backend():
    with pytest.raises(ValueError, match="not available"):
        _backend.get("fortran")


def test_pure_python_can_be_forced():
    env = dict(os.environ, VIDTOK_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from vidtok import _backend; print(_backend.DEFAULT, sorted(_backend.AVAILABLE))"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.split()[0] == "python"
    assert "cython" not in out.stdout


@compiled
@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 60), st.integers(1, 12), st.integers(1, 20))
def test_kernels_agree(seed, N, D, k):
    ck = _backend.get("cython")
    rng = np.random.default_rng(seed)
    frame = rng.standard_normal((N, D))
    mem = rng.standard_normal((N, D)) * (rng.random((N, 1)) < 0.7)
    touched = rng.random(N) < 0.6
    assert np.array_equal(ck.abs_row_sums(frame), _kernels_py.abs_row_sums(frame))
    a = ck.row_cosine(frame, mem, touched)
    b = _kernels_py.row_cosine(frame, mem, touched)
    assert np.array_equal(a, b)

    bounds = np.minimum(np.arange(0, N + k, k), N).astype(np.int64)
    bounds = np.unique(bounds)
    caps = np.diff(bounds)
    counts = np.array([rng.integers(0, c + 1) for c in caps], dtype=np.int64)
    scores = np.round(rng.standard_normal(N), 1)
    assert np.array_equal(ck.topk_per_patch(scores, bounds, counts), _kernels_py.topk_per_patch(scores, bounds, counts))

    mask = rng.random(N) < 0.5
    m1, t1 = mem.copy(), touched.copy()
    m2, t2 = mem.copy(), touched.copy()
    ck.ema_rows_update(m1, t1, frame, mask, 0.9)
    _kernels_py.ema_rows_update(m2, t2, frame, mask, 0.9)
    assert np.array_equal(m1, m2) and np.array_equal(t1, t2)


@compiled
def test_pipeline_masks_agree_across_backends():
    rng = np.random.default_rng(3)
    for _ in range(20):
        T, N, D = rng.integers(1, 10), rng.integers(1, 80), rng.integers(1, 20)
        v = VideoTokens(rng.standard_normal((T, N, D)))
        cfg = CompressionConfig(retention=float(rng.uniform(0.05, 1.0)))
        a = compress_batch(v, cfg, "cython")
        b = compress_batch(v, cfg, "python")
        assert np.array_equal(a.masks, b.masks)
