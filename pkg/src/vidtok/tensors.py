"""Dense tensor container and the handful of numeric primitives used everywhere.

All arithmetic happens in float64; the on-disk format stores float32.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from .errors import DimensionError

EPS = 1e-12


class VideoTokens:
    """Frame-major token tensor of shape ``(T, N, D)``.

    The data is copied into a C-contiguous float64 array and frozen, so frame
    views handed out by :meth:`frame` can never be written through.
    """

    __slots__ = ("_data",)

    def __init__(self, data) -> None:
        arr = np.array(data, dtype=np.float64, order="C", copy=True)
        if arr.ndim != 3:
            raise DimensionError(f"expected a (T, N, D) tensor, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise DimensionError(f"all dimensions must be >= 1, got {arr.shape}")
        if not np.isfinite(arr).all():
            bad = int(np.flatnonzero(~np.isfinite(arr.ravel()))[0])
            raise ValueError(f"non-finite value at flat index {bad}")
        arr.setflags(write=False)
        self._data = arr

    @classmethod
    def from_flat(cls, values, T: int, N: int, D: int) -> "VideoTokens":
        flat = np.asarray(values, dtype=np.float64)
        if flat.size != T * N * D:
            raise DimensionError(f"expected {T * N * D} values for ({T}, {N}, {D}), got {flat.size}")
        return cls(flat.reshape(T, N, D))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> tuple[int, int, int]:
        return self._data.shape  # type: ignore[return-value]

    @property
    def T(self) -> int:
        return self._data.shape[0]

    @property
    def N(self) -> int:
        return self._data.shape[1]

    @property
    def D(self) -> int:
        return self._data.shape[2]

    def frame(self, t: int) -> np.ndarray:
        """Read-only ``(N, D)`` view of frame ``t`` (no copy)."""
        if not 0 <= t < self.T:
            raise IndexError(f"frame {t} out of range for T={self.T}")
        return self._data[t]

    def frames(self) -> Iterator[np.ndarray]:
        for t in range(self.T):
            yield self._data[t]

    def __len__(self) -> int:
        return self.T

    def __eq__(self, other) -> bool:
        if not isinstance(other, VideoTokens):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._data, other._data))

    def __repr__(self) -> str:
        T, N, D = self.shape
        return f"VideoTokens(T={T}, N={N}, D={D})"


def _vec(x) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"expected a vector, got shape {v.shape}")
    return v


def _check_same_length(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")


def global_pool(frame) -> np.ndarray:
    """Mean of the token vectors of one frame."""
    f = np.asarray(frame, dtype=np.float64)
    if f.ndim != 2 or f.shape[0] == 0:
        raise DimensionError(f"expected a non-empty (N, D) frame, got shape {f.shape}")
    return f.mean(axis=0)


def l2_distance(a, b) -> float:
    a, b = _vec(a), _vec(b)
    _check_same_length(a, b)
    return float(np.linalg.norm(a - b))


def cosine_sim(a, b) -> float:
    """Cosine similarity, defined as 0 when either vector has norm below ``EPS``."""
    a, b = _vec(a), _vec(b)
    _check_same_length(a, b)
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na < EPS or nb < EPS:
        return 0.0
    c = float(a @ b) / (na * nb)
    return min(1.0, max(-1.0, c))


def minmax_normalize(values) -> np.ndarray:
    """Rescale to [0, 1]; a constant input maps to 0.5 everywhere."""
    v = _vec(values)
    if v.size == 0:
        raise DimensionError("cannot normalize an empty vector")
    lo, hi = v.min(), v.max()
    if hi - lo <= 0.0:
        return np.full_like(v, 0.5)
    return np.clip((v - lo) / (hi - lo), 0.0, 1.0)
