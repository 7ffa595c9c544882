"""Novelty-driven token compression for video encoder outputs.

Tokens are kept in two stages: a per-frame budget proportional to how much
each frame departs from a running summary of the video, then a per-frame
selection that spreads the budget across spatial patches and penalizes tokens
that repeat what was kept at the same position earlier.
"""

__version__ = "0.1.0"

from ._backend import AVAILABLE as BACKENDS  # noqa: E402
from .errors import (  # noqa: E402
    BudgetError,
    ConfigurationError,
    DimensionError,
    InvariantError,
    SessionError,
    VidtokError,
)
from .pipeline import (  # noqa: E402
    CompressionConfig,
    CompressionResult,
    StreamSession,
    compress_batch,
    compress_stream,
    reconstruct,
)
from .tensors import VideoTokens  # noqa: E402

__all__ = [
    "BACKENDS",
    "BudgetError",
    "CompressionConfig",
    "CompressionResult",
    "ConfigurationError",
    "DimensionError",
    "InvariantError",
    "SessionError",
    "StreamSession",
    "VideoTokens",
    "VidtokError",
    "__version__",
    "compress_batch",
    "compress_stream",
    "reconstruct",
]
