"""DTOK: the on-disk token tensor format.

Layout, all little-endian::

    offset  size  field
    0       4     magic b"DTOK"
    4       2     version (u16), currently 1
    6       4     T (u32)
    10      4     N (u32)
    14      4     D (u32)
    18      4*TND payload, float32, frame-major (t, n, d)

Values are stored as float32 and upcast to float64 on read, so a read/write
cycle of a file is byte-exact. Any disagreement between the header and the
payload length is an error; nothing is returned from a malformed file.
"""

from __future__ import annotations

import hashlib
import os
import struct

import numpy as np

from .errors import VidtokError
from .tensors import VideoTokens

MAGIC = b"DTOK"
VERSION = 1
HEADER = struct.Struct("<4sHIII")
HEADER_SIZE = HEADER.size  # 18
# refuse payloads we could never address rather than attempting the allocation
MAX_ELEMENTS = 1 << 36


class TokenFileError(VidtokError):
    """Malformed DTOK data. ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class MagicError(TokenFileError):
    pass


class VersionError(TokenFileError):
    pass


class TruncationError(TokenFileError):
    pass


class DimensionOverflowError(TokenFileError):
    pass


class TrailingDataError(TokenFileError):
    pass


class NonFiniteError(TokenFileError):
    pass


def encode(video: VideoTokens) -> bytes:
    T, N, D = video.shape
    payload = video.data.astype("<f4", copy=False)
    if not np.isfinite(payload).all():
        raise ValueError("values overflow float32")
    return HEADER.pack(MAGIC, VERSION, T, N, D) + payload.tobytes(order="C")


def decode(buf: bytes) -> VideoTokens:
    if len(buf) < 4 and MAGIC.startswith(bytes(buf)):
        raise TruncationError("file shorter than the magic number", len(buf))
    if bytes(buf[:4]) != MAGIC:
        raise MagicError(f"bad magic {bytes(buf[:4])!r}, expected {MAGIC!r}", 0)
    if len(buf) < HEADER_SIZE:
        raise TruncationError(f"header needs {HEADER_SIZE} bytes, file has {len(buf)}", len(buf))
    _, version, T, N, D = HEADER.unpack_from(buf, 0)
    if version != VERSION:
        raise VersionError(f"unsupported version {version}", 4)
    for name, value, off in (("T", T, 6), ("N", N, 10), ("D", D, 14)):
        if value == 0:
            raise DimensionOverflowError(f"dimension {name} is zero", off)
    count = T * N * D
    if count > MAX_ELEMENTS:
        raise DimensionOverflowError(f"declared {T}x{N}x{D} = {count} elements exceeds limit", 6)
    need = HEADER_SIZE + 4 * count
    if len(buf) < need:
        raise TruncationError(f"payload needs {4 * count} bytes, file has {len(buf) - HEADER_SIZE}", len(buf))
    if len(buf) > need:
        raise TrailingDataError(f"{len(buf) - need} bytes after the declared payload", need)
    arr = np.frombuffer(buf, dtype="<f4", count=count, offset=HEADER_SIZE)
    bad = ~np.isfinite(arr)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NonFiniteError(f"non-finite value at element {i}", HEADER_SIZE + 4 * i)
    return VideoTokens(arr.astype(np.float64).reshape(T, N, D))


def write_tokens(video: VideoTokens, path) -> None:
    data = encode(video)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def read_tokens(path) -> VideoTokens:
    with open(path, "rb") as fh:
        return decode(fh.read())


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
