"""Middlebury ``.flo`` reading and writing.

Layout (little-endian): float32 magic ``202021.25``, int32 width, int32
height, then ``height * width`` interleaved float32 ``(u, v)`` pairs in
row-major order.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .core import FlowField
from .errors import BadFloDimensionsError, BadMagicError, TruncatedFloError

MAGIC = 202021.25
_HEADER = struct.Struct("<fii")


def write_flo(field: FlowField) -> bytes:
    """Encode a field; float64 fields are rounded to float32."""
    h, w = field.height, field.width
    payload = np.ascontiguousarray(field.vectors, dtype="<f4")
    return _HEADER.pack(MAGIC, w, h) + payload.tobytes()


def read_flo(data: bytes) -> FlowField:
    if len(data) < _HEADER.size:
        raise TruncatedFloError(f"need {_HEADER.size} header bytes, got {len(data)}")
    magic, w, h = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC}")
    if w <= 0 or h <= 0:
        raise BadFloDimensionsError(f"nonpositive dimensions {w}x{h}")
    expected = _HEADER.size + 8 * w * h
    if len(data) < expected:
        raise TruncatedFloError(f"payload holds {len(data) - _HEADER.size} bytes, expected {8 * w * h}")
    vec = np.frombuffer(data, dtype="<f4", count=2 * w * h, offset=_HEADER.size)
    return FlowField(vec.reshape(h, w, 2).astype(np.float32))


def save_flo(field: FlowField, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(write_flo(field))


def load_flo(path: str | os.PathLike) -> FlowField:
    with open(path, "rb") as fh:
        return read_flo(fh.read())
