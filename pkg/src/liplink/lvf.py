"""LVF frame container: raw 8-bit grayscale video interchange format.

Layout (all integers little-endian):

    "LVF1" | u32 width | u32 height | u32 fps | u32 frame_count |
    frame_count * (width*height) bytes, row-major, top-left origin
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import BadMagic, TruncatedStream, ZeroDimension

MAGIC = b"LVF1"
_HEADER = struct.Struct("<4sIIII")


@dataclass
class FrameSequence:
    """Decoded grayscale frames plus their recording parameters."""

    width: int
    height: int
    fps: int
    frames: np.ndarray  # (n, height, width) uint8

    def __post_init__(self):
        self.frames = np.ascontiguousarray(self.frames, dtype=np.uint8)
        if self.frames.ndim != 3:
            raise ValueError("frames must be a (n, height, width) array")
        n, h, w = self.frames.shape
        if n < 1 or self.width < 1 or self.height < 1:
            raise ZeroDimension("empty frame sequence")
        if (h, w) != (self.height, self.width):
            raise ValueError("frame shape disagrees with declared dimensions")

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]


def decode_lvf(data: bytes) -> FrameSequence:
    """Parse an LVF byte stream into a FrameSequence."""
    if len(data) < 4:
        raise TruncatedStream("stream shorter than magic")
    if data[:4] != MAGIC:
        raise BadMagic("not an LVF stream")
    if len(data) < _HEADER.size:
        raise TruncatedStream("incomplete header")
    _, width, height, fps, count = _HEADER.unpack_from(data)
    if width == 0 or height == 0 or count == 0:
        raise ZeroDimension("zero width, height or frame count")
    payload = count * width * height
    if len(data) < _HEADER.size + payload:
        raise TruncatedStream(
            f"expected {payload} payload bytes, got {len(data) - _HEADER.size}"
        )
    frames = np.frombuffer(
        data, dtype=np.uint8, count=payload, offset=_HEADER.size
    ).reshape(count, height, width)
    return FrameSequence(width=width, height=height, fps=fps, frames=frames.copy())


def encode_lvf(seq: FrameSequence) -> bytes:
    """Serialize a FrameSequence; inverse of decode_lvf, bit-exact."""
    header = _HEADER.pack(MAGIC, seq.width, seq.height, seq.fps, seq.frame_count)
    return header + seq.frames.tobytes()
