"""Bit-exact weights serialization.

Layout: magic "LW01" | u32 LE header length | JSON header (model spec plus
ordered (name, shape) list) | each tensor as little-endian float32 in header
order | u32 LE CRC32 of all preceding bytes.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from ..errors import BadMagic, ChecksumMismatch, SpecMismatch, TruncatedStream
from .model import ModelSpec, ModelWeights

MAGIC = b"LW01"


def save_weights(weights: ModelWeights) -> bytes:
    names = list(weights.spec.tensor_shapes())
    header = json.dumps(
        {
            "spec": weights.spec.to_dict(),
            "tensors": [[n, list(weights.tensors[n].shape)] for n in names],
        },
        sort_keys=True,
    ).encode()
    body = bytearray()
    body += MAGIC
    body += struct.pack("<I", len(header))
    body += header
    for n in names:
        body += np.ascontiguousarray(weights.tensors[n], dtype="<f4").tobytes()
    body += struct.pack("<I", zlib.crc32(bytes(body)))
    return bytes(body)


def load_weights(data: bytes) -> ModelWeights:
    if len(data) < 4:
        raise TruncatedStream("stream shorter than magic")
    if data[:4] != MAGIC:
        raise BadMagic("not a weights stream")
    if len(data) < 12:
        raise TruncatedStream("incomplete stream")
    crc_stored = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) != crc_stored:
        raise ChecksumMismatch("CRC32 mismatch")
    (header_len,) = struct.unpack_from("<I", data, 4)
    if len(data) < 8 + header_len + 4:
        raise TruncatedStream("header exceeds stream length")
    try:
        header = json.loads(data[8 : 8 + header_len])
        spec = ModelSpec.from_dict(header["spec"])
        listed = [(str(n), tuple(int(d) for d in s)) for n, s in header["tensors"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise SpecMismatch(f"malformed header: {exc}") from exc
    expected = spec.tensor_shapes()
    if listed != list(expected.items()):
        raise SpecMismatch("tensor list disagrees with model spec")
    offset = 8 + header_len
    tensors = {}
    for name, shape in listed:
        count = int(np.prod(shape))
        nbytes = count * 4
        if offset + nbytes > len(data) - 4:
            raise SpecMismatch("tensor data exceeds stream length")
        tensors[name] = (
            np.frombuffer(data, dtype="<f4", count=count, offset=offset)
            .reshape(shape)
            .copy()
        )
        offset += nbytes
    if offset != len(data) - 4:
        raise SpecMismatch("trailing bytes after tensor data")
    return ModelWeights(spec, tensors)
