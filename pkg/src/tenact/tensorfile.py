"""Bit-exact binary serialization of complex tensors.

Layout, all little-endian: magic ``ATNS``, u16 version (=1), u16 ndim,
ndim x u64 dims, then ``prod(dims)`` complex128 values (interleaved
re/im float64 pairs) in C element order (last index fastest).
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"ATNS"
VERSION = 1


class TensorFileError(ValueError):
    """Malformed header or payload in a tensor file."""


def write_tensor(path, t: np.ndarray):
    data = np.ascontiguousarray(t, dtype=np.complex128)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<HH", VERSION, data.ndim))
        f.write(np.array(data.shape, dtype="<u8").tobytes())
        f.write(data.astype("<c16", copy=False).tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise TensorFileError("bad magic")
    if len(raw) < 8:
        raise TensorFileError("truncated header")
    version, ndim = struct.unpack("<HH", raw[4:8])
    if version != VERSION:
        raise TensorFileError(f"unsupported version {version}")
    header_end = 8 + 8 * ndim
    if len(raw) < header_end:
        raise TensorFileError("truncated dimension table")
    dims = tuple(int(d) for d in np.frombuffer(raw[8:header_end], dtype="<u8"))
    want = 16 * int(np.prod(dims, dtype=np.int64))
    got = len(raw) - header_end
    if got != want:
        raise TensorFileError(f"payload is {got} bytes, expected {want} for dims {dims}")
    data = np.frombuffer(raw[header_end:], dtype="<c16").astype(np.complex128)
    return data.reshape(dims)
