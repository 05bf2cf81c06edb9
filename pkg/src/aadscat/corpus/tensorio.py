"""The "AADT" binary tensor format.

Layout (all integers little-endian)::

    offset  size       field
    0       4          magic b"AADT"
    4       1          version, 0x01
    5       1          dtype code, 0x01 = float32
    6       1          ndim
    7       4 * ndim   dims as u32
    ...     4 * prod   payload, row-major float32

A JSON sidecar ``<path>.json`` carries rates, labels and any other metadata.
"""
from __future__ import annotations

import json
import math
import os
import struct
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

MAGIC = b"AADT"
VERSION = 1
DTYPE_FLOAT32 = 1
HEADER_FIXED = 7
MAX_DIM = 2 ** 32 - 1
MAX_NDIM = 255


class TensorFormatError(ValueError):
    """Base class for AADT parse and validation failures."""


class BadMagicError(TensorFormatError):
    pass


class BadVersionError(TensorFormatError):
    pass


class BadDtypeError(TensorFormatError):
    pass


class TruncatedError(TensorFormatError):
    pass


class TrailingDataError(TensorFormatError):
    pass


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def encode_tensor(tensor) -> bytes:
    """Serialize an array as AADT bytes. Values are stored as float32."""
    a = np.asarray(tensor)
    if a.ndim > MAX_NDIM:
        raise TensorFormatError(f"ndim {a.ndim} exceeds {MAX_NDIM}")
    if any(d > MAX_DIM for d in a.shape):
        raise TensorFormatError(f"dimension too large for u32: {a.shape}")
    a32 = a.astype("<f4")
    if not np.all(np.isfinite(a32)):
        raise TensorFormatError("tensor contains non-finite values")
    header = MAGIC + bytes([VERSION, DTYPE_FLOAT32, a.ndim]) + struct.pack(f"<{a.ndim}I", *a.shape)
    return header + np.ascontiguousarray(a32).tobytes()


def parse_header(buf: bytes) -> Tuple[Tuple[int, ...], int]:
    """Return ``(dims, payload_offset)`` from the start of an AADT buffer."""
    if len(buf) < 4:
        raise TruncatedError(f"file too short for the magic ({len(buf)} bytes)")
    if buf[:4] != MAGIC:
        raise BadMagicError(f"bad magic {bytes(buf[:4])!r}")
    if len(buf) < HEADER_FIXED:
        raise TruncatedError("header truncated")
    if buf[4] != VERSION:
        raise BadVersionError(f"unsupported version {buf[4]}")
    if buf[5] != DTYPE_FLOAT32:
        raise BadDtypeError(f"unsupported dtype code {buf[5]}")
    ndim = buf[6]
    end = HEADER_FIXED + 4 * ndim
    if len(buf) < end:
        raise TruncatedError("dims truncated")
    dims = struct.unpack(f"<{ndim}I", bytes(buf[HEADER_FIXED:end]))
    return tuple(dims), end


def decode_tensor(buf: bytes) -> np.ndarray:
    dims, off = parse_header(buf)
    expected = 4 * math.prod(dims)
    payload = len(buf) - off
    if payload < expected:
        raise TruncatedError(f"payload has {payload} bytes, expected {expected}")
    if payload > expected:
        raise TrailingDataError(f"{payload - expected} unexpected bytes after the payload")
    return np.frombuffer(buf, dtype="<f4", count=math.prod(dims), offset=off).reshape(dims).copy()


def write_tensor(tensor, path, meta: Optional[dict] = None) -> Path:
    """Write ``tensor`` to ``path`` and, if given, ``meta`` to the sidecar.

    The file is written to a temporary name and renamed, so a reader never
    sees a partial tensor.
    """
    path = Path(path)
    data = encode_tensor(tensor)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)
    if meta is not None:
        side = sidecar_path(path)
        tmp = side.with_name(side.name + ".tmp")
        with open(tmp, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
        os.replace(tmp, side)
    return path


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_tensor(fh.read())


def read_dims(path) -> Tuple[int, ...]:
    """Dims from the header only, checking the file size matches."""
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        head = fh.read(HEADER_FIXED + 4 * MAX_NDIM)
    dims, off = parse_header(head)
    expected = off + 4 * math.prod(dims)
    if size < expected:
        raise TruncatedError(f"{path}: {size} bytes, expected {expected}")
    if size > expected:
        raise TrailingDataError(f"{path}: {size - expected} unexpected trailing bytes")
    return dims


def read_meta(path) -> dict:
    side = sidecar_path(path)
    if not side.exists():
        return {}
    with open(side) as fh:
        return json.load(fh)
