"""Standalone RAF codec plus PGM reading.

Deliberately self-contained: the adapter talks to the core through files
only, so the two sides share a format, not a library. Layout (all little
endian): magic "RAPA", version u8 = 1, dtype u8 (1 = f32, 2 = u8), ndim u8,
reserved u8 = 0, ndim x u32 dims, raw row-major payload (channel innermost
for 3-D). u8 arrays are {0, 255} masks.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import SchemaError

_HEADER = struct.Struct("<4sBBBB")


def read_raf(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise SchemaError(f"{path}: truncated RAF header")
    magic, version, dtype, ndim, reserved = _HEADER.unpack_from(blob, 0)
    if magic != b"RAPA" or version != 1 or reserved != 0:
        raise SchemaError(f"{path}: not a valid RAF v1 file")
    if dtype not in (1, 2) or ndim not in (1, 2, 3):
        raise SchemaError(f"{path}: unsupported dtype/ndim {dtype}/{ndim}")
    off = _HEADER.size
    dims = struct.unpack_from(f"<{ndim}I", blob, off)
    off += 4 * ndim
    count = int(np.prod(dims, dtype=np.int64))
    if dtype == 1:
        if len(blob) - off != 4 * count:
            raise SchemaError(f"{path}: payload size mismatch")
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=off).reshape(dims)
        if not np.all(np.isfinite(arr)):
            raise SchemaError(f"{path}: non-finite payload")
        return arr.astype(np.float32)
    if ndim != 2 or len(blob) - off != count:
        raise SchemaError(f"{path}: malformed mask RAF")
    arr = np.frombuffer(blob, dtype=np.uint8, count=count, offset=off).reshape(dims)
    if not np.isin(arr, (0, 255)).all():
        raise SchemaError(f"{path}: mask values outside {{0, 255}}")
    return arr == 255


def write_raf(value: np.ndarray, path) -> None:
    arr = np.asarray(value)
    if arr.dtype == np.bool_:
        payload = np.where(arr, 255, 0).astype(np.uint8).tobytes()
        dtype = 2
    else:
        payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        dtype = 1
    header = _HEADER.pack(b"RAPA", 1, dtype, arr.ndim, 0)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(header + dims + payload)


def read_pgm(path) -> np.ndarray:
    """Binary P5 PGM to float32 in [0, 1]."""
    blob = Path(path).read_bytes()
    tokens = []
    i = 0
    while len(tokens) < 4 and i < len(blob):
        c = blob[i : i + 1]
        if c.isspace():
            i += 1
        elif c == b"#":
            while i < len(blob) and blob[i : i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < len(blob) and not blob[j : j + 1].isspace():
                j += 1
            tokens.append(blob[i:j])
            i = j
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise SchemaError(f"{path}: expected a binary P5 PGM")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    raw = np.frombuffer(blob, dtype=dtype, count=width * height, offset=i + 1)
    return (raw.reshape(height, width).astype(np.float32) / np.float32(maxval)).astype(np.float32)


def load_image(path) -> np.ndarray:
    p = Path(path)
    if p.suffix.lower() == ".pgm":
        return read_pgm(p)
    arr = read_raf(p)
    if arr.ndim != 2 or arr.dtype == np.bool_:
        raise SchemaError(f"{path}: expected a 2-D float image")
    return arr
