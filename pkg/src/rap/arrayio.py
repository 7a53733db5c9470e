"""Bit-exact array interchange: RAF container, binary PGM input, PNG output.

RAF layout (little-endian throughout, no padding, no compression):

    magic  "RAPA"   4 bytes
    version u8      always 1
    dtype   u8      1 = f32, 2 = u8
    ndim    u8      1, 2 or 3
    reserved u8     always 0
    dims    ndim x u32
    payload row-major, channel-innermost for ndim = 3

u8 arrays are two-dimensional masks stored as {0, 255} and decode to bool.
f32 arrays decode exactly as stored: 1-D descriptor vectors, 2-D scalar
grids (images, strength maps), or 3-D feature grids.
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, IoError, TruncatedError, UnsupportedError

MAGIC = b"RAPA"
VERSION = 1
DTYPE_F32 = 1
DTYPE_U8 = 2

_HEADER = struct.Struct("<4sBBBB")


def read_array(path) -> np.ndarray:
    """Decode a RAF file. Returns bool 2-D for masks, float32 otherwise."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise TruncatedError(f"{path}: shorter than the RAF header")
    magic, version, dtype, ndim, reserved = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if ndim not in (1, 2, 3):
        raise FormatError(f"{path}: bad ndim {ndim}")
    if reserved != 0:
        raise FormatError(f"{path}: reserved byte must be 0")
    if dtype not in (DTYPE_F32, DTYPE_U8):
        raise FormatError(f"{path}: unknown dtype code {dtype}")
    if dtype == DTYPE_U8 and ndim != 2:
        raise FormatError(f"{path}: u8 arrays must be 2-D, got ndim {ndim}")

    off = _HEADER.size
    if len(blob) < off + 4 * ndim:
        raise TruncatedError(f"{path}: header dims truncated")
    dims = struct.unpack_from(f"<{ndim}I", blob, off)
    off += 4 * ndim
    if any(d == 0 for d in dims):
        raise FormatError(f"{path}: zero-sized dimension in {dims}")

    count = int(np.prod(dims, dtype=np.int64))
    itemsize = 4 if dtype == DTYPE_F32 else 1
    need = count * itemsize
    got = len(blob) - off
    if got < need:
        raise TruncatedError(f"{path}: payload has {got} bytes, expected {need}")
    if got > need:
        raise FormatError(f"{path}: {got - need} trailing bytes after payload")

    if dtype == DTYPE_F32:
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=off).reshape(dims)
        if not np.all(np.isfinite(arr)):
            raise DataError(f"{path}: non-finite float payload")
        return arr.astype(np.float32)
    arr = np.frombuffer(blob, dtype=np.uint8, count=count, offset=off).reshape(dims)
    if not np.isin(arr, (0, 255)).all():
        raise DataError(f"{path}: mask payload has values outside {{0, 255}}")
    return arr == 255


def write_array(value, path) -> None:
    """Encode an array as RAF. Boolean / {0,1}-integer 2-D arrays become masks."""
    arr = np.asarray(value)
    if arr.dtype == np.bool_ or np.issubdtype(arr.dtype, np.integer):
        if arr.ndim != 2:
            raise DataError(f"mask arrays must be 2-D, got shape {arr.shape}")
        if arr.dtype != np.bool_ and not np.isin(arr, (0, 1)).all():
            raise DataError("integer arrays must be binary {0, 1} masks")
        payload = np.where(arr.astype(bool), 255, 0).astype(np.uint8)
        dtype = DTYPE_U8
    else:
        if arr.ndim not in (1, 2, 3):
            raise DataError(f"float arrays must be 1-, 2- or 3-D, got shape {arr.shape}")
        payload = np.ascontiguousarray(arr, dtype="<f4")
        if not np.all(np.isfinite(payload)):
            raise DataError("non-finite values in float array")
        dtype = DTYPE_F32
    if arr.size == 0:
        raise DataError("refusing to write an empty array")

    header = _HEADER.pack(MAGIC, VERSION, dtype, arr.ndim, 0)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    try:
        Path(path).write_bytes(header + dims + payload.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _pgm_tokens(blob: bytes):
    """Yield header tokens of a PGM file, skipping whitespace and # comments."""
    i = 0
    while i < len(blob):
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
            yield blob[i:j], j
            i = j


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM as float32 in [0, 1] (intensities / maxval)."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    tokens = _pgm_tokens(blob)
    try:
        magic, _ = next(tokens)
    except StopIteration:
        raise FormatError(f"{path}: empty file") from None
    if magic == b"P2":
        raise UnsupportedError(f"{path}: ASCII PGM (P2) is not supported, use P5")
    if magic != b"P5":
        raise FormatError(f"{path}: not a PGM file (magic {magic!r})")
    try:
        (w_tok, _), (h_tok, _), (max_tok, end) = next(tokens), next(tokens), next(tokens)
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except (StopIteration, ValueError):
        raise FormatError(f"{path}: malformed PGM header") from None
    if width <= 0 or height <= 0 or maxval <= 0:
        raise FormatError(f"{path}: bad PGM dimensions or maxval")
    if maxval > 65535:
        raise FormatError(f"{path}: maxval {maxval} exceeds 65535")

    off = end + 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    if len(blob) - off < need:
        raise TruncatedError(f"{path}: PGM payload truncated")
    raw = np.frombuffer(blob, dtype=dtype, count=width * height, offset=off)
    return (raw.reshape(height, width).astype(np.float32) / np.float32(maxval)).astype(
        np.float32
    )


def write_pgm(image, path) -> None:
    """Write a [0, 1] grayscale image as binary PGM with maxval 255."""
    arr = np.asarray(image, dtype=np.float64)
    data = np.clip(np.floor(arr * 255.0 + 0.5), 0, 255).astype(np.uint8)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode()
    try:
        Path(path).write_bytes(header + data.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _png_chunk(tag: bytes, body: bytes) -> bytes:
    raw = tag + body
    return struct.pack(">I", len(body)) + raw + struct.pack(">I", zlib.crc32(raw))


def write_png(image, path) -> None:
    """Write an 8-bit grayscale PNG from a [0, 1] float or uint8 grid."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        arr = np.clip(np.floor(arr.astype(np.float64) * 255.0 + 0.5), 0, 255).astype(np.uint8)
    _write_png_raw(arr[:, :, None], path, color_type=0)


def write_png_rgb(image, path) -> None:
    """Write an 8-bit RGB PNG from an (h, w, 3) uint8 or [0, 1] float array."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DataError(f"RGB PNG needs an (h, w, 3) array, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        arr = np.clip(np.floor(arr.astype(np.float64) * 255.0 + 0.5), 0, 255).astype(np.uint8)
    _write_png_raw(arr, path, color_type=2)


def _write_png_raw(pixels: np.ndarray, path, color_type: int) -> None:
    h, w, _ = pixels.shape
    ihdr = struct.pack(">IIBBBBB", w, h, 8, color_type, 0, 0, 0)
    scanlines = np.concatenate(
        [np.zeros((h, 1), dtype=np.uint8), pixels.reshape(h, -1)], axis=1
    )
    body = zlib.compress(scanlines.tobytes(), 9)
    blob = (
        b"\x89PNG\r\n\x1a\n"
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", body)
        + _png_chunk(b"IEND", b"")
    )
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_image(path) -> np.ndarray:
    """Load a grayscale image by extension: .pgm via read_pgm, else RAF."""
    p = Path(path)
    if p.suffix.lower() == ".pgm":
        return read_pgm(p)
    arr = read_array(p)
    if arr.dtype == np.bool_ or arr.ndim != 2:
        raise FormatError(f"{path}: expected a 2-D float image")
    return arr
