"""Frequency-domain style adaptation via a single-level orthonormal Haar DWT.

The support keeps its detail subbands (edges, texture) while its
low-frequency approximation is swapped for the query's, transplanting the
query's global appearance onto the support. Odd-sized inputs are padded by
edge replication before filtering and cropped after reconstruction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimError
from .resample import resize_bilinear
from .validation import check_image


@dataclass
class WaveletSubbands:
    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray


def dwt2(image) -> WaveletSubbands:
    """Single-level orthonormal Haar analysis; subbands are ceil(H/2) x ceil(W/2)."""
    x = np.asarray(image, dtype=np.float64)
    if x.ndim != 2:
        raise DimError(f"dwt2 expects a 2-D array, got shape {x.shape}")
    pad_h = x.shape[0] % 2
    pad_w = x.shape[1] % 2
    if pad_h or pad_w:
        x = np.pad(x, ((0, pad_h), (0, pad_w)), mode="edge")
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    return WaveletSubbands(
        ll=(a + b + c + d) / 2.0,
        lh=(a + b - c - d) / 2.0,
        hl=(a - b + c - d) / 2.0,
        hh=(a - b - c + d) / 2.0,
    )


def idwt2(subbands: WaveletSubbands, out_height: int, out_width: int) -> np.ndarray:
    """Inverse of dwt2, cropped to the requested size and clamped to [0, 1]."""
    ll = np.asarray(subbands.ll, dtype=np.float64)
    expect = ((out_height + 1) // 2, (out_width + 1) // 2)
    for name, band in (("ll", ll), ("lh", subbands.lh), ("hl", subbands.hl), ("hh", subbands.hh)):
        if np.shape(band) != expect:
            raise DimError(
                f"subband {name} has shape {np.shape(band)}, expected {expect} "
                f"for a {out_height}x{out_width} output"
            )
    lh = np.asarray(subbands.lh, dtype=np.float64)
    hl = np.asarray(subbands.hl, dtype=np.float64)
    hh = np.asarray(subbands.hh, dtype=np.float64)
    sh, sw = ll.shape
    x = np.empty((2 * sh, 2 * sw), dtype=np.float64)
    x[0::2, 0::2] = (ll + lh + hl + hh) / 2.0
    x[0::2, 1::2] = (ll + lh - hl - hh) / 2.0
    x[1::2, 0::2] = (ll - lh + hl - hh) / 2.0
    x[1::2, 1::2] = (ll - lh - hl + hh) / 2.0
    return np.clip(x[:out_height, :out_width], 0.0, 1.0)


def style_adapt(support, query) -> np.ndarray:
    """Rebuild the support from (query LL, support LH/HL/HH) at query size."""
    s = check_image(support, "support")
    q = check_image(query, "query")
    if s.shape != q.shape:
        s = np.clip(resize_bilinear(s, q.shape[0], q.shape[1]), 0.0, 1.0)
    sq = dwt2(q)
    ss = dwt2(s)
    swapped = WaveletSubbands(ll=sq.ll, lh=ss.lh, hl=ss.hl, hh=ss.hh)
    return idwt2(swapped, q.shape[0], q.shape[1])
