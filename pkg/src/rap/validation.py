"""Input validation helpers.

All pipeline entry points funnel arrays through these checks so that shape
and value errors surface early with consistent exception types.
"""
from __future__ import annotations

import numpy as np

from .errors import DataError, DimError


def check_image(arr, name: str = "image") -> np.ndarray:
    """Validate a grayscale image: 2-D, finite, values in [0, 1]."""
    a = np.asarray(arr, dtype=np.float32)
    if a.ndim != 2 or a.size == 0:
        raise DimError(f"{name}: expected a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataError(f"{name}: non-finite values")
    if a.min() < 0.0 or a.max() > 1.0:
        raise DataError(f"{name}: values outside [0, 1] (min={a.min()}, max={a.max()})")
    return a


def check_mask(arr, name: str = "mask") -> np.ndarray:
    """Validate a binary mask: 2-D with values in {0, 1}; returns bool array."""
    a = np.asarray(arr)
    if a.ndim != 2 or a.size == 0:
        raise DimError(f"{name}: expected a non-empty 2-D array, got shape {a.shape}")
    if a.dtype != np.bool_:
        vals = np.unique(a)
        if not np.isin(vals, (0, 1)).all():
            raise DataError(f"{name}: values outside {{0, 1}}")
        a = a.astype(bool)
    return a


def check_features(arr, name: str = "features") -> np.ndarray:
    """Validate a patch-feature grid: 3-D (h, w, d), finite, d >= 1."""
    a = np.asarray(arr, dtype=np.float32)
    if a.ndim != 3 or a.shape[2] < 1 or a.size == 0:
        raise DimError(f"{name}: expected a non-empty (h, w, d) array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataError(f"{name}: non-finite values")
    return a


def check_descriptor(arr, name: str = "descriptor") -> np.ndarray:
    """Validate a descriptor vector: 1-D and finite; returns float64."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise DimError(f"{name}: expected a non-empty 1-D vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataError(f"{name}: non-finite values")
    return a


def check_same_shape(a, b, what: str = "arrays") -> None:
    if np.shape(a) != np.shape(b):
        raise DimError(f"{what}: shape mismatch {np.shape(a)} vs {np.shape(b)}")
