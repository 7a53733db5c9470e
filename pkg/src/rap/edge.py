"""Query edge extraction: multi-scale LoG fused with Sobel gradients.

Strength is a weighted sum of two peak-normalized terms, so the weights
mean the same thing across images: the pointwise maximum over per-scale
|LoG| responses (each normalized to peak 1) and the Sobel gradient
magnitude. Orientation is the gradient direction folded into [0, pi),
since gradient sign flips across an edge.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyEdgesError
from .validation import check_image

DEFAULT_SCALES = (1.0, 2.0, 4.0, 8.0)


@dataclass
class EdgeMap:
    strength: np.ndarray  # >= 0
    orientation: np.ndarray  # [0, pi)


@dataclass
class EdgePixelSet:
    pixels: np.ndarray  # (n, 2) integer (x, y)
    orientations: np.ndarray  # (n,) in [0, pi)

    def __len__(self) -> int:
        return self.pixels.shape[0]


def _peak_normalized(grid: np.ndarray) -> np.ndarray:
    peak = grid.max()
    return grid / peak if peak > 0 else grid


def edge_map(image, scales=DEFAULT_SCALES, w_log: float = 0.5, w_grad: float = 0.5) -> EdgeMap:
    """Fused edge strength and folded gradient orientation.

    Gaussian kernels are truncated at 3 sigma with symmetric boundary
    handling; a constant image yields zero strength everywhere.
    """
    img = check_image(image).astype(np.float64)
    if not scales:
        raise ValueError("scales must be non-empty")
    if w_log < 0 or w_grad < 0 or (w_log == 0 and w_grad == 0):
        raise ValueError("weights must be non-negative and not both zero")

    log_term = np.zeros_like(img)
    for sigma in scales:
        smooth = ndimage.gaussian_filter(img, sigma, mode="reflect", truncate=3.0)
        response = np.abs(ndimage.laplace(smooth, mode="reflect"))
        log_term = np.maximum(log_term, _peak_normalized(response))

    gx = ndimage.sobel(img, axis=1, mode="reflect")
    gy = ndimage.sobel(img, axis=0, mode="reflect")
    grad_term = _peak_normalized(np.hypot(gx, gy))

    strength = w_log * log_term + w_grad * grad_term
    orientation = np.mod(np.arctan2(gy, gx), np.pi)
    orientation[orientation >= np.pi] = 0.0  # guard the fold at exactly pi
    return EdgeMap(strength=strength, orientation=orientation)


def binarize_edges(edges: EdgeMap, keep_fraction: float = 0.10) -> EdgePixelSet:
    """Keep the strongest keep_fraction of nonzero-strength pixels, ties included.

    The cut value is the ceil(keep_fraction * n)-th largest nonzero strength,
    so the kept count is never below keep_fraction times the nonzero count.
    """
    if not 0.0 < keep_fraction < 1.0:
        raise ValueError(f"keep_fraction must be in (0, 1), got {keep_fraction}")
    strength = np.asarray(edges.strength, dtype=np.float64)
    ys, xs = np.nonzero(strength > 0)
    if ys.size == 0:
        raise EmptyEdgesError("edge strength is zero everywhere")
    vals = strength[ys, xs]
    k = max(1, int(np.ceil(keep_fraction * vals.size)))
    cut = np.sort(vals)[::-1][k - 1]
    keep = vals >= cut
    pixels = np.stack([xs[keep], ys[keep]], axis=1).astype(np.intp)
    return EdgePixelSet(pixels=pixels, orientations=np.asarray(edges.orientation)[ys[keep], xs[keep]])
