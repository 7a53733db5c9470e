"""Resampling helpers with fixed, documented coordinate conventions.

Two bilinear conventions are used deliberately:

* ``resize_bilinear`` maps output pixel centers through half-pixel offsets
  (source = (i + 0.5) * in/out - 0.5), the usual convention for resizing
  photographs and masks.
* ``upsample_anchored`` maps output pixel i to source coordinate
  i * in/out, so for integer upscale factors the top-left pixel of every
  output block reproduces its source cell exactly. Similarity grids are
  upsampled this way so coarse-grid values survive verbatim at aligned
  pixels.
"""
from __future__ import annotations

import numpy as np


def _axis_coords_halfpixel(n_out: int, n_in: int) -> np.ndarray:
    c = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    return np.clip(c, 0.0, n_in - 1.0)


def _axis_coords_anchored(n_out: int, n_in: int) -> np.ndarray:
    c = np.arange(n_out, dtype=np.float64) * (n_in / n_out)
    return np.clip(c, 0.0, n_in - 1.0)


def _bilinear_gather(grid: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, grid.shape[0] - 1)
    x1 = np.minimum(x0 + 1, grid.shape[1] - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    g = grid.astype(np.float64, copy=False)
    top = g[np.ix_(y0, x0)] * (1 - fx) + g[np.ix_(y0, x1)] * fx
    bot = g[np.ix_(y1, x0)] * (1 - fx) + g[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bot * fy


def resize_bilinear(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel-center mapping; identity when sizes match."""
    grid = np.asarray(grid)
    if grid.shape == (out_h, out_w):
        return grid.astype(np.float64, copy=False)
    ys = _axis_coords_halfpixel(out_h, grid.shape[0])
    xs = _axis_coords_halfpixel(out_w, grid.shape[1])
    return _bilinear_gather(grid, ys, xs)


def upsample_anchored(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear upsample anchored at the top-left corner (see module docstring)."""
    grid = np.asarray(grid)
    if grid.shape == (out_h, out_w):
        return grid.astype(np.float64, copy=False)
    ys = _axis_coords_anchored(out_h, grid.shape[0])
    xs = _axis_coords_anchored(out_w, grid.shape[1])
    return _bilinear_gather(grid, ys, xs)


def resize_nearest(grid: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resize (half-pixel centers, round half up); keeps dtype."""
    grid = np.asarray(grid)
    if grid.shape == (out_h, out_w):
        return grid.copy()
    ys = np.floor(_axis_coords_halfpixel(out_h, grid.shape[0]) + 0.5).astype(np.intp)
    xs = np.floor(_axis_coords_halfpixel(out_w, grid.shape[1]) + 0.5).astype(np.intp)
    ys = np.clip(ys, 0, grid.shape[0] - 1)
    xs = np.clip(xs, 0, grid.shape[1] - 1)
    return grid[np.ix_(ys, xs)]


def mask_block_majority(mask: np.ndarray, grid_h: int, grid_w: int) -> np.ndarray:
    """Downsample a pixel mask to a coarse grid by per-block majority vote.

    Cell (i, j) covers pixel rows [i*H//gh, (i+1)*H//gh) and the analogous
    column span. A cell votes foreground iff strictly more than half of its
    pixels are foreground; exact ties vote background.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    out = np.zeros((grid_h, grid_w), dtype=bool)
    re = [(i * h) // grid_h for i in range(grid_h + 1)]
    ce = [(j * w) // grid_w for j in range(grid_w + 1)]
    for i in range(grid_h):
        for j in range(grid_w):
            block = mask[re[i] : re[i + 1], ce[j] : ce[j + 1]]
            if block.size:
                out[i, j] = 2 * int(block.sum()) > block.size
    return out
