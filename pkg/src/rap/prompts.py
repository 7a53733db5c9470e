"""Geometry-aware prompt bundles: spread positives, sector negatives, a box.

Positives: farthest-point-sampled seeds induce a Voronoi partition of the
pre-mask and each cell contributes its centroid (snapped into the cell when
rounding lands outside). Negatives: one exterior point per angular sector
around the pre-mask, picked where foreground similarity bottoms out inside
a radial band hugging the boundary. All selection rules are deterministic
with row-major tie-breaking.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimError, EmptyMaskError, NoNegativesWarning, SeedError, ShortfallWarning
from .validation import check_mask, check_same_shape


@dataclass
class PromptConfig:
    positives: int = 6  # Voronoi seed count
    sectors: int = 8  # angular sectors for negatives
    band_min: float = 5.0
    band_max: float = 40.0
    margin: int = 5  # bbox expansion in pixels

    def __post_init__(self):
        if not self.band_min < self.band_max:
            raise ValueError("band_min must be below band_max")


@dataclass
class VoronoiPartition:
    seeds: list  # [(x, y), ...]
    cell_labels: np.ndarray  # int grid, -1 outside the mask


@dataclass
class PromptSet:
    positives: list  # [(x, y), ...]
    negatives: list
    bbox: tuple  # (x0, y0, x1, y1) inclusive

    def validate(self, premask) -> None:
        m = check_mask(premask, "premask")
        x0, y0, x1, y1 = self.bbox
        if not (0 <= x0 <= x1 < m.shape[1] and 0 <= y0 <= y1 < m.shape[0]):
            raise ValueError(f"bbox {self.bbox} out of bounds for shape {m.shape}")
        rows, cols = np.nonzero(m)
        if rows.size and not (
            x0 <= cols.min() and cols.max() <= x1 and y0 <= rows.min() and rows.max() <= y1
        ):
            raise ValueError("bbox does not contain the premask")
        for x, y in self.positives:
            if not m[y, x]:
                raise ValueError(f"positive point ({x}, {y}) outside the premask")
        for x, y in self.negatives:
            if not (0 <= x < m.shape[1] and 0 <= y < m.shape[0]) or m[y, x]:
                raise ValueError(f"negative point ({x}, {y}) inside premask or out of bounds")


def _foreground_xy(mask: np.ndarray) -> np.ndarray:
    rows, cols = np.nonzero(mask)  # row-major order
    return np.stack([cols, rows], axis=1).astype(np.float64)


def fps_seeds(mask, count: int) -> list:
    """Greedy farthest-point sampling over foreground pixels.

    Starts at the pixel nearest the mask centroid and repeatedly adds the
    pixel maximizing its minimum distance to the chosen set; ties resolve
    in row-major order. Asking for more seeds than pixels returns all of
    them under a ShortfallWarning.
    """
    m = check_mask(mask)
    if count < 1:
        raise ValueError("count must be >= 1")
    xy = _foreground_xy(m)
    n = xy.shape[0]
    if n == 0:
        raise EmptyMaskError("fps_seeds: empty mask")
    if count >= n:
        if count > n:
            warnings.warn(f"requested {count} seeds, mask has {n} pixels", ShortfallWarning)
        return [(int(x), int(y)) for x, y in xy]
    centroid = xy.mean(axis=0)
    d2c = ((xy - centroid) ** 2).sum(axis=1)
    chosen = [int(np.argmin(d2c))]  # argmin keeps the first (row-major) minimizer
    mind = ((xy - xy[chosen[0]]) ** 2).sum(axis=1)
    while len(chosen) < count:
        nxt = int(np.argmax(mind))
        chosen.append(nxt)
        mind = np.minimum(mind, ((xy - xy[nxt]) ** 2).sum(axis=1))
    return [(int(xy[i, 0]), int(xy[i, 1])) for i in chosen]


def voronoi_partition(mask, seeds) -> VoronoiPartition:
    """Assign every foreground pixel to its nearest seed (ties: lowest index)."""
    m = check_mask(mask)
    if not seeds:
        raise SeedError("no seeds given")
    for x, y in seeds:
        if not (0 <= x < m.shape[1] and 0 <= y < m.shape[0]) or not m[y, x]:
            raise SeedError(f"seed ({x}, {y}) lies outside the mask")
    xy = _foreground_xy(m)
    sxy = np.asarray(seeds, dtype=np.float64)
    d2 = ((xy[:, None, :] - sxy[None, :, :]) ** 2).sum(axis=2)
    assign = np.argmin(d2, axis=1)
    labels = np.full(m.shape, -1, dtype=np.int32)
    labels[xy[:, 1].astype(np.intp), xy[:, 0].astype(np.intp)] = assign
    return VoronoiPartition(seeds=[(int(x), int(y)) for x, y in seeds], cell_labels=labels)


def positive_points(partition: VoronoiPartition) -> list:
    """Per-cell centroid, snapped to the cell's nearest pixel when outside it."""
    labels = partition.cell_labels
    points = []
    for i in range(len(partition.seeds)):
        rows, cols = np.nonzero(labels == i)
        if rows.size == 0:
            continue
        mx, my = float(cols.mean()), float(rows.mean())
        rx, ry = int(np.floor(mx + 0.5)), int(np.floor(my + 0.5))
        if (
            0 <= ry < labels.shape[0]
            and 0 <= rx < labels.shape[1]
            and labels[ry, rx] == i
        ):
            points.append((rx, ry))
        else:
            d2 = (cols - mx) ** 2 + (rows - my) ** 2
            j = int(np.argmin(d2))
            points.append((int(cols[j]), int(rows[j])))
    return points


def negative_points(premask, similarity, sector_count: int = 8, band_min: float = 5.0, band_max: float = 40.0) -> list:
    """One exterior point per angular sector, at minimal similarity.

    Candidates are background pixels whose distance to the pre-mask lies in
    [band_min, band_max]; each falls in the sector of its angle about the
    pre-mask centroid. Sectors pick their similarity argmin (row-major on
    ties); empty sectors contribute nothing, and an empty candidate set
    returns [] under a NoNegativesWarning.
    """
    m = check_mask(premask, "premask")
    if not m.any():
        raise EmptyMaskError("negative_points: empty premask")
    sim = np.asarray(similarity, dtype=np.float64)
    check_same_shape(m, sim, "premask vs similarity")
    if not band_min < band_max:
        raise ValueError("band_min must be below band_max")

    dist = ndimage.distance_transform_edt(~m)
    cand = (~m) & (dist >= band_min) & (dist <= band_max)
    rows, cols = np.nonzero(cand)
    if rows.size == 0:
        warnings.warn("no exterior band candidates around the premask", NoNegativesWarning)
        return []
    fy, fx = np.nonzero(m)
    cy, cx = fy.mean(), fx.mean()
    ang = np.mod(np.arctan2(rows - cy, cols - cx), 2.0 * np.pi)
    sector = np.minimum((ang / (2.0 * np.pi / sector_count)).astype(np.intp), sector_count - 1)
    vals = sim[rows, cols]
    out = []
    for j in range(sector_count):
        sel = np.nonzero(sector == j)[0]
        if sel.size == 0:
            continue
        k = sel[int(np.argmin(vals[sel]))]  # candidates are in row-major order
        out.append((int(cols[k]), int(rows[k])))
    return out


def mask_bbox(mask, margin: int = 0) -> tuple:
    """Tight (x0, y0, x1, y1) bounds expanded by margin, clipped to the image."""
    m = check_mask(mask)
    rows, cols = np.nonzero(m)
    if rows.size == 0:
        raise EmptyMaskError("mask_bbox: empty mask")
    return (
        int(max(0, cols.min() - margin)),
        int(max(0, rows.min() - margin)),
        int(min(m.shape[1] - 1, cols.max() + margin)),
        int(min(m.shape[0] - 1, rows.max() + margin)),
    )


def build_prompt_set(premask, similarity, config: PromptConfig | None = None) -> PromptSet:
    """Assemble positives, negatives, and the expanded bounding box."""
    config = config or PromptConfig()
    m = check_mask(premask, "premask")
    if not m.any():
        raise EmptyMaskError("build_prompt_set: empty premask")
    seeds = fps_seeds(m, config.positives)
    positives = positive_points(voronoi_partition(m, seeds))
    negatives = negative_points(m, similarity, config.sectors, config.band_min, config.band_max)
    prompt_set = PromptSet(
        positives=positives, negatives=negatives, bbox=mask_bbox(m, config.margin)
    )
    prompt_set.validate(m)
    return prompt_set


def prompt_set_to_dict(ps: PromptSet, image_path: str = "image.raf") -> dict:
    """Prompt-exchange schema: x rightward, y downward, origin top-left."""
    return {
        "image": image_path,
        "positives": [[int(x), int(y)] for x, y in ps.positives],
        "negatives": [[int(x), int(y)] for x, y in ps.negatives],
        "bbox": [int(v) for v in ps.bbox],
    }


def prompt_set_from_dict(payload: dict) -> PromptSet:
    try:
        return PromptSet(
            positives=[(int(x), int(y)) for x, y in payload["positives"]],
            negatives=[(int(x), int(y)) for x, y in payload["negatives"]],
            bbox=tuple(int(v) for v in payload["bbox"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DimError(f"malformed prompt-exchange payload: {exc}") from exc
