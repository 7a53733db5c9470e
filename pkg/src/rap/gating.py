"""Semantic gating: regional prototypes and a quantile-thresholded query mask.

Support foreground cells are clustered into a handful of regional
prototypes; the cosine map of each prototype against the query grid is
upsampled to query resolution. The gate keeps, per kept map, pixels whose
similarity strictly exceeds a single pooled quantile threshold. The gate is
never empty: if nothing clears the threshold, the single best pixel wins.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMaskError, ZeroPrototypeError
from .resample import mask_block_majority, upsample_anchored
from .validation import check_descriptor, check_features, check_mask

KMEANS_MAX_ITER = 50
KMEANS_REL_TOL = 1e-4


@dataclass
class RegionPrototypes:
    count: int
    prototypes: np.ndarray  # (count, d)
    member_counts: np.ndarray  # (count,)


@dataclass
class GatingConfig:
    clusters: int = 5  # K
    keep: int = 3  # K', regions retained for the gate
    quantile: float = 0.9

    def __post_init__(self):
        if not 1 <= self.keep <= self.clusters:
            raise ValueError(f"keep must be in [1, clusters], got {self.keep}/{self.clusters}")
        if not 0.0 < self.quantile < 1.0:
            raise ValueError(f"quantile must be in (0, 1), got {self.quantile}")


def _farthest_first_centers(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Deterministic farthest-first init; seed picks the first center only."""
    rng = np.random.default_rng(seed)
    first = int(rng.integers(points.shape[0]))
    centers = [first]
    mind = np.sum((points - points[first]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(mind))  # argmax keeps the first (row-major) maximizer
        centers.append(nxt)
        mind = np.minimum(mind, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[centers].copy()


def cluster_support(features, mask, clusters: int, seed: int = 0) -> RegionPrototypes:
    """Seeded K-Means over foreground grid cells; prototypes are cluster means.

    The cluster count shrinks when foreground cells are fewer than requested
    or when duplicate centers leave clusters empty.
    """
    f = check_features(features)
    m = check_mask(mask)
    votes = mask_block_majority(m, f.shape[0], f.shape[1])
    if not votes.any():
        raise EmptyMaskError("cluster_support: no foreground cell after downsampling")
    pts = f[votes].astype(np.float64)  # row-major order of voted cells
    k = min(clusters, pts.shape[0])
    centers = _farthest_first_centers(pts, k, seed)

    prev_inertia = np.inf
    assign = np.zeros(pts.shape[0], dtype=np.intp)
    for _ in range(KMEANS_MAX_ITER):
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1)  # ties to the lowest center index
        inertia = float(d2[np.arange(pts.shape[0]), assign].sum())
        assert inertia <= prev_inertia + 1e-9, "k-means objective increased"
        occupied = np.unique(assign)
        if occupied.size < centers.shape[0]:
            # duplicate or starved centers collapse; relabel compactly
            remap = {old: new for new, old in enumerate(occupied)}
            assign = np.array([remap[a] for a in assign], dtype=np.intp)
        centers = np.stack([pts[assign == i].mean(axis=0) for i in range(occupied.size)])
        converged = (
            np.isfinite(prev_inertia)
            and prev_inertia - inertia <= KMEANS_REL_TOL * max(prev_inertia, 1e-12)
        )
        prev_inertia = inertia
        if converged:
            break

    counts = np.bincount(assign, minlength=centers.shape[0])
    return RegionPrototypes(count=centers.shape[0], prototypes=centers, member_counts=counts)


def similarity_map(query_features, prototype, out_height: int, out_width: int) -> np.ndarray:
    """Per-cell cosine against the prototype, upsampled to pixel resolution."""
    f = check_features(query_features).astype(np.float64)
    c = check_descriptor(prototype, "prototype")
    cn = np.linalg.norm(c)
    if cn < 1e-12:
        raise ZeroPrototypeError("prototype has zero norm")
    cell_norms = np.linalg.norm(f, axis=2)
    dots = f @ (c / cn)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(cell_norms < 1e-12, 0.0, dots / np.maximum(cell_norms, 1e-300))
    cos = np.clip(cos, -1.0, 1.0)
    return np.clip(upsample_anchored(cos, out_height, out_width), -1.0, 1.0)


def rank_maps(maps) -> list:
    """Indices of similarity maps sorted by mean value, best first (stable)."""
    means = [float(np.mean(m)) for m in maps]
    return sorted(range(len(maps)), key=lambda i: (-means[i], i))


def build_gating_mask(maps, prototypes: RegionPrototypes, config: GatingConfig) -> np.ndarray:
    """Union of per-map indicators above the pooled keep-quantile threshold.

    Maps are ranked by mean similarity and the top config.keep survive; the
    threshold is the config.quantile quantile of their pooled values, and
    the comparison is strict. An all-false gate degrades to the single
    maximum pixel so downstream search always has a candidate.
    """
    if len(maps) != prototypes.count:
        raise ValueError(f"{len(maps)} maps for {prototypes.count} prototypes")
    shape = np.shape(maps[0])
    kept = [np.asarray(maps[i], dtype=np.float64) for i in rank_maps(maps)[: min(config.keep, len(maps))]]
    for m in kept:
        if m.shape != shape:
            raise ValueError("similarity maps must share dimensions")
    tau = float(np.quantile(np.concatenate([m.ravel() for m in kept]), config.quantile))
    gate = np.zeros(shape, dtype=bool)
    for m in kept:
        gate |= m > tau
    if not gate.any():
        stacked = np.stack(kept)
        k, y, x = np.unravel_index(int(np.argmax(stacked)), stacked.shape)
        gate[y, x] = True
    return gate


def combined_similarity(maps, config: GatingConfig) -> np.ndarray:
    """Pointwise max over the kept maps; the S_DINO surface for negatives."""
    kept = [np.asarray(maps[i], dtype=np.float64) for i in rank_maps(maps)[: min(config.keep, len(maps))]]
    return np.maximum.reduce(kept)
