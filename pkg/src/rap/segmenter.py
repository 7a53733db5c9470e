"""Promptable-segmenter boundary: built-in fallback plus a file-exchange bridge.

The fallback is a training-free stand-in that consumes the same prompt
semantics a real promptable segmenter does. Inside the prompt box, every
pixel joins whichever seed family (positives vs negatives-plus-border) it
can reach more cheaply along an edge-weighted 8-connected graph, so strong
edges fence the competition the way a learned mask decoder would respect
contours. The adapter bridge serializes requests and parses results per the
directory contract so an external model can slot in unchanged.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .arrayio import read_array, write_array
from .chamfer import fill_holes
from .edge import EdgeMap
from .errors import AdapterError, DimError, NoPromptError
from .prompts import PromptSet, prompt_set_from_dict, prompt_set_to_dict
from .validation import check_image

EDGE_COST_LAMBDA = 20.0  # a strength-1 edge costs 20 plain unit steps

_EIGHT = np.ones((3, 3), dtype=int)


@dataclass
class SegmenterRequest:
    image: np.ndarray
    prompts: PromptSet


@dataclass
class SegmenterResult:
    mask: np.ndarray
    confidence: float


def _grid_graph(strength: np.ndarray) -> coo_matrix:
    """8-connected pixel graph; step cost scales with mean endpoint strength.

    Diagonal steps carry the sqrt(2) geometric factor so that, on a flat
    strength field, geodesic distance reduces to (octile) Euclidean-style
    distance and the two-seed competition splits along the perpendicular
    bisector.
    """
    h, w = strength.shape
    idx = np.arange(h * w).reshape(h, w)
    rows, cols, vals = [], [], []
    for dr, dc, geom in ((0, 1, 1.0), (1, 0, 1.0), (1, 1, np.sqrt(2.0)), (1, -1, np.sqrt(2.0))):
        c0, c1 = max(0, -dc), w - max(0, dc)
        src = idx[0 : h - dr, c0:c1]
        dst = idx[dr:h, c0 + dc : c1 + dc]
        if src.size == 0:
            continue
        cost = geom * (
            1.0
            + EDGE_COST_LAMBDA
            * 0.5
            * (strength.ravel()[src.ravel()] + strength.ravel()[dst.ravel()])
        )
        rows.append(src.ravel())
        cols.append(dst.ravel())
        vals.append(cost)
    return coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(h * w, h * w),
    )


def fallback_segment(request: SegmenterRequest, edges: EdgeMap) -> SegmenterResult:
    """Edge-weighted geodesic competition between prompt seed families.

    Positives seed one geodesic front; negatives plus the box border seed
    the other. A pixel is foreground iff it is strictly closer to the
    positive front. Foreground keeps only components containing positive
    points, hole-filled; confidence is the median normalized margin
    (dneg - dpos) / (dneg + dpos) over foreground pixels.
    """
    image = check_image(request.image)
    if not request.prompts.positives:
        raise NoPromptError("fallback segmenter needs at least one positive point")
    strength = np.asarray(edges.strength, dtype=np.float64)
    if strength.shape != image.shape:
        raise DimError(f"edge map {strength.shape} vs image {image.shape}")
    x0, y0, x1, y1 = request.prompts.bbox
    if not (0 <= x0 <= x1 < image.shape[1] and 0 <= y0 <= y1 < image.shape[0]):
        raise DimError(f"bbox {request.prompts.bbox} outside image {image.shape}")

    sub = strength[y0 : y1 + 1, x0 : x1 + 1]
    bh, bw = sub.shape
    local = lambda x, y: (y - y0) * bw + (x - x0)

    pos_idx = []
    for x, y in request.prompts.positives:
        if not (x0 <= x <= x1 and y0 <= y <= y1):
            raise DimError(f"positive point ({x}, {y}) outside bbox {request.prompts.bbox}")
        pos_idx.append(local(x, y))
    pos_set = set(pos_idx)

    neg_idx = {
        local(x, y)
        for x, y in request.prompts.negatives
        if x0 <= x <= x1 and y0 <= y <= y1  # negatives beyond the box are moot
    }
    border = np.zeros((bh, bw), dtype=bool)
    border[0, :] = border[-1, :] = True
    border[:, 0] = border[:, -1] = True
    neg_idx |= set(np.nonzero(border.ravel())[0].tolist())
    neg_idx -= pos_set  # positives win contested seeds

    graph = _grid_graph(sub)
    d_pos = dijkstra(graph, directed=False, indices=sorted(pos_set), min_only=True)
    if neg_idx:
        d_neg = dijkstra(graph, directed=False, indices=sorted(neg_idx), min_only=True)
    else:
        d_neg = np.full(bh * bw, np.inf)

    fg = (d_pos < d_neg).reshape(bh, bw)
    labels, _ = ndimage.label(fg, structure=_EIGHT)
    keep = {labels[i // bw, i % bw] for i in pos_idx}
    keep.discard(0)
    kept = np.isin(labels, sorted(keep))
    fg = fill_holes(kept)
    holes = fg & ~kept
    if holes.any() and neg_idx:
        # a hole enclosing a negative prompt must stay background
        hole_labels, _ = ndimage.label(holes)
        bad = {hole_labels[i // bw, i % bw] for i in neg_idx if holes[i // bw, i % bw]}
        bad.discard(0)
        if bad:
            fg &= ~np.isin(hole_labels, sorted(bad))

    mask = np.zeros(image.shape, dtype=bool)
    mask[y0 : y1 + 1, x0 : x1 + 1] = fg
    sel = fg.ravel()
    if sel.any():
        dn = d_neg[sel]
        dp = d_pos[sel]
        margins = np.where(np.isinf(dn), 1.0, (dn - dp) / np.maximum(dn + dp, 1e-12))
        confidence = float(np.clip(np.median(margins), 0.0, 1.0))
    else:
        confidence = 0.0
    return SegmenterResult(mask=mask, confidence=confidence)


def export_request(request: SegmenterRequest, out_dir) -> Path:
    """Write image.raf + request.json (prompt-exchange schema) into out_dir."""
    image = check_image(request.image)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_array(image, out / "image.raf")
    payload = prompt_set_to_dict(request.prompts, "image.raf")
    (out / "request.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
    return out / "request.json"


def import_result(adapter_dir) -> SegmenterResult:
    """Read result_mask.raf + result_meta.json written by an adapter."""
    root = Path(adapter_dir)
    mask_path = root / "result_mask.raf"
    meta_path = root / "result_meta.json"
    if not mask_path.is_file() or not meta_path.is_file():
        raise AdapterError(f"adapter results missing in {root} (need result_mask.raf + result_meta.json)")
    mask = read_array(mask_path)
    if mask.dtype != np.bool_:
        raise AdapterError(f"{mask_path}: expected a u8 mask RAF")
    image = read_array(root / "image.raf")
    if mask.shape != image.shape:
        raise DimError(f"result mask {mask.shape} != request image {image.shape}")
    try:
        confidence = float(json.loads(meta_path.read_text())["confidence"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise AdapterError(f"{meta_path}: malformed metadata: {exc}") from exc
    return SegmenterResult(mask=mask, confidence=confidence)


def load_request(adapter_dir) -> SegmenterRequest:
    """Parse a request directory back into a SegmenterRequest (round-trip aid)."""
    root = Path(adapter_dir)
    try:
        payload = json.loads((root / "request.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise AdapterError(f"cannot parse {root / 'request.json'}: {exc}") from exc
    image = read_array(root / Path(payload.get("image", "image.raf")).name)
    return SegmenterRequest(image=image, prompts=prompt_set_from_dict(payload))
