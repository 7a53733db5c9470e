"""Promptable segmentation over the request-directory contract.

The core writes request.json + image.raf; this module answers with
result_mask.raf + result_meta.json and never touches the request files.
Schema validation happens before any model import so malformed requests
fail fast even when no backend is installed.

Backends: ``sam2-vit-h`` (optional torch install, keeps the candidate mask
with the highest predicted quality score) and ``echo`` (no-op stand-in
that fills the prompt box; used for contract tests and dry runs).
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import AdapterConfig
from .errors import SchemaError, SetupError
from .raf import read_raf, write_raf

SAM2_SETUP_HINT = (
    "sam2-vit-h needs optional model dependencies: install torch and the "
    "SAM2 package (`pip install 'rap-adapter[models]'` plus the official "
    "SAM2 release), download the ViT-H checkpoint, and point "
    "RAP_SAM2_CHECKPOINT at the file."
)


def _as_point_list(raw, name, shape) -> list:
    if not isinstance(raw, list):
        raise SchemaError(f"request.{name} must be a list of [x, y] pairs")
    points = []
    for item in raw:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise SchemaError(f"request.{name} entry {item!r} is not an [x, y] pair")
        x, y = int(item[0]), int(item[1])
        if not (0 <= x < shape[1] and 0 <= y < shape[0]):
            raise SchemaError(f"request.{name} point ({x}, {y}) outside image {shape}")
        points.append((x, y))
    return points


def load_request(request_dir) -> dict:
    """Parse and validate a request directory; raises SchemaError early."""
    root = Path(request_dir)
    req_path = root / "request.json"
    if not req_path.is_file():
        raise SchemaError(f"{root}: request.json is missing")
    try:
        payload = json.loads(req_path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{req_path}: invalid JSON: {exc}") from exc
    image_name = payload.get("image", "image.raf")
    image_path = root / Path(image_name).name
    if not image_path.is_file():
        raise SchemaError(f"{root}: image file {image_name!r} is missing")
    image = read_raf(image_path)
    if image.ndim != 2 or image.dtype == np.bool_:
        raise SchemaError(f"{image_path}: expected a 2-D float image")

    positives = _as_point_list(payload.get("positives"), "positives", image.shape)
    if not positives:
        raise SchemaError("request has no positive points")
    negatives = _as_point_list(payload.get("negatives", []), "negatives", image.shape)
    bbox = payload.get("bbox")
    if (
        not isinstance(bbox, (list, tuple))
        or len(bbox) != 4
        or not all(isinstance(v, (int, float)) for v in bbox)
    ):
        raise SchemaError(f"request.bbox {bbox!r} is not [x0, y0, x1, y1]")
    x0, y0, x1, y1 = (int(v) for v in bbox)
    if not (0 <= x0 <= x1 < image.shape[1] and 0 <= y0 <= y1 < image.shape[0]):
        raise SchemaError(f"request.bbox {bbox} outside image {image.shape}")
    return {
        "image": image,
        "positives": positives,
        "negatives": negatives,
        "bbox": (x0, y0, x1, y1),
    }


def _echo_mask(request: dict) -> np.ndarray:
    """No-op stand-in: the prompt box filled, nothing inferred."""
    mask = np.zeros(request["image"].shape, dtype=bool)
    x0, y0, x1, y1 = request["bbox"]
    mask[y0 : y1 + 1, x0 : x1 + 1] = True
    return mask


def _sam2_mask(request: dict, config: AdapterConfig):
    try:
        import torch  # noqa: F401
        from sam2.sam2_image_predictor import SAM2ImagePredictor  # noqa: F401
    except ImportError as exc:
        raise SetupError(SAM2_SETUP_HINT) from exc
    import os

    checkpoint = os.environ.get("RAP_SAM2_CHECKPOINT")
    if not checkpoint or not os.path.isfile(checkpoint):
        raise SetupError(SAM2_SETUP_HINT)
    import torch
    from sam2.build_sam import build_sam2
    from sam2.sam2_image_predictor import SAM2ImagePredictor

    predictor = SAM2ImagePredictor(build_sam2("sam2_hiera_h", checkpoint, device=config.device))
    image = request["image"]
    rgb = np.repeat((image * 255).astype(np.uint8)[:, :, None], 3, axis=2)
    coords = np.array(request["positives"] + request["negatives"], dtype=np.float32)
    labels = np.array(
        [1] * len(request["positives"]) + [0] * len(request["negatives"]), dtype=np.int32
    )
    with torch.no_grad():
        predictor.set_image(rgb)
        masks, scores, _ = predictor.predict(
            point_coords=coords,
            point_labels=labels,
            box=np.array(request["bbox"], dtype=np.float32),
            multimask_output=True,
        )
    best = int(np.argmax(scores))  # highest predicted quality score
    return masks[best].astype(bool), float(scores[best])


def run_segmenter(request_dir, config: AdapterConfig | None = None) -> Path:
    """Answer a request directory; returns the result mask path."""
    config = config or AdapterConfig()
    request = load_request(request_dir)  # schema errors fire before model load
    if config.segmenter_model_id == "echo":
        mask, confidence = _echo_mask(request), 1.0
    else:
        mask, confidence = _sam2_mask(request, config)
    if mask.shape != request["image"].shape:
        raise SchemaError(f"backend produced {mask.shape}, image is {request['image'].shape}")
    root = Path(request_dir)
    write_raf(mask, root / "result_mask.raf")
    (root / "result_meta.json").write_text(json.dumps({"confidence": confidence}))
    return root / "result_mask.raf"
