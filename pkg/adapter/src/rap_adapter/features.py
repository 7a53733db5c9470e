"""Dense feature export: image file in, (h, w, d) f32 RAF out.

The grid is input_size / patch_size on a side. Two backends:

* ``dinov3-vit-l-16`` runs the real vision transformer (requires torch and
  locally available weights; last-layer patch tokens).
* ``hash-patch16`` is a deterministic, dependency-free stand-in computing
  per-patch intensity statistics. It exists so the toolkit's fixtures and
  tests never need model weights; it is not a semantic feature extractor.
"""
from __future__ import annotations

import numpy as np

from .config import AdapterConfig
from .errors import SetupError
from .raf import load_image, write_raf

DINOV3_SETUP_HINT = (
    "dinov3-vit-l-16 needs optional model dependencies: install torch "
    "(`pip install 'rap-adapter[models]'`), download the DINOv3 ViT-L/16 "
    "checkpoint from its official release, and point RAP_DINOV3_CHECKPOINT "
    "at the file."
)


def _resize_bilinear(img: np.ndarray, size: int) -> np.ndarray:
    if img.shape == (size, size):
        return img.astype(np.float64)
    ys = np.clip((np.arange(size) + 0.5) * img.shape[0] / size - 0.5, 0, img.shape[0] - 1)
    xs = np.clip((np.arange(size) + 0.5) * img.shape[1] / size - 0.5, 0, img.shape[1] - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, img.shape[0] - 1)
    x1 = np.minimum(x0 + 1, img.shape[1] - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    g = img.astype(np.float64)
    top = g[np.ix_(y0, x0)] * (1 - fx) + g[np.ix_(y0, x1)] * fx
    bot = g[np.ix_(y1, x0)] * (1 - fx) + g[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bot * fy


def _hash_features(image: np.ndarray, patch: int) -> np.ndarray:
    grid = image.shape[0] // patch
    out = np.zeros((grid, grid, 8), dtype=np.float32)
    gy, gx = np.gradient(image)
    for i in range(grid):
        for j in range(grid):
            sl = np.s_[i * patch : (i + 1) * patch, j * patch : (j + 1) * patch]
            block = image[sl]
            out[i, j] = (
                block.mean(),
                block.std(),
                block.min(),
                block.max(),
                np.abs(gx[sl]).mean(),
                np.abs(gy[sl]).mean(),
                block[patch // 2, patch // 2],
                np.median(block),
            )
    return out


def _dinov3_features(image: np.ndarray, config: AdapterConfig) -> np.ndarray:
    try:
        import torch  # noqa: F401
    except ImportError as exc:
        raise SetupError(DINOV3_SETUP_HINT) from exc
    import os

    checkpoint = os.environ.get("RAP_DINOV3_CHECKPOINT")
    if not checkpoint or not os.path.isfile(checkpoint):
        raise SetupError(DINOV3_SETUP_HINT)
    import torch

    model = torch.load(checkpoint, map_location=config.device, weights_only=False)
    model.eval()
    grid = config.input_size // config.patch_size
    with torch.no_grad():
        tensor = torch.from_numpy(image.astype(np.float32))[None, None]
        tensor = tensor.repeat(1, 3, 1, 1).to(config.device)  # grayscale to RGB
        tokens = model.forward_features(tensor)["x_norm_patchtokens"]
    feats = tokens.reshape(grid, grid, -1).cpu().numpy().astype(np.float32)
    return feats


def export_features(image_path, out_path, config: AdapterConfig | None = None) -> None:
    """Write the feature grid for an image as an f32 RAF; deterministic."""
    config = config or AdapterConfig()
    image = _resize_bilinear(load_image(image_path), config.input_size)
    if config.feature_model_id == "hash-patch16":
        feats = _hash_features(image, config.patch_size)
    else:
        feats = _dinov3_features(image, config)
    write_raf(feats.astype(np.float32), out_path)
