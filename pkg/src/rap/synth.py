"""Self-contained synthetic benchmark: textured blob "organs" with known masks.

Each class is a fixed star-shaped radial profile; cases are that profile
under a per-case similarity transform (scale 0.85-1.15, rotation +-10 deg,
random center), so any two same-class cases are alignable within the
default chamfer search grid. Images pair a smooth shaded background with a
brighter textured organ; features mimic patch descriptors by mixing a
class direction and a background direction per grid cell according to
organ coverage.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .arrayio import write_array, write_pgm
from .config import PipelineConfig, apply_overrides, dump_config

CANVAS = 128
FEATURE_GRID = 16
FEATURE_DIM = 8
CLASS_NAMES = ("blobA", "blobB")


@dataclass
class _ClassSpec:
    name: str
    radius: float
    amps: tuple
    phases: tuple
    texture_freq: float
    feature_dir: np.ndarray


def _unit(rng, dim):
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _class_specs(rng, bg_dir) -> list:
    specs = []
    for name, radius, amps, freq in (
        (CLASS_NAMES[0], 20.0, (0.10, 0.06), 0.55),
        (CLASS_NAMES[1], 26.0, (0.14, 0.08), 0.8),
    ):
        # orthogonal to the background direction, as organ features separate
        # sharply from background in a real descriptor space
        v = rng.normal(size=FEATURE_DIM)
        v -= (v @ bg_dir) * bg_dir
        specs.append(
            _ClassSpec(
                name=name,
                radius=radius,
                amps=amps,
                phases=tuple(rng.uniform(0, 2 * np.pi, size=2)),
                texture_freq=freq,
                feature_dir=v / np.linalg.norm(v),
            )
        )
    return specs


def _rasterize(spec: _ClassSpec, center, scale, rotation_deg, size) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    dx = xs - center[0]
    dy = ys - center[1]
    rad = math.radians(rotation_deg)
    # into the prototype frame: undo rotation, undo scale
    px = (dx * math.cos(rad) + dy * math.sin(rad)) / scale
    py = (-dx * math.sin(rad) + dy * math.cos(rad)) / scale
    rr = np.hypot(px, py)
    phi = np.arctan2(py, px)
    bound = spec.radius * (
        1.0
        + spec.amps[0] * np.cos(2 * phi + spec.phases[0])
        + spec.amps[1] * np.cos(3 * phi + spec.phases[1])
    )
    return rr <= bound


def _render_image(mask, spec: _ClassSpec, rng, size) -> np.ndarray:
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    gdir = rng.uniform(0, 2 * np.pi)
    ramp = (xs * np.cos(gdir) + ys * np.sin(gdir)) / size
    background = 0.30 + 0.08 * ramp
    background += ndimage.gaussian_filter(rng.normal(0, 0.15, size=(size, size)), 6.0)
    texture = 0.04 * np.sin(spec.texture_freq * xs) * np.sin(spec.texture_freq * ys)
    image = background + mask * (0.35 + texture)
    image += rng.normal(0, 0.01, size=(size, size))
    return np.clip(image, 0.0, 1.0).astype(np.float32)


def _render_features(mask, spec: _ClassSpec, bg_dir, rng) -> np.ndarray:
    cover = np.zeros((FEATURE_GRID, FEATURE_GRID))
    size = mask.shape[0]
    step = size // FEATURE_GRID
    for i in range(FEATURE_GRID):
        for j in range(FEATURE_GRID):
            block = mask[i * step : (i + 1) * step, j * step : (j + 1) * step]
            cover[i, j] = block.mean()
    feats = (
        cover[..., None] * spec.feature_dir
        + (1.0 - cover[..., None]) * bg_dir
        + rng.normal(0, 0.05, size=(FEATURE_GRID, FEATURE_GRID, FEATURE_DIM))
    )
    return feats.astype(np.float32)


def generate_case(seed: int, class_index: int, case_rng_seed: int):
    """One synthetic case: (image, mask, features, class name). Deterministic."""
    master = np.random.default_rng(seed)
    bg_dir = _unit(master, FEATURE_DIM)
    specs = _class_specs(master, bg_dir)
    spec = specs[class_index % len(specs)]
    rng = np.random.default_rng(case_rng_seed)
    center = (
        CANVAS / 2 + rng.uniform(-12, 12),
        CANVAS / 2 + rng.uniform(-12, 12),
    )
    scale = rng.uniform(0.85, 1.15)
    rotation = rng.uniform(-10.0, 10.0)
    mask = _rasterize(spec, center, scale, rotation, CANVAS)
    image = _render_image(mask, spec, rng, CANVAS)
    features = _render_features(mask, spec, bg_dir, rng)
    return image, mask, features, spec.name


def benchmark_config() -> PipelineConfig:
    """Pipeline settings matched to the 128 px synthetic canvas."""
    return apply_overrides(PipelineConfig(), {"resize": CANVAS})


def generate_benchmark(out_dir, cases: int = 20, seed: int = 7) -> Path:
    """Write a full benchmark directory; returns the manifest path.

    Layout: one PGM image, one mask RAF and one feature RAF per case, a
    dataset manifest.json, and a benchmark.cfg tuned to the canvas size.
    Cases alternate between the two classes.
    """
    if cases < 2:
        raise ValueError("need at least 2 cases")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    per_class = [0] * len(CLASS_NAMES)
    for i in range(cases):
        cls = i % len(CLASS_NAMES)
        image, mask, features, class_name = generate_case(seed, cls, seed * 100003 + i)
        case_id = f"{class_name}{per_class[cls]:02d}"
        per_class[cls] += 1
        names = {
            "image": f"{case_id}_image.pgm",
            "mask": f"{case_id}_mask.raf",
            "features": f"{case_id}_features.raf",
        }
        write_pgm(image, out / names["image"])
        write_array(mask, out / names["mask"])
        write_array(features, out / names["features"])
        entries.append({"id": case_id, "class": class_name, **names})
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps({"cases": entries}, indent=2, sort_keys=True))
    (out / "benchmark.cfg").write_text(dump_config(benchmark_config()))
    return manifest_path
