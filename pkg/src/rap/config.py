"""Pipeline configuration and the flat `key = value` config file format.

Sections use dotted prefixes (``gating.quantile = 0.9``); lists are
comma-separated numbers. Every default below is overridable from a file,
and unknown keys are rejected rather than ignored.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .chamfer import SearchGrid
from .errors import ManifestError
from .gating import GatingConfig
from .prompts import PromptConfig


@dataclass
class EdgeConfig:
    scales: tuple = (1.0, 2.0, 4.0, 8.0)
    log_weight: float = 0.5
    grad_weight: float = 0.5
    keep_fraction: float = 0.10


@dataclass
class ChamferConfig:
    bins: int = 8  # orientation bins
    template_points: int = 128
    grid: SearchGrid = field(default_factory=SearchGrid)


@dataclass
class AblationConfig:
    ocm: bool = True  # oriented chamfer matching (off: premask = resized support mask)
    sg: bool = True  # semantic gating (off: gate = full image)
    vp: bool = True  # geometric prompts (off: positives = premask centroid only)


@dataclass
class PipelineConfig:
    retrieval_rank: int = 2
    use_masked_descriptor: bool = True
    style_enabled: bool = False
    gating: GatingConfig = field(default_factory=GatingConfig)
    edge: EdgeConfig = field(default_factory=EdgeConfig)
    chamfer: ChamferConfig = field(default_factory=ChamferConfig)
    prompt: PromptConfig = field(default_factory=PromptConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)
    seed: int = 0
    resize: int = 512  # working resolution for feature alignment
    workers: int = 1


def _parse_scalar(text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_value(text: str):
    if "," in text:
        return tuple(_parse_scalar(t.strip()) for t in text.split(",") if t.strip())
    return _parse_scalar(text.strip())


# key -> (section attribute path, field, coercion)
_KEYMAP = {
    "retrieval.rank": ("", "retrieval_rank", int),
    "retrieval.use_masked": ("", "use_masked_descriptor", bool),
    "style.enabled": ("", "style_enabled", bool),
    "gating.clusters": ("gating", "clusters", int),
    "gating.keep": ("gating", "keep", int),
    "gating.quantile": ("gating", "quantile", float),
    "edge.scales": ("edge", "scales", tuple),
    "edge.log_weight": ("edge", "log_weight", float),
    "edge.grad_weight": ("edge", "grad_weight", float),
    "edge.keep_fraction": ("edge", "keep_fraction", float),
    "chamfer.bins": ("chamfer", "bins", int),
    "chamfer.template_points": ("chamfer", "template_points", int),
    "chamfer.scales": ("chamfer.grid", "scales", tuple),
    "chamfer.rotations": ("chamfer.grid", "rotations", tuple),
    "chamfer.coarse_stride": ("chamfer.grid", "coarse_stride", int),
    "chamfer.fine_radius": ("chamfer.grid", "fine_radius", int),
    "prompt.positives": ("prompt", "positives", int),
    "prompt.sectors": ("prompt", "sectors", int),
    "prompt.band_min": ("prompt", "band_min", float),
    "prompt.band_max": ("prompt", "band_max", float),
    "prompt.margin": ("prompt", "margin", int),
    "ablation.ocm": ("ablation", "ocm", bool),
    "ablation.sg": ("ablation", "sg", bool),
    "ablation.vp": ("ablation", "vp", bool),
    "seed": ("", "seed", int),
    "resize": ("", "resize", int),
    "workers": ("", "workers", int),
}


def _coerce(key, value, kind):
    try:
        if kind is tuple:
            items = value if isinstance(value, tuple) else (value,)
            return tuple(float(v) for v in items)
        if kind is bool:
            if not isinstance(value, bool):
                raise ValueError(f"expected true/false, got {value!r}")
            return value
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ManifestError(f"config key {key!r}: {exc}") from exc


def apply_overrides(config: PipelineConfig, overrides: dict) -> PipelineConfig:
    """Return a new config with dotted-key overrides applied."""
    cfg = replace(
        config,
        gating=replace(config.gating),
        edge=replace(config.edge),
        chamfer=replace(config.chamfer, grid=replace(config.chamfer.grid)),
        prompt=replace(config.prompt),
        ablation=replace(config.ablation),
    )
    for key, value in overrides.items():
        if key not in _KEYMAP:
            raise ManifestError(f"unknown config key {key!r}")
        path, attr, kind = _KEYMAP[key]
        target = cfg
        for part in path.split("."):
            if part:
                target = getattr(target, part)
        setattr(target, attr, _coerce(key, value, kind))
    cfg.gating.__post_init__()
    cfg.prompt.__post_init__()
    return cfg


def load_config(path, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse a flat key=value file on top of the defaults (or a given base)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ManifestError(f"cannot read config {path}: {exc}") from exc
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ManifestError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        overrides[key.strip()] = _parse_value(value)
    return apply_overrides(base or PipelineConfig(), overrides)


def dump_config(config: PipelineConfig) -> str:
    """Serialize a config to the flat file format (fully enumerated)."""
    def fmt(value):
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, tuple):
            return ", ".join(repr(v) for v in value)
        return repr(value)

    lines = []
    for key, (path, attr, _) in _KEYMAP.items():
        target = config
        for part in path.split("."):
            if part:
                target = getattr(target, part)
        lines.append(f"{key} = {fmt(getattr(target, attr))}")
    return "\n".join(lines) + "\n"
