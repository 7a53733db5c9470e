"""End-to-end orchestration: retrieve, adapt, prompt-fit, segment, evaluate.

Stage failures re-raise as StageError carrying the stage name. Ablation
switches degrade individual stages: without alignment the pre-mask is the
resized retrieved mask, without gating the search runs over the full image,
and without geometric prompts the bundle shrinks to the pre-mask centroid
plus box. Everything is deterministic given the config seed.
"""
from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import chamfer as chamfer_mod
from . import gating as gating_mod
from .arrayio import load_image, read_array
from .config import PipelineConfig
from .edge import binarize_edges, edge_map
from .errors import (
    DimError,
    EmptyPremaskError,
    ManifestError,
    RapError,
    StageError,
)
from .prompts import (
    PromptSet,
    build_prompt_set,
    fps_seeds,
    mask_bbox,
    negative_points,
)
from .resample import resize_bilinear, resize_nearest
from .retrieval import (
    SupportDatabase,
    build_database,
    global_descriptor,
    make_record,
    retrieve,
)
from .segmenter import SegmenterRequest, fallback_segment
from .style import style_adapt
from .validation import check_features, check_image, check_mask

TRACE_SCHEMA = "rap-trace-v1"
REPORT_SCHEMA = "rap-report-v1"


@dataclass
class EvalReport:
    per_case: list  # [(case_id, class_id, dice_percent), ...] sorted by case id
    per_class: dict  # class_id -> mean dice percent
    overall_mean: float

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "per_case": [
                {"id": cid, "class": cls, "dice": d} for cid, cls, d in self.per_case
            ],
            "per_class": dict(sorted(self.per_class.items())),
            "overall_mean": self.overall_mean,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def dice(prediction, truth) -> float:
    """Dice overlap as a percentage; two empty masks score 100 by convention."""
    p = check_mask(prediction, "prediction")
    g = check_mask(truth, "truth")
    if p.shape != g.shape:
        raise DimError(f"dice: shapes differ {p.shape} vs {g.shape}")
    denom = int(p.sum()) + int(g.sum())
    if denom == 0:
        return 100.0
    return 200.0 * int((p & g).sum()) / denom


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except RapError as exc:
        raise StageError(name, exc) from exc


def _transform_dict(t, cost):
    return {
        "tx": t.tx,
        "ty": t.ty,
        "scale": t.scale,
        "rotation": t.rotation,
        "cost": cost,
    }


def _gate_bbox_mask(gate, size):
    x0, y0, x1, y1 = mask_bbox(gate)
    out = np.zeros((size, size), dtype=bool)
    out[y0 : y1 + 1, x0 : x1 + 1] = True
    return out


def run_adapt(
    query_image,
    query_features,
    db: SupportDatabase,
    config: PipelineConfig | None = None,
    feature_extractor=None,
) -> dict:
    """Retrieve + adapt stages only; returns the working context.

    The context dict carries the resized query, the gating surfaces, the
    query edge map, the chosen transform and the pre-mask, plus the trace
    accumulated so far. run_pipeline builds prompting and segmentation on
    top of it; the CLI `adapt` command dumps it directly.
    """
    config = config or PipelineConfig()
    query_native = check_image(query_image, "query image")
    q_features = check_features(query_features, "query features")
    size = config.resize
    query = np.clip(resize_bilinear(query_native, size, size), 0.0, 1.0).astype(np.float32)
    trace = {"schema": TRACE_SCHEMA}

    with _stage("retrieve"):
        if len(db) == 0:
            raise ManifestError("support database is empty")
        rank = min(config.retrieval_rank, len(db))
        result = retrieve(db, global_descriptor(q_features), rank, config.use_masked_descriptor)
        record = db.get(result.selected)
        trace["retrieved"] = {
            "id": result.selected,
            "rank": rank,
            "ranked_ids": result.ranked_ids,
            "scores": result.scores,
        }

    support_image = np.clip(resize_bilinear(record.image, size, size), 0.0, 1.0).astype(np.float32)
    support_mask = resize_nearest(record.mask, size, size)
    support_features = record.features

    if config.style_enabled:
        with _stage("style"):
            adapted = style_adapt(support_image, query).astype(np.float32)
            trace["style"] = {"applied": True, "refeatured": feature_extractor is not None}
            if feature_extractor is not None:
                support_features = check_features(feature_extractor(adapted))

    with _stage("gating"):
        protos = gating_mod.cluster_support(
            support_features, support_mask, config.gating.clusters, config.seed
        )
        maps = [
            gating_mod.similarity_map(q_features, protos.prototypes[i], size, size)
            for i in range(protos.count)
        ]
        similarity = gating_mod.combined_similarity(maps, config.gating)
        if config.ablation.sg:
            gate = gating_mod.build_gating_mask(maps, protos, config.gating)
        else:
            gate = np.ones((size, size), dtype=bool)
        trace["gate"] = {"area": int(gate.sum()), "enabled": config.ablation.sg}

    with _stage("edge"):
        edges = edge_map(
            query, config.edge.scales, config.edge.log_weight, config.edge.grad_weight
        )
        edge_pixels = binarize_edges(edges, config.edge.keep_fraction)
        trace["edges"] = {"kept": len(edge_pixels)}

    with _stage("chamfer"):
        premask_fallback = False
        transform, cost = chamfer_mod.Transform2D(), None
        if config.ablation.ocm:
            template = chamfer_mod.extract_boundary_template(
                support_mask, config.chamfer.template_points
            )
            fields = chamfer_mod.directional_distance_transforms(
                edge_pixels, size, size, config.chamfer.bins
            )
            transform, cost = chamfer_mod.search_transform(
                template, fields, gate, config.chamfer.grid, config.workers
            )
            try:
                premask = chamfer_mod.build_premask(support_mask, transform, gate, size, size)
            except EmptyPremaskError:
                premask = _gate_bbox_mask(gate, size)
                premask_fallback = True
        else:
            premask = support_mask.copy()
        trace["transform"] = _transform_dict(transform, cost)
        trace["premask"] = {"area": int(premask.sum()), "bbox_of_gate_fallback": premask_fallback}

    return {
        "query": query,
        "native_shape": query_native.shape,
        "similarity": similarity,
        "gate": gate,
        "edges": edges,
        "premask": premask,
        "transform": transform,
        "cost": cost,
        "trace": trace,
    }


def run_pipeline(
    query_image,
    query_features,
    db: SupportDatabase,
    config: PipelineConfig | None = None,
    segmenter="fallback",
    feature_extractor=None,
):
    """Segment one query against a support database.

    `segmenter` is "fallback" or a callable mapping a SegmenterRequest to a
    SegmenterResult. `feature_extractor`, when given alongside style
    adaptation, recomputes support features from the style-adapted support
    image. Returns (mask at native query resolution, trace dict).
    """
    config = config or PipelineConfig()
    ctx = run_adapt(query_image, query_features, db, config, feature_extractor)
    size = config.resize
    query = ctx["query"]
    premask = ctx["premask"]
    similarity = ctx["similarity"]
    trace = ctx["trace"]

    with _stage("prompt"):
        if config.ablation.vp:
            prompt_set = build_prompt_set(premask, similarity, config.prompt)
        else:
            positives = fps_seeds(premask, 1)  # pixel nearest the premask centroid
            negatives = negative_points(
                premask,
                similarity,
                config.prompt.sectors,
                config.prompt.band_min,
                config.prompt.band_max,
            )
            prompt_set = PromptSet(
                positives=positives,
                negatives=negatives,
                bbox=mask_bbox(premask, config.prompt.margin),
            )
            prompt_set.validate(premask)
        trace["prompts"] = {
            "positives": [[int(x), int(y)] for x, y in prompt_set.positives],
            "negatives": [[int(x), int(y)] for x, y in prompt_set.negatives],
            "bbox": [int(v) for v in prompt_set.bbox],
            "voronoi": config.ablation.vp,
        }

    with _stage("segment"):
        request = SegmenterRequest(image=query, prompts=prompt_set)
        if segmenter == "fallback":
            # single-scale cost map: the multi-scale halo used for edge
            # extraction is too wide a barrier and biases the frontier inward
            barrier = edge_map(query, (1.0,), config.edge.log_weight, config.edge.grad_weight)
            seg = fallback_segment(request, barrier)
        elif callable(segmenter):
            seg = segmenter(request)
        else:
            raise ManifestError(f"unknown segmenter choice {segmenter!r}")
        if seg.mask.shape != (size, size):
            raise DimError(f"segmenter returned {seg.mask.shape}, expected {(size, size)}")
        trace["confidence"] = seg.confidence

    native_h, native_w = ctx["native_shape"]
    mask_native = resize_nearest(seg.mask, native_h, native_w)
    return mask_native, trace


def load_manifest(path) -> list:
    """Parse and validate a dataset manifest; paths resolve against its dir."""
    p = Path(path)
    try:
        payload = json.loads(p.read_text())
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
    cases = payload.get("cases")
    if not isinstance(cases, list) or len(cases) < 2:
        raise ManifestError(f"{path}: manifest needs a 'cases' list with >= 2 entries")
    seen = set()
    out = []
    for case in cases:
        try:
            entry = {
                "id": str(case["id"]),
                "class": str(case["class"]),
                "image": p.parent / case["image"],
                "mask": p.parent / case["mask"],
                "features": p.parent / case["features"],
            }
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"{path}: malformed case entry {case!r}: {exc}") from exc
        if entry["id"] in seen:
            raise ManifestError(f"{path}: duplicate case id {entry['id']!r}")
        seen.add(entry["id"])
        out.append(entry)
    return out


def _load_case(entry) -> dict:
    return {
        "id": entry["id"],
        "class": entry["class"],
        "image": load_image(entry["image"]),
        "mask": check_mask(read_array(entry["mask"]), f"{entry['id']} mask"),
        "features": check_features(read_array(entry["features"]), f"{entry['id']} features"),
    }


def evaluate(
    manifest_path,
    config: PipelineConfig | None = None,
    leave_one_out: bool = True,
    segmenter="fallback",
    trace_dir=None,
) -> EvalReport:
    """Run the pipeline once per case and aggregate Dice per class and overall.

    Each case retrieves from the other cases of its own class (the case
    itself is excluded under leave-one-out). Deterministic given the config
    seed; per-case traces are written to trace_dir when given.
    """
    config = config or PipelineConfig()
    entries = sorted(load_manifest(manifest_path), key=lambda e: e["id"])
    loaded = [_load_case(e) for e in entries]
    records = {
        case["id"]: make_record(case["id"], case["image"], case["mask"], case["features"])
        for case in loaded
    }
    if trace_dir is not None:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)

    per_case = []
    for case in loaded:
        pool = [
            records[other["id"]]
            for other in loaded
            if other["class"] == case["class"]
            and (not leave_one_out or other["id"] != case["id"])
        ]
        if not pool:
            raise ManifestError(
                f"case {case['id']}: no other cases of class {case['class']!r} to retrieve from"
            )
        db = build_database(pool)
        prediction, trace = run_pipeline(
            case["image"], case["features"], db, config, segmenter
        )
        score = dice(prediction, case["mask"])
        per_case.append((case["id"], case["class"], score))
        if trace_dir is not None:
            trace["case"] = case["id"]
            trace["dice"] = score
            (Path(trace_dir) / f"{case['id']}_trace.json").write_text(
                json.dumps(trace, indent=2, sort_keys=True)
            )

    classes = sorted({cls for _, cls, _ in per_case})
    per_class = {
        cls: float(np.mean([d for _, c, d in per_case if c == cls])) for cls in classes
    }
    overall = float(np.mean([d for _, _, d in per_case]))
    return EvalReport(per_case=per_case, per_class=per_class, overall_mean=overall)
