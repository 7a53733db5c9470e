"""Command-line interface.

Exit codes: 0 on success, 1 on any stage/toolkit error, 2 on usage errors
(argparse's default). `--json` switches stdout to machine-readable JSON.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .arrayio import load_image, read_array, write_array, write_png, write_png_rgb
from .config import PipelineConfig, load_config
from .edge import edge_map
from .errors import AdapterError, RapError
from .pipeline import evaluate, load_manifest, run_adapt
from .prompts import PromptConfig, build_prompt_set, prompt_set_from_dict, prompt_set_to_dict
from .retrieval import (
    build_database,
    global_descriptor,
    load_database,
    make_record,
    retrieve,
    save_database,
)
from .segmenter import (
    SegmenterRequest,
    export_request,
    fallback_segment,
    import_result,
)
from .synth import generate_benchmark
from .validation import check_features, check_mask


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def _load_cfg(path) -> PipelineConfig:
    return load_config(path) if path else PipelineConfig()


def _cmd_build_db(args) -> int:
    entries = load_manifest(args.manifest)
    records = [
        make_record(
            e["id"],
            load_image(e["image"]),
            check_mask(read_array(e["mask"]), f"{e['id']} mask"),
            check_features(read_array(e["features"]), f"{e['id']} features"),
        )
        for e in entries
    ]
    db = build_database(records)
    manifest_path = save_database(db, args.out)
    _emit(
        args,
        {"records": len(db), "feature_dim": db.feature_dim, "manifest": str(manifest_path)},
        f"built database of {len(db)} records (feature_dim={db.feature_dim}) at {args.out}",
    )
    return 0


def _cmd_retrieve(args) -> int:
    db = load_database(args.db)
    features = check_features(read_array(args.query), "query features")
    result = retrieve(db, global_descriptor(features), args.rank, not args.use_global)
    payload = {
        "ranked_ids": result.ranked_ids,
        "scores": result.scores,
        "selected": result.selected,
    }
    lines = [f"selected: {result.selected} (rank {args.rank})"] + [
        f"  {i + 1}. {rid}  cos={score:.6f}"
        for i, (rid, score) in enumerate(zip(result.ranked_ids, result.scores))
    ]
    _emit(args, payload, "\n".join(lines))
    return 0


def _cmd_adapt(args) -> int:
    db = load_database(args.db)
    config = _load_cfg(args.config)
    ctx = run_adapt(load_image(args.query), check_features(read_array(args.features)), db, config)
    write_array(ctx["premask"], args.out)
    if args.png:
        write_png(ctx["premask"].astype(np.uint8) * 255, args.png)
    transform = ctx["trace"]["transform"]
    payload = {
        "tx": transform["tx"],
        "ty": transform["ty"],
        "scale": transform["scale"],
        "rotation": transform["rotation"],
        "cost": transform["cost"],
        "retrieved": ctx["trace"]["retrieved"]["id"],
        "premask": str(args.out),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_prompt(args) -> int:
    premask = check_mask(read_array(args.premask), "premask")
    similarity = read_array(args.similarity)
    config = PromptConfig(
        positives=args.positives,
        sectors=args.sectors,
        band_min=args.band_min,
        band_max=args.band_max,
        margin=args.margin,
    )
    ps = build_prompt_set(premask, similarity, config)
    payload = prompt_set_to_dict(ps, args.image)
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True))
    _emit(
        args,
        payload,
        f"wrote {len(ps.positives)} positives, {len(ps.negatives)} negatives, bbox {ps.bbox} to {args.out}",
    )
    return 0


def _cmd_segment(args) -> int:
    image = load_image(args.image)
    prompts = prompt_set_from_dict(json.loads(Path(args.prompts).read_text()))
    request = SegmenterRequest(image=image, prompts=prompts)
    if args.backend == "fallback":
        result = fallback_segment(request, edge_map(image, scales=(1.0,)))
    else:
        if not args.adapter_dir:
            raise AdapterError("--backend adapter requires --adapter-dir")
        adapter_dir = Path(args.adapter_dir)
        if not (adapter_dir / "result_mask.raf").is_file():
            export_request(request, adapter_dir)
            raise AdapterError(
                f"request exported to {adapter_dir}; run the adapter there, then re-run this command"
            )
        result = import_result(adapter_dir)
    write_array(result.mask, args.out)
    _emit(
        args,
        {"mask": str(args.out), "confidence": result.confidence, "area": int(result.mask.sum())},
        f"wrote mask ({int(result.mask.sum())} px, confidence {result.confidence:.3f}) to {args.out}",
    )
    return 0


def _cmd_eval(args) -> int:
    config = _load_cfg(args.config)
    report = evaluate(args.manifest, config, leave_one_out=args.loo, trace_dir=args.trace_dir)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    if args.json:
        print(text)
    else:
        for cid, cls, score in report.per_case:
            print(f"{cid} ({cls}): dice {score:.2f}")
        for cls, score in sorted(report.per_class.items()):
            print(f"class {cls}: mean dice {score:.2f}")
        print(f"overall mean dice: {report.overall_mean:.2f}")
    return 0


def _cmd_synth(args) -> int:
    manifest = generate_benchmark(args.out, cases=args.cases, seed=args.seed)
    _emit(
        args,
        {"manifest": str(manifest), "cases": args.cases, "seed": args.seed},
        f"wrote {args.cases} synthetic cases; manifest at {manifest}",
    )
    return 0


def _cmd_edges(args) -> int:
    image = load_image(args.image)
    scales = tuple(float(s) for s in args.scales.split(",")) if args.scales else (1.0, 2.0, 4.0, 8.0)
    em = edge_map(image, scales)
    write_array(em.strength.astype(np.float32), args.out)
    if args.png:
        peak = em.strength.max() or 1.0
        heat = np.clip(em.strength / peak, 0.0, 1.0)
        rgb = np.stack([np.maximum(image, heat), image * (1 - heat), image * (1 - heat)], axis=2)
        write_png_rgb(rgb, args.png)
    _emit(
        args,
        {"strength": str(args.out), "max": float(em.strength.max())},
        f"wrote edge strength to {args.out}",
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rap", description="training-free few-shot segmentation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-db", help="build a support database from a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_build_db)

    p = sub.add_parser("retrieve", help="rank supports for a query feature map")
    p.add_argument("--db", required=True)
    p.add_argument("--query", required=True, help="query feature RAF")
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--use-global", action="store_true", help="score against global descriptors")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_retrieve)

    p = sub.add_parser("adapt", help="align the retrieved support mask onto a query")
    p.add_argument("--db", required=True)
    p.add_argument("--query", required=True, help="query image (.pgm or .raf)")
    p.add_argument("--features", required=True, help="query feature RAF")
    p.add_argument("--out", required=True, help="pre-mask RAF path")
    p.add_argument("--png", help="optional pre-mask PNG")
    p.add_argument("--config")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_adapt)

    p = sub.add_parser("prompt", help="turn a pre-mask into a prompt bundle")
    p.add_argument("--premask", required=True)
    p.add_argument("--similarity", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--image", default="image.raf", help="image path recorded in the bundle")
    p.add_argument("--positives", type=int, default=6)
    p.add_argument("--sectors", type=int, default=8)
    p.add_argument("--band-min", type=float, default=5.0)
    p.add_argument("--band-max", type=float, default=40.0)
    p.add_argument("--margin", type=int, default=5)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_prompt)

    p = sub.add_parser("segment", help="run a segmenter on a prompt bundle")
    p.add_argument("--image", required=True)
    p.add_argument("--prompts", required=True)
    p.add_argument("--out", default="mask.raf")
    p.add_argument("--backend", choices=("fallback", "adapter"), default="fallback")
    p.add_argument("--adapter-dir")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("eval", help="leave-one-out evaluation over a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config")
    p.add_argument("--loo", action="store_true", help="exclude each case from its own database")
    p.add_argument("--out", help="write the JSON report here as well")
    p.add_argument("--trace-dir", help="write per-case trace JSON files")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("synth", help="generate the synthetic benchmark")
    p.add_argument("--out", required=True)
    p.add_argument("--cases", type=int, default=20)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("edges", help="dump the query edge strength for debugging")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True, help="strength RAF path")
    p.add_argument("--png", help="optional heat overlay PNG")
    p.add_argument("--scales", help="comma-separated LoG sigmas")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_edges)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RapError as exc:
        print(f"rap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
