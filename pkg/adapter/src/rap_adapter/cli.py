"""rap-adapter CLI: export-features and segment subcommands.

Exit codes: 0 success, 1 adapter error (schema/setup), 2 usage error.
"""
from __future__ import annotations

import argparse
import sys

from .config import AdapterConfig
from .errors import AdapterFailure
from .features import export_features
from .segment import run_segmenter


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rap-adapter", description="foundation-model file bridge for the rap toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export-features", help="write a dense feature RAF for an image")
    p.add_argument("--image", required=True, help="input image (.pgm or .raf)")
    p.add_argument("--out", required=True, help="output feature RAF")
    p.add_argument("--model", default="hash-patch16")
    p.add_argument("--input-size", type=int, default=512)
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("segment", help="answer a request directory")
    p.add_argument("--request-dir", required=True)
    p.add_argument("--model", default="echo")
    p.add_argument("--device", default="cpu")
    p.set_defaults(func=_cmd_segment)
    return parser


def _cmd_export(args) -> int:
    config = AdapterConfig(
        feature_model_id=args.model, device=args.device, input_size=args.input_size
    )
    export_features(args.image, args.out, config)
    print(f"wrote features to {args.out}")
    return 0


def _cmd_segment(args) -> int:
    config = AdapterConfig(segmenter_model_id=args.model, device=args.device)
    out = run_segmenter(args.request_dir, config)
    print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AdapterFailure as exc:
        print(f"rap-adapter: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
