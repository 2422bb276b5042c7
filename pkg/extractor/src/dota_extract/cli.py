"""Command-line surface: dota-extract classifier|stream."""

from __future__ import annotations

import argparse
import json
import sys

from .encoders import make_encoder
from .jobs import export_classifier, export_stream, read_lines


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dota-extract",
        description="Export classifier heads and embedding streams for the "
                    "streaming adaptation engine")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", default="toy:64",
                        help="toy[:dim[:seed]] or clip:<checkpoint id/path>")
    common.add_argument("--classes", required=True,
                        help="text file with one class name per line")
    common.add_argument("--out", required=True)

    p_cls = sub.add_parser("classifier", parents=[common],
                           help="encode prompted class names into a .dcls head")
    p_cls.add_argument("--prompts", required=True,
                       help="text file with one prompt template per line; "
                            "'{}' is replaced by the class name")
    p_cls.set_defaults(func=_cmd_classifier)

    p_str = sub.add_parser("stream", parents=[common],
                           help="encode an image folder into a .demb stream")
    p_str.add_argument("--images", required=True,
                       help="directory of images; per-class subdirectories "
                            "matching the class list provide labels")
    p_str.set_defaults(func=_cmd_stream)
    return parser


def _cmd_classifier(args) -> int:
    encoder = make_encoder(args.model)
    names = read_lines(args.classes)
    prompts = read_lines(args.prompts)
    export_classifier(encoder, names, prompts, args.out)
    print(json.dumps({"classifier": args.out, "k": len(names),
                      "dim": encoder.dim,
                      "temperature": encoder.temperature}))
    return 0


def _cmd_stream(args) -> int:
    encoder = make_encoder(args.model)
    names = read_lines(args.classes)
    manifest = export_stream(encoder, args.images, args.out,
                             class_names=names)
    print(json.dumps({"stream": args.out, **manifest}))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
