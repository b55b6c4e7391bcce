"""Extraction command line, mirroring the consumer CLI's path conventions."""

from __future__ import annotations

import argparse
import os
import sys

from .backbones import (
    DecodeFailureError,
    ModelLoadFailureError,
    NoDenseHeadError,
    load_manifest,
)
from .extract import (
    extract_embeddings,
    extract_embeddings_with_runtime_labels,
    extract_head,
)
from .wire import WireError


def _write_atomic(path: str, data: bytes) -> None:
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="imprintlab-extract",
        description="Capture final-dense-layer inputs and heads as EMB1/HED1 files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-embeddings",
                       help="one embedding row per image under --images")
    p.add_argument("--backbone", required=True)
    p.add_argument("--images", required=True,
                   help="root directory with one subdirectory per class")
    p.add_argument("--out", required=True)
    p.add_argument("--runtime-labels", action="store_true",
                   help="label rows with the backbone's own top-1 predictions "
                        "(for producer/consumer agreement checks)")

    p = sub.add_parser("extract-head", help="snapshot the final dense layer")
    p.add_argument("--backbone", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("list-backbones", help="print the pinned model manifest")

    args = parser.parse_args(argv)
    try:
        if args.command == "extract-embeddings":
            if args.runtime_labels:
                data = extract_embeddings_with_runtime_labels(args.backbone, args.images)
            else:
                data = extract_embeddings(args.backbone, args.images)
            _write_atomic(args.out, data)
        elif args.command == "extract-head":
            _write_atomic(args.out, extract_head(args.backbone))
        elif args.command == "list-backbones":
            for model_id, entry in sorted(load_manifest().items()):
                print(f"{model_id}: {entry['tap']} "
                      f"(input {entry['resolution']}, family {entry['family']})")
        return 0
    except (ModelLoadFailureError, DecodeFailureError, NoDenseHeadError,
            WireError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
