"""Command-line entry point for the segmentation worker."""

from __future__ import annotations

import argparse
import sys

from .backend import SamBackend, StubBackend
from .config import AdapterConfig
from .server import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sam-adapter", description=__doc__)
    parser.add_argument("--model", default="vit_h", choices=["vit_b", "vit_l", "vit_h"],
                        help="SAM architecture variant")
    parser.add_argument("--checkpoint", help="path to the matching SAM checkpoint (.pth)")
    parser.add_argument("--watch-dir", required=True, help="exchange directory to poll")
    parser.add_argument("--poll-ms", type=int, default=250, help="poll interval in milliseconds")
    parser.add_argument("--once", action="store_true", help="answer pending requests and exit")
    parser.add_argument("--backend", default="sam", choices=["sam", "stub"],
                        help="'stub' runs the deterministic weights-free backend (testing)")
    args = parser.parse_args(argv)

    try:
        config = AdapterConfig(
            watch_dir=args.watch_dir,
            model_variant=args.model,
            checkpoint=args.checkpoint,
            poll_s=args.poll_ms / 1000.0,
        )
        if args.backend == "stub":
            backend = StubBackend()
        else:
            if not args.checkpoint:
                parser.error("--checkpoint is required with --backend sam")
            backend = SamBackend(config.model_variant, str(config.checkpoint))
        processed = serve(config, backend=backend, once=args.once)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.once:
        print(f"answered {processed} request(s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
