"""Command-line entry for the corpus converter."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import (
    DEFAULT_CACHE_DIR,
    Fetcher,
    IngestError,
    IngestSpec,
    PartialIngestError,
    ingest,
    make_psb2_fetcher,
)
from .problems import PROBLEM_NAMES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psb2-ingest",
        description=(
            "Download the PSB2 benchmark dataset and convert it into a"
            " directory of JSON problem files."
        ),
    )
    parser.add_argument("output_dir", type=Path, help="corpus directory to write")
    parser.add_argument(
        "--prompt-n", type=int, default=5, help="pairs shown in draft prompts"
    )
    parser.add_argument(
        "--validation-n", type=int, default=100, help="pairs scored during search"
    )
    parser.add_argument(
        "--test-n", type=int, default=2000, help="held-out evaluation pairs"
    )
    parser.add_argument(
        "--seed", type=int, default=0, help="sampling seed; fixes the output bytes"
    )
    parser.add_argument(
        "--cache-dir",
        type=Path,
        default=DEFAULT_CACHE_DIR,
        help="where dataset downloads are kept between runs",
    )
    parser.add_argument(
        "--problems",
        default=None,
        help="comma-separated problem names (default: all 25)",
    )
    parser.add_argument(
        "--prompt-edge-cases",
        action="store_true",
        help="reserved: oversample edge cases into the prompt set",
    )
    return parser


def main(argv: list[str] | None = None, fetch: Fetcher | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.prompt_edge_cases:
        print(
            "psb2-ingest: --prompt-edge-cases is reserved and not implemented;"
            " prompt pairs are sampled uniformly",
            file=sys.stderr,
        )
        return 2
    problems = None
    if args.problems is not None:
        problems = [n.strip() for n in args.problems.split(",") if n.strip()]
        if not problems:
            print("psb2-ingest: --problems named nothing", file=sys.stderr)
            return 2

    try:
        spec = IngestSpec(
            output_dir=args.output_dir,
            prompt_n=args.prompt_n,
            validation_n=args.validation_n,
            test_n=args.test_n,
            seed=args.seed,
        )
        if fetch is None:
            fetch = make_psb2_fetcher(args.cache_dir)
        written = ingest(spec, fetch=fetch, problems=problems, progress=print)
    except PartialIngestError as exc:
        print(f"psb2-ingest: {exc}", file=sys.stderr)
        print(
            f"psb2-ingest: kept {len(exc.written)} finished problem files",
            file=sys.stderr,
        )
        return 1
    except IngestError as exc:
        print(f"psb2-ingest: {exc}", file=sys.stderr)
        return 2

    print(f"wrote {len(written)} problem files to {spec.output_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
