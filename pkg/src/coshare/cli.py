"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 missing upstream artifact,
4 data error.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .ingest import CorpusError
from .pipeline import STAGES, DataError, MissingArtifactError, run_stage

EXIT_CONFIG = 2
EXIT_MISSING_ARTIFACT = 3
EXIT_DATA = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coshare",
        description="Batch pipeline for co-sharing network misinformation analysis",
    )
    sub = parser.add_subparsers(dest="stage", required=True)
    for name in (*STAGES, "all"):
        p = sub.add_parser(name, help=f"run the {name} stage" if name != "all" else "run every stage")
        p.add_argument("--config", required=True, help="path to the pipeline config file")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers across windows")
        p.add_argument(
            "--strict",
            action="store_true",
            help="abort on the first malformed corpus line instead of reporting it",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs < 1:
        print("config error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        run_stage(config, args.stage, jobs=args.jobs, strict=args.strict)
    except MissingArtifactError as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACT
    except (CorpusError, DataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
