"""CLI for dumping contextual token embeddings into a sensedrift bundle."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .extract import ExtractionError, ExtractionJob, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="usage-extractor",
        description="Embed period-tagged word occurrences with a contextual "
        "encoder and write a sensedrift-compatible bundle.",
    )
    parser.add_argument("--sentences", required=True,
                        help="TSV with columns: period lemma token_index sentence")
    parser.add_argument("--encoder", required=True,
                        help="model name or local path loadable by transformers")
    parser.add_argument("--periods", required=True,
                        help="comma-separated period ids, in manifest order")
    parser.add_argument("--output", "-o", required=True, help="bundle directory")
    parser.add_argument("--words", default=None,
                        help="comma-separated target lemmas (default: all in the file)")
    parser.add_argument("--batch-size", type=int, default=16)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not Path(args.sentences).is_file():
        parser.error(f"sentence file not found: {args.sentences}")
    periods = [p.strip() for p in args.periods.split(",") if p.strip()]
    lemmas = None
    if args.words is not None:
        lemmas = [w.strip() for w in args.words.split(",") if w.strip()]
    try:
        job = ExtractionJob(
            sentences=Path(args.sentences),
            encoder=args.encoder,
            periods=periods,
            output=Path(args.output),
            lemmas=lemmas,
            batch_size=args.batch_size,
        )
        counts = extract(job)
    except ExtractionError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    total = sum(counts.values())
    print(
        f"embedded {total} occurrences of {len({k[0] for k in counts})} words "
        f"into {args.output}",
        file=sys.stderr,
    )
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
