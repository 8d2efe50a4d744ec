"""Command-line pipeline: validate bundles, score and rank words, evaluate, synth.

Exit codes: 0 on success, 1 for data violations (invalid bundle, unscorable
input, malformed gold), 2 for usage errors. Batch scoring skips words that
fail their preconditions and reports them to the log instead of aborting.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from . import bundle as bundle_io
from . import evaluation, measures, synth
from .clustering import AffinityConfig, KMeansConfig

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2


def _bundle_dir(parser: argparse.ArgumentParser, raw: str) -> Path:
    path = Path(raw)
    if not path.is_dir():
        parser.error(f"bundle directory not found: {raw}")
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensedrift",
        description="Quantify how much word usage drifted between two time periods.",
    )
    parser.add_argument("--seed", type=int, default=0, help="base seed for every randomized step")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers for batch scoring")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a bundle's manifest invariants")
    p_validate.add_argument("bundle")

    p_score = sub.add_parser("score", help="score words on a period pair")
    p_score.add_argument("--bundle", required=True)
    p_score.add_argument("--earlier", required=True, help="earlier period id")
    p_score.add_argument("--later", required=True, help="later period id")
    p_score.add_argument(
        "--methods",
        default=",".join(measures.METHODS),
        help="comma-separated subset of: " + ", ".join(measures.METHODS),
    )
    p_score.add_argument("--words", default=None, help="comma-separated lemma subset")
    p_score.add_argument("--cap", type=int, default=bundle_io.DEFAULT_USAGE_CAP,
                         help="usage sampling cap per (word, period) for clustering")
    p_score.add_argument("--k", type=int, default=5, help="k-means cluster count")
    p_score.add_argument("--restarts", type=int, default=10)
    p_score.add_argument("--damping", type=float, default=0.9)
    p_score.add_argument("--preference", default="median",
                         help="affinity preference: 'median' or a number")
    p_score.add_argument("--normalize", action="store_true",
                         help="unit-normalize usage vectors before clustering")
    p_score.add_argument("--output", "-o", default="-", help="score TSV path, '-' for stdout")
    p_score.add_argument("--log-file", default=None, help="trace/skip log path (default stderr)")

    p_rank = sub.add_parser("rank", help="rank a score TSV for one method")
    p_rank.add_argument("scores")
    p_rank.add_argument("--method", required=True)
    p_rank.add_argument("--output", "-o", default="-")

    p_eval = sub.add_parser("evaluate", help="correlate scores with gold annotations")
    p_eval.add_argument("--scores", required=True)
    p_eval.add_argument("--gold", required=True)
    p_eval.add_argument("--alpha", type=float, default=evaluation.DEFAULT_ALPHA)
    p_eval.add_argument("--agreement-threshold", type=float,
                        default=evaluation.DEFAULT_AGREEMENT_THRESHOLD)
    p_eval.add_argument("--permutations", type=int, default=evaluation.DEFAULT_PERMUTATIONS)
    p_eval.add_argument("--output", "-o", default=None, help="report TSV path")

    p_synth = sub.add_parser("synth", help="generate a synthetic bundle with analytic gold")
    p_synth.add_argument("spec", help="drift spec file (JSON)")
    p_synth.add_argument("output", help="bundle output directory")
    return parser


def _cmd_validate(args, parser) -> int:
    directory = _bundle_dir(parser, args.bundle)
    try:
        violations = bundle_io.validate_bundle(directory)
    except bundle_io.BundleError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA
    for violation in violations:
        print(violation)
    return EXIT_OK if not violations else EXIT_DATA


def _score_one(task) -> tuple[str, list[tuple], list[str], str | None]:
    (directory, lemma, earlier, later, methods, cap, seed, kconf, aconf, normalize) = task
    trace: list[str] = []
    try:
        scores = measures.score_word_methods(
            directory, lemma, earlier, later, methods,
            cap=cap, seed=seed, kmeans_config=kconf, affinity_config=aconf,
            normalize=normalize, trace=trace.append,
        )
        rows = [(s.lemma, s.method, s.period_pair[0], s.period_pair[1], s.value) for s in scores]
        return lemma, rows, trace, None
    except measures.ScoringError as exc:
        return lemma, [], trace, str(exc)


def _cmd_score(args, parser, seed: int, jobs: int) -> int:
    directory = _bundle_dir(parser, args.bundle)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if not methods:
        parser.error("no methods given")
    for m in methods:
        if m not in measures.METHODS:
            parser.error(f"unknown method {m!r}")
    try:
        manifest = bundle_io.read_manifest(directory)
    except bundle_io.BundleError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA
    for period in (args.earlier, args.later):
        if period not in manifest.periods:
            parser.error(f"period {period!r} not in bundle periods {manifest.periods}")
    lemmas = sorted(manifest.lemmas())
    if args.words is not None:
        wanted = {w.strip() for w in args.words.split(",") if w.strip()}
        known = set(lemmas)
        for w in sorted(wanted):
            if w not in known:
                parser.error(f"word {w!r} not in bundle")
        lemmas = sorted(wanted)

    try:
        preference = "median" if args.preference == "median" else float(args.preference)
    except ValueError:
        parser.error(f"bad preference value {args.preference!r}")
    kconf = KMeansConfig(k=args.k, restarts=args.restarts)
    aconf = AffinityConfig(damping=args.damping, preference=preference)

    tasks = [
        (str(directory), lemma, args.earlier, args.later, tuple(methods),
         args.cap, seed, kconf, aconf, args.normalize)
        for lemma in lemmas
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_score_one, tasks))
    else:
        outcomes = [_score_one(t) for t in tasks]

    # merge in lemma order so output bytes never depend on scheduling
    outcomes.sort(key=lambda item: item[0])
    scores: list[measures.ChangeScore] = []
    log_lines: list[str] = []
    for lemma, rows, trace, error in outcomes:
        log_lines.extend(trace)
        if error is not None:
            log_lines.append(f"[skip] lemma={lemma} reason={error}")
            continue
        scores.extend(
            measures.ChangeScore(r[0], r[1], (r[2], r[3]), r[4]) for r in rows
        )

    log_text = "".join(line + "\n" for line in log_lines)
    if args.log_file:
        Path(args.log_file).write_text(log_text, encoding="utf-8")
    elif log_text:
        sys.stderr.write(log_text)

    if not scores:
        print("no scorable words", file=sys.stderr)
        return EXIT_DATA
    _write_text(args.output, measures.scores_to_tsv(scores))
    return EXIT_OK


def _cmd_rank(args, parser) -> int:
    path = Path(args.scores)
    if not path.is_file():
        parser.error(f"score file not found: {args.scores}")
    try:
        scores = measures.scores_from_tsv(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        print(f"bad score file: {exc}", file=sys.stderr)
        return EXIT_DATA
    subset = [s for s in scores if s.method == args.method]
    if not subset:
        print(f"no scores for method {args.method!r}", file=sys.stderr)
        return EXIT_DATA
    ranked = measures.rank_words(subset)
    _write_text(args.output, measures.scores_to_tsv(ranked, ranked=True))
    return EXIT_OK


def _cmd_evaluate(args, parser, seed: int) -> int:
    for name in (args.scores, args.gold):
        if not Path(name).is_file():
            parser.error(f"file not found: {name}")
    try:
        scores = measures.scores_from_tsv(Path(args.scores).read_text(encoding="utf-8"))
        gold = evaluation.load_gold(args.gold)
    except (ValueError, evaluation.GoldFormatError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA
    gold = evaluation.filter_by_agreement(gold, args.agreement_threshold)
    matched, missing = evaluation.match_gold(scores, gold)
    for lemma in missing:
        print(f"[unmatched] lemma={lemma} not in gold", file=sys.stderr)
    try:
        results = evaluation.evaluate(
            matched, gold, args.alpha, permutations=args.permutations, seed=seed
        )
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA
    if args.output:
        Path(args.output).write_text(evaluation.report_tsv(results), encoding="utf-8")
    sys.stdout.write(evaluation.report_text(results))
    return EXIT_OK


def _cmd_synth(args, parser) -> int:
    try:
        periods, specs = synth.load_drift_specs(args.spec)
        synth.build_synthetic_bundle(specs, periods, args.output)
    except (synth.SynthSpecError, bundle_io.BundleError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_DATA
    gold_path = Path(args.output) / "gold.tsv"
    gold_path.write_text(synth.gold_tsv_for(specs), encoding="utf-8")
    print(f"wrote bundle with {len(specs)} words and {gold_path.name}", file=sys.stderr)
    return EXIT_OK


def _write_text(target: str, text: str) -> None:
    if target == "-":
        sys.stdout.write(text)
    else:
        Path(target).write_text(text, encoding="utf-8")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "validate":
        return _cmd_validate(args, parser)
    if args.command == "score":
        return _cmd_score(args, parser, seed=args.seed, jobs=args.jobs)
    if args.command == "rank":
        return _cmd_rank(args, parser)
    if args.command == "evaluate":
        return _cmd_evaluate(args, parser, seed=args.seed)
    if args.command == "synth":
        return _cmd_synth(args, parser)
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
