"""Rank-correlation evaluation of change scores against human-annotated gold.

Gold records carry two measures: delta-later (a difference of relatedness
means, used as-is) and compare (mean cross-period relatedness on a 1..4
scale, where lower means stronger change, so it enters the correlation as
1 - compare). Significance comes from a two-sided permutation test: exact
enumeration up to n = 8, seeded Monte-Carlo above that.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .measures import METHODS, ChangeScore
from .seeding import stable_hash

DELTA_LATER = "delta-later"
COMPARE = "compare"
GOLD_MEASURES = (DELTA_LATER, COMPARE)
GOLD_COLUMNS = ("word", "delta_later", "compare", "agreement")

DEFAULT_ALPHA = 0.05
DEFAULT_AGREEMENT_THRESHOLD = 0.2
DEFAULT_PERMUTATIONS = 100_000
EXACT_PERMUTATION_LIMIT = 8

REPORT_HEADER = ("method", "measure", "rho", "p_value", "n", "significant", "best")


class GoldFormatError(Exception):
    """Raised for malformed gold annotation files."""


@dataclass(frozen=True)
class GoldRecord:
    lemma: str
    delta_later: float
    compare: float
    agreement: float


@dataclass(frozen=True)
class CorrelationResult:
    method: str
    gold_measure: str
    rho: float
    p_value: float
    significant: bool
    n: int


def load_gold(path: Path | str) -> list[GoldRecord]:
    """Parse a gold TSV with header columns word, delta_later, compare, agreement.

    Column order is free and extra columns are ignored; numeric parsing is
    strict and compare must lie in [1, 4].
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise GoldFormatError("gold file is empty (no header)")
    header = lines[0].rstrip("\n").split("\t")
    positions = {}
    for column in GOLD_COLUMNS:
        if column not in header:
            raise GoldFormatError(f"missing column {column!r} in gold header")
        positions[column] = header.index(column)

    records: list[GoldRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) < len(header):
            raise GoldFormatError(f"line {lineno}: expected {len(header)} columns")
        lemma = cells[positions["word"]].strip()
        if not lemma:
            raise GoldFormatError(f"line {lineno}: empty word")
        if lemma in seen:
            raise GoldFormatError(f"line {lineno}: duplicate lemma {lemma!r}")
        seen.add(lemma)
        numbers = {}
        for column in ("delta_later", "compare", "agreement"):
            raw = cells[positions[column]].strip()
            try:
                numbers[column] = float(raw)
            except ValueError as exc:
                raise GoldFormatError(
                    f"line {lineno}: unparsable {column} value {raw!r}"
                ) from exc
        if not 1.0 <= numbers["compare"] <= 4.0:
            raise GoldFormatError(
                f"line {lineno}: compare out of range [1, 4]: {numbers['compare']}"
            )
        records.append(GoldRecord(lemma, numbers["delta_later"], numbers["compare"], numbers["agreement"]))
    return records


def filter_by_agreement(
    records: Sequence[GoldRecord], threshold: float = DEFAULT_AGREEMENT_THRESHOLD
) -> list[GoldRecord]:
    """Keep records whose annotator agreement is at least the threshold."""
    return [r for r in records if r.agreement >= threshold]


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_values = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_values[j + 1] == sorted_values[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _rank_correlation(rx: np.ndarray, ry: np.ndarray) -> float:
    cx = rx - rx.mean()
    cy = ry - ry.mean()
    return float(cx @ cy / np.sqrt((cx @ cx) * (cy @ cy)))


def spearman(
    x: Sequence[float] | np.ndarray,
    y: Sequence[float] | np.ndarray,
    *,
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
) -> tuple[float, float]:
    """Spearman rho with a two-sided permutation p-value.

    rho is the Pearson correlation of the averaged ranks. For n <= 8 the
    p-value enumerates all n! pairings exactly (p = share of permutations
    with |rho| at least as extreme); above that it is the add-one Monte-Carlo
    estimate over `permutations` seeded shuffles.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs differ in length")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 observations")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("zero rank variance (constant input)")

    rx = average_ranks(x)
    ry = average_ranks(y)
    rho = _rank_correlation(rx, ry)

    cx = rx - rx.mean()
    denom_x = float(cx @ cx)

    def rho_of(perm_rows: np.ndarray) -> np.ndarray:
        cy = perm_rows - ry.mean()
        num = cy @ cx
        return num / np.sqrt(denom_x * np.einsum("ij,ij->i", cy, cy))

    threshold = abs(rho) - 1e-12
    if n <= EXACT_PERMUTATION_LIMIT:
        perms = np.array(list(itertools.permutations(ry)))
        extreme = int((np.abs(rho_of(perms)) >= threshold).sum())
        p_value = extreme / perms.shape[0]
    else:
        rng = np.random.default_rng(np.random.SeedSequence(seed & ((1 << 64) - 1)))
        extreme = 0
        remaining = permutations
        while remaining > 0:
            batch = min(remaining, 20_000)
            idx = np.argsort(rng.random((batch, n)), axis=1)
            extreme += int((np.abs(rho_of(ry[idx])) >= threshold).sum())
            remaining -= batch
        p_value = (1 + extreme) / (1 + permutations)
    return rho, p_value


def match_gold(
    scores: Sequence[ChangeScore], gold: Sequence[GoldRecord]
) -> tuple[list[ChangeScore], list[str]]:
    """Split scores into (present in gold, missing lemmas)."""
    gold_lemmas = {g.lemma for g in gold}
    matched = [s for s in scores if s.lemma in gold_lemmas]
    missing = sorted({s.lemma for s in scores if s.lemma not in gold_lemmas})
    return matched, missing


def evaluate(
    scores: Sequence[ChangeScore],
    gold: Sequence[GoldRecord],
    alpha: float = DEFAULT_ALPHA,
    *,
    permutations: int = DEFAULT_PERMUTATIONS,
    seed: int = 0,
) -> list[CorrelationResult]:
    """Correlate each method's scores with both gold measures.

    The compare measure enters as 1 - compare, because a lower compare score
    means a stronger change. Lemmas absent from the gold are dropped (use
    match_gold to report them); fewer than 3 common lemmas is an error.
    """
    gold_by_lemma = {g.lemma: g for g in gold}
    methods = [m for m in METHODS if any(s.method == m for s in scores)]
    results: list[CorrelationResult] = []
    for method in methods:
        rows = sorted(
            (s for s in scores if s.method == method and s.lemma in gold_by_lemma),
            key=lambda s: s.lemma,
        )
        if len(rows) < 3:
            raise ValueError(
                f"method {method!r}: only {len(rows)} lemmas shared with gold, need >= 3"
            )
        values = np.array([s.value for s in rows])
        delta = np.array([gold_by_lemma[s.lemma].delta_later for s in rows])
        inverted_compare = np.array([1.0 - gold_by_lemma[s.lemma].compare for s in rows])
        for measure, target in ((DELTA_LATER, delta), (COMPARE, inverted_compare)):
            rho, p_value = spearman(
                values,
                target,
                permutations=permutations,
                seed=stable_hash(str(seed), method, measure),
            )
            results.append(
                CorrelationResult(
                    method=method,
                    gold_measure=measure,
                    rho=rho,
                    p_value=p_value,
                    significant=p_value < alpha,
                    n=len(rows),
                )
            )
    return results


def _best_cells(results: Sequence[CorrelationResult]) -> set[tuple[str, str]]:
    best: set[tuple[str, str]] = set()
    for measure in GOLD_MEASURES:
        rhos = [r for r in results if r.gold_measure == measure]
        if rhos:
            top = max(r.rho for r in rhos)
            best.update((r.method, r.gold_measure) for r in rhos if r.rho == top)
    return best


def report_tsv(results: Sequence[CorrelationResult]) -> str:
    """Machine-readable report: one row per method x measure, with a best flag."""
    best = _best_cells(results)
    lines = ["\t".join(REPORT_HEADER)]
    for r in results:
        lines.append(
            "\t".join(
                (
                    r.method,
                    r.gold_measure,
                    f"{r.rho:.9f}",
                    f"{r.p_value:.9f}",
                    str(r.n),
                    "true" if r.significant else "false",
                    "true" if (r.method, r.gold_measure) in best else "false",
                )
            )
        )
    return "\n".join(lines) + "\n"


def report_text(results: Sequence[CorrelationResult]) -> str:
    """Pretty table: rho to 3 digits, * when significant, ** ** around the best."""
    best = _best_cells(results)
    header = f"{'method':<14} {'measure':<12} {'rho':>10} {'p':>8} {'n':>5}"
    lines = [header, "-" * len(header)]
    for r in results:
        cell = f"{r.rho:.3f}" + ("*" if r.significant else "")
        if (r.method, r.gold_measure) in best:
            cell = f"**{cell}**"
        lines.append(
            f"{r.method:<14} {r.gold_measure:<12} {cell:>10} {r.p_value:>8.4f} {r.n:>5}"
        )
    return "\n".join(lines) + "\n"
