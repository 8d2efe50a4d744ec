"""Run a contextual encoder over period-tagged sentences and dump embeddings.

Input is a UTF-8 TSV with header `period lemma token_index sentence`, one row
per occurrence of a target word. `token_index` is the 0-based position of the
occurrence among the whitespace tokens of the sentence. Each occurrence is
embedded with the encoder's top (last) layer at the target token; words the
tokenizer splits into several pieces are mean-pooled over their pieces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .bundle_writer import write_bundle

SENTENCE_COLUMNS = ("period", "lemma", "token_index", "sentence")
TOP_LAYER = "top"


class ExtractionError(Exception):
    """Raised for malformed input rows or encoder problems."""


@dataclass(frozen=True)
class Occurrence:
    period: str
    lemma: str
    token_index: int
    words: tuple[str, ...]


@dataclass
class ExtractionJob:
    sentences: Path
    encoder: str
    periods: list[str]
    output: Path
    lemmas: list[str] | None = None  # None means every lemma in the file
    layer: str = TOP_LAYER
    batch_size: int = 16

    def __post_init__(self) -> None:
        if self.layer != TOP_LAYER:
            raise ExtractionError(f"unsupported layer selector {self.layer!r}")
        if len(set(self.periods)) != len(self.periods) or not self.periods:
            raise ExtractionError("periods must be non-empty and distinct")
        if self.batch_size < 1:
            raise ExtractionError("batch_size must be >= 1")


def read_occurrences(
    path: Path | str, periods: Sequence[str], lemmas: Sequence[str] | None = None
) -> list[Occurrence]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ExtractionError("sentence file is empty (no header)")
    header = lines[0].split("\t")
    if header[: len(SENTENCE_COLUMNS)] != list(SENTENCE_COLUMNS):
        raise ExtractionError(
            f"expected header {' '.join(SENTENCE_COLUMNS)!r}, got {lines[0]!r}"
        )
    wanted = set(lemmas) if lemmas is not None else None
    out: list[Occurrence] = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) < 4:
            raise ExtractionError(f"line {lineno}: expected 4 tab-separated columns")
        period, lemma, raw_index, sentence = cells[0], cells[1], cells[2], cells[3]
        if period not in periods:
            raise ExtractionError(
                f"line {lineno}: period {period!r} not in declared periods {list(periods)}"
            )
        try:
            token_index = int(raw_index)
        except ValueError as exc:
            raise ExtractionError(f"line {lineno}: bad token_index {raw_index!r}") from exc
        words = tuple(sentence.split())
        if not 0 <= token_index < len(words):
            raise ExtractionError(
                f"line {lineno}: token_index {token_index} out of range "
                f"for {len(words)} tokens"
            )
        if wanted is not None and lemma not in wanted:
            continue
        out.append(Occurrence(period, lemma, token_index, words))
    return out


class Encoder:
    """Any huggingface-style contextual encoder with a fast tokenizer."""

    def __init__(self, tokenizer, model) -> None:
        self.tokenizer = tokenizer
        self.model = model
        self.model.eval()

    @classmethod
    def load(cls, name_or_path: str) -> "Encoder":
        try:
            tokenizer = AutoTokenizer.from_pretrained(name_or_path)
            model = AutoModel.from_pretrained(name_or_path)
        except Exception as exc:
            raise ExtractionError(f"encoder load failure for {name_or_path!r}: {exc}") from exc
        if not getattr(tokenizer, "is_fast", False):
            raise ExtractionError(
                "encoder tokenizer must be a fast tokenizer (word alignment needed)"
            )
        return cls(tokenizer, model)

    @property
    def hidden_size(self) -> int:
        return int(self.model.config.hidden_size)

    def embed_batch(self, batch: Sequence[Occurrence]) -> np.ndarray:
        """Top-layer states at each occurrence's target token, piece-averaged."""
        encoded = self.tokenizer(
            [list(o.words) for o in batch],
            is_split_into_words=True,
            padding=True,
            truncation=True,
            return_tensors="pt",
        )
        with torch.no_grad():
            hidden = self.model(**encoded).last_hidden_state
        vectors = np.empty((len(batch), self.hidden_size), dtype=np.float32)
        for i, occurrence in enumerate(batch):
            positions = [
                p for p, w in enumerate(encoded.word_ids(i)) if w == occurrence.token_index
            ]
            if not positions:
                raise ExtractionError(
                    f"target token {occurrence.token_index} of {occurrence.lemma!r} "
                    "was lost to truncation"
                )
            vectors[i] = hidden[i, positions].mean(dim=0).numpy()
        return vectors


def extract(job: ExtractionJob) -> dict[tuple[str, str], int]:
    """Embed every occurrence and write the bundle; returns per-pair counts."""
    occurrences = read_occurrences(job.sentences, job.periods, job.lemmas)
    if not occurrences:
        raise ExtractionError("no matching occurrences in the sentence file")
    encoder = Encoder.load(job.encoder)

    grouped: dict[tuple[str, str], list[np.ndarray]] = {}
    for start in range(0, len(occurrences), job.batch_size):
        batch = occurrences[start : start + job.batch_size]
        vectors = encoder.embed_batch(batch)
        for occurrence, vector in zip(batch, vectors):
            grouped.setdefault((occurrence.lemma, occurrence.period), []).append(vector)

    matrices = {key: np.vstack(rows) for key, rows in grouped.items()}
    write_bundle(job.output, list(job.periods), matrices, dim=encoder.hidden_size)
    return {key: rows.shape[0] for key, rows in matrices.items()}
