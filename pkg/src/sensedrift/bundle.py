"""On-disk bundle format for per-(word, period) token embedding matrices.

A bundle is a directory with a `manifest.json` and one raw binary file per
(word, period). The binary layout is row-major float32 little-endian with no
header; the manifest carries the row counts and the shared dimensionality, so
a file's byte length must equal count * dim * 4. Matrix files live at
`<lemma>/<period>.f32` under the bundle root, with the lemma percent-encoded
so any unicode lemma maps to a safe path.

Manifest keys::

    {
      "schema_version": 1,
      "dim": 4,
      "dtype": "f32le",
      "periods": ["earlier", "later"],
      "words": [
        {"lemma": "bank",
         "periods": {"earlier": {"file": "bank/earlier.f32", "count": 3},
                     "later":   {"file": "bank/later.f32",   "count": 5}}}
      ]
    }

Bundles are immutable after writing; concurrent readers need no locking.
"""
from __future__ import annotations

import json
import urllib.parse
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .seeding import rng_for

MANIFEST_NAME = "manifest.json"
DTYPE_TAG = "f32le"
SCHEMA_VERSION = 1
DEFAULT_USAGE_CAP = 10_000


class BundleError(Exception):
    """Raised for unreadable, inconsistent or corrupt bundle data."""


@dataclass(frozen=True)
class EmbeddingMatrix:
    """All token embeddings of one word in one period, one row per usage."""

    lemma: str
    period: str
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


@dataclass(frozen=True)
class PeriodFile:
    file: str
    count: int


@dataclass
class WordEntry:
    lemma: str
    periods: dict[str, PeriodFile] = field(default_factory=dict)


@dataclass
class BundleManifest:
    dim: int
    periods: list[str]
    words: list[WordEntry]
    schema_version: int = SCHEMA_VERSION
    dtype: str = DTYPE_TAG

    def lemmas(self) -> list[str]:
        return [w.lemma for w in self.words]

    def entry(self, lemma: str) -> WordEntry:
        for word in self.words:
            if word.lemma == lemma:
                return word
        raise BundleError(f"word not found: {lemma!r}")

    def to_json(self) -> str:
        payload = {
            "schema_version": self.schema_version,
            "dim": self.dim,
            "dtype": self.dtype,
            "periods": list(self.periods),
            "words": [
                {
                    "lemma": w.lemma,
                    "periods": {
                        p: {"file": pf.file, "count": pf.count}
                        for p, pf in w.periods.items()
                    },
                }
                for w in self.words
            ],
        }
        return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "BundleManifest":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise BundleError(f"unreadable manifest: {exc}") from exc
        try:
            words = [
                WordEntry(
                    lemma=w["lemma"],
                    periods={
                        p: PeriodFile(file=pf["file"], count=int(pf["count"]))
                        for p, pf in w["periods"].items()
                    },
                )
                for w in payload["words"]
            ]
            return cls(
                dim=int(payload["dim"]),
                periods=list(payload["periods"]),
                words=words,
                schema_version=int(payload["schema_version"]),
                dtype=str(payload["dtype"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BundleError(f"unreadable manifest: missing or bad field ({exc})") from exc


def matrix_relpath(lemma: str, period: str) -> str:
    """Relative path of a matrix file under the bundle root."""
    return f"{urllib.parse.quote(lemma, safe='')}/{period}.f32"


def build_manifest(
    matrices: Iterable[EmbeddingMatrix],
    periods: list[str],
    dim: int | None = None,
) -> BundleManifest:
    """Manifest describing `matrices`, with count-0 entries for absent periods."""
    matrices = list(matrices)
    if dim is None:
        if not matrices:
            raise BundleError("cannot infer dim from an empty matrix list")
        dim = matrices[0].dim
    counts: dict[str, dict[str, int]] = {}
    for m in matrices:
        counts.setdefault(m.lemma, {})
        if m.period in counts[m.lemma]:
            raise BundleError(f"duplicate matrix for ({m.lemma!r}, {m.period!r})")
        counts[m.lemma][m.period] = m.n
    words = [
        WordEntry(
            lemma=lemma,
            periods={
                p: PeriodFile(file=matrix_relpath(lemma, p), count=per.get(p, 0))
                for p in periods
            },
        )
        for lemma, per in counts.items()
    ]
    return BundleManifest(dim=dim, periods=list(periods), words=words)


def write_bundle(
    manifest: BundleManifest,
    matrices: Iterable[EmbeddingMatrix],
    directory: Path | str,
) -> None:
    """Write manifest plus one float32-LE binary file per (word, period).

    Every manifest entry with count > 0 must have a matching matrix of that
    row count; count-0 entries get empty files. Matrices not named by the
    manifest, duplicates, and dimension mismatches are errors.
    """
    directory = Path(directory)
    by_key: dict[tuple[str, str], EmbeddingMatrix] = {}
    for m in matrices:
        key = (m.lemma, m.period)
        if key in by_key:
            raise BundleError(f"duplicate matrix for ({m.lemma!r}, {m.period!r})")
        by_key[key] = m

    known = {(w.lemma, p) for w in manifest.words for p in w.periods}
    for lemma, period in by_key:
        if (lemma, period) not in known:
            raise BundleError(f"matrix ({lemma!r}, {period!r}) not named by manifest")

    if len(set(manifest.periods)) != len(manifest.periods):
        raise BundleError("duplicate period ids in manifest")
    if len(set(manifest.lemmas())) != len(manifest.words):
        raise BundleError("duplicate lemmas in manifest")

    directory.mkdir(parents=True, exist_ok=True)
    for word in manifest.words:
        for period, pf in word.periods.items():
            m = by_key.get((word.lemma, period))
            if pf.count == 0 and m is None:
                data = b""
            elif m is None:
                raise BundleError(f"missing matrix for ({word.lemma!r}, {period!r})")
            else:
                if m.n != pf.count:
                    raise BundleError(
                        f"({word.lemma!r}, {period!r}): {m.n} rows but manifest count {pf.count}"
                    )
                if m.n > 0 and m.dim != manifest.dim:
                    raise BundleError(
                        f"({word.lemma!r}, {period!r}): dimension mismatch "
                        f"{m.dim} != manifest dim {manifest.dim}"
                    )
                data = np.ascontiguousarray(m.vectors, dtype="<f4").tobytes()
            target = directory / pf.file
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
    (directory / MANIFEST_NAME).write_text(manifest.to_json(), encoding="utf-8")


def read_manifest(directory: Path | str) -> BundleManifest:
    path = Path(directory) / MANIFEST_NAME
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise BundleError(f"unreadable manifest: {exc}") from exc
    return BundleManifest.from_json(text)


def read_matrix(directory: Path | str, lemma: str, period: str) -> EmbeddingMatrix:
    """Load one (word, period) matrix, checking length and finiteness."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    entry = manifest.entry(lemma)
    if period not in entry.periods:
        raise BundleError(f"period not found: {period!r} for word {lemma!r}")
    pf = entry.periods[period]
    expected = pf.count * manifest.dim * 4
    try:
        data = (directory / pf.file).read_bytes()
    except OSError as exc:
        raise BundleError(f"corrupt matrix ({lemma!r}, {period!r}): {exc}") from exc
    if len(data) != expected:
        raise BundleError(
            f"corrupt matrix ({lemma!r}, {period!r}): "
            f"{len(data)} bytes, expected {expected}"
        )
    vectors = np.frombuffer(data, dtype="<f4").reshape(pf.count, manifest.dim)
    if not np.isfinite(vectors).all():
        raise BundleError(f"non-finite values in matrix ({lemma!r}, {period!r})")
    return EmbeddingMatrix(lemma=lemma, period=period, vectors=vectors)


def validate_bundle(directory: Path | str) -> list[str]:
    """Check every manifest invariant; return one message per violation.

    An empty list means the bundle is structurally sound: sane header fields,
    distinct periods and lemmas, every referenced file present with the exact
    byte length count * dim * 4, and all stored values finite.
    """
    directory = Path(directory)
    manifest = read_manifest(directory)
    violations: list[str] = []

    if manifest.schema_version != SCHEMA_VERSION:
        violations.append(f"schema_version: unsupported value {manifest.schema_version}")
    if manifest.dim < 1:
        violations.append(f"dim: must be >= 1, got {manifest.dim}")
    if manifest.dtype != DTYPE_TAG:
        violations.append(f"dtype: expected {DTYPE_TAG!r}, got {manifest.dtype!r}")
    if not manifest.periods:
        violations.append("periods: empty")
    if len(set(manifest.periods)) != len(manifest.periods):
        violations.append("periods: duplicate period ids")
    seen: set[str] = set()
    for word in manifest.words:
        if word.lemma in seen:
            violations.append(f"word {word.lemma!r}: duplicate lemma")
        seen.add(word.lemma)

    if manifest.dim < 1:
        return violations

    for word in manifest.words:
        for period in manifest.periods:
            if period not in word.periods:
                violations.append(f"word {word.lemma!r}: missing period {period!r}")
        for period, pf in word.periods.items():
            if period not in manifest.periods:
                violations.append(
                    f"word {word.lemma!r} period {period!r}: not a manifest period"
                )
            path = directory / pf.file
            if pf.count < 0:
                violations.append(
                    f"word {word.lemma!r} period {period!r}: negative count"
                )
                continue
            if not path.is_file():
                violations.append(
                    f"word {word.lemma!r} period {period!r}: file missing ({pf.file})"
                )
                continue
            expected = pf.count * manifest.dim * 4
            actual = path.stat().st_size
            if actual != expected:
                violations.append(
                    f"word {word.lemma!r} period {period!r}: file {pf.file} is "
                    f"{actual} bytes, expected {expected}"
                )
                continue
            values = np.frombuffer(path.read_bytes(), dtype="<f4")
            bad = np.flatnonzero(~np.isfinite(values))
            if bad.size:
                row = int(bad[0]) // manifest.dim
                violations.append(
                    f"word {word.lemma!r} period {period!r} row {row}: non-finite value"
                )
    return violations


def sample_usages(matrix: EmbeddingMatrix, cap: int, seed: int) -> EmbeddingMatrix:
    """Cap the usage count by uniform sampling without replacement.

    Matrices at or under the cap pass through unchanged. Sampling is a seeded
    partial Fisher-Yates shuffle over row indices; the kept rows stay in their
    original order, and the same seed always keeps the same rows.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    n = matrix.n
    if n <= cap:
        return matrix
    rng = rng_for(seed)
    indices = np.arange(n)
    for i in range(cap):
        j = i + int(rng.integers(n - i))
        indices[i], indices[j] = indices[j], indices[i]
    keep = np.sort(indices[:cap])
    return EmbeddingMatrix(
        lemma=matrix.lemma, period=matrix.period, vectors=matrix.vectors[keep]
    )
