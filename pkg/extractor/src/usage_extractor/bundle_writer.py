"""Standalone writer for the sensedrift bundle format.

The format is deliberately re-implemented here rather than imported: the two
tools interoperate only through the published on-disk contract, so this
module is the extractor's half of that contract. Layout: a `manifest.json`
plus one raw row-major float32 little-endian file per (word, period) at
`<percent-encoded lemma>/<period>.f32`, whose byte length is
count * dim * 4.
"""
from __future__ import annotations

import json
import urllib.parse
from pathlib import Path
from typing import Mapping

import numpy as np

MANIFEST_NAME = "manifest.json"
SCHEMA_VERSION = 1
DTYPE_TAG = "f32le"


def matrix_relpath(lemma: str, period: str) -> str:
    return f"{urllib.parse.quote(lemma, safe='')}/{period}.f32"


def write_bundle(
    directory: Path | str,
    periods: list[str],
    matrices: Mapping[tuple[str, str], np.ndarray],
    dim: int,
) -> None:
    """Write one bundle; `matrices` maps (lemma, period) to an (n, dim) array.

    Every lemma gets an entry for every declared period; pairs absent from
    `matrices` are recorded with count 0 and an empty file.
    """
    directory = Path(directory)
    lemmas: list[str] = []
    for lemma, period in matrices:
        if period not in periods:
            raise ValueError(f"period {period!r} not in declared periods {periods}")
        if lemma not in lemmas:
            lemmas.append(lemma)

    words = []
    directory.mkdir(parents=True, exist_ok=True)
    for lemma in lemmas:
        entry: dict[str, dict] = {}
        for period in periods:
            rows = matrices.get((lemma, period))
            if rows is None:
                rows = np.empty((0, dim), dtype=np.float32)
            rows = np.ascontiguousarray(rows, dtype="<f4")
            if rows.ndim != 2 or rows.shape[1] != dim:
                raise ValueError(
                    f"({lemma!r}, {period!r}): expected (n, {dim}) rows, got {rows.shape}"
                )
            if rows.size and not np.isfinite(rows).all():
                raise ValueError(f"({lemma!r}, {period!r}): non-finite embedding values")
            relpath = matrix_relpath(lemma, period)
            target = directory / relpath
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(rows.tobytes())
            entry[period] = {"file": relpath, "count": int(rows.shape[0])}
        words.append({"lemma": lemma, "periods": entry})

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "dim": dim,
        "dtype": DTYPE_TAG,
        "periods": list(periods),
        "words": words,
    }
    (directory / MANIFEST_NAME).write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2), encoding="utf-8"
    )
