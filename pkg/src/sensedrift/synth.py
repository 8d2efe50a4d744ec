"""Synthetic drift bundles with known ground truth.

Each word is a mixture of isotropic Gaussian senses whose mixture weights
differ between the two periods. Because the planted weights are known, the
divergence a perfect clustering would report is computable in closed form;
those analytic values are the oracles the pipeline is tested against.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import measures
from .bundle import BundleManifest, EmbeddingMatrix, build_manifest, write_bundle
from .seeding import rng_for, stable_hash

DEFAULT_PERIODS = ("earlier", "later")


class SynthSpecError(Exception):
    """Raised for invalid drift specifications."""


@dataclass(frozen=True)
class SenseSpec:
    mean: tuple[float, ...]
    sigma: float

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise SynthSpecError("sigma must be > 0")
        if len(self.mean) < 1:
            raise SynthSpecError("sense mean must have at least one entry")


@dataclass(frozen=True)
class DriftSpec:
    lemma: str
    senses: tuple[SenseSpec, ...]
    weights_earlier: tuple[float, ...]
    weights_later: tuple[float, ...]
    n_per_period: int
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.lemma:
            raise SynthSpecError("lemma must be non-empty")
        if not self.senses:
            raise SynthSpecError("need at least one sense")
        dims = {len(s.mean) for s in self.senses}
        if len(dims) != 1:
            raise SynthSpecError(f"{self.lemma}: sense means differ in dimension")
        for name, weights in (
            ("weights_earlier", self.weights_earlier),
            ("weights_later", self.weights_later),
        ):
            if len(weights) != len(self.senses):
                raise SynthSpecError(f"{self.lemma}: {name} length != number of senses")
            if any(w < 0 for w in weights):
                raise SynthSpecError(f"{self.lemma}: {name} has negative entries")
            if abs(sum(weights) - 1.0) > 1e-9:
                raise SynthSpecError(f"{self.lemma}: {name} must sum to 1")
        if self.n_per_period < 1:
            raise SynthSpecError(f"{self.lemma}: n_per_period must be >= 1")

    @property
    def dim(self) -> int:
        return len(self.senses[0].mean)


def _quota_counts(weights: tuple[float, ...], n: int) -> np.ndarray:
    """Largest-remainder apportionment of n draws over the sense weights."""
    raw = np.asarray(weights, dtype=np.float64) * n
    counts = np.floor(raw).astype(np.int64)
    frac = raw - counts
    leftover = n - int(counts.sum())
    order = np.argsort(-frac, kind="stable")
    counts[order[:leftover]] += 1
    return counts


def _draw_period(spec: DriftSpec, weights: tuple[float, ...], period_index: int) -> np.ndarray:
    # sense counts are exact quotas of the weights rather than categorical
    # draws, so the planted mixture is realized without multinomial noise and
    # the analytic values stay sharp oracles; one generator per
    # (lemma, period); normal draws use numpy's ziggurat
    rng = rng_for(spec.seed, stable_hash(spec.lemma), period_index)
    counts = _quota_counts(weights, spec.n_per_period)
    senses = np.repeat(np.arange(len(spec.senses)), counts)
    rng.shuffle(senses)
    means = np.array([s.mean for s in spec.senses], dtype=np.float64)
    sigmas = np.array([s.sigma for s in spec.senses], dtype=np.float64)
    noise = rng.standard_normal((spec.n_per_period, spec.dim))
    points = means[senses] + sigmas[senses, None] * noise
    return points.astype(np.float32)


def generate(
    spec: DriftSpec, periods: tuple[str, str] = DEFAULT_PERIODS
) -> tuple[EmbeddingMatrix, EmbeddingMatrix]:
    """Sample the two period matrices for one word, bit-reproducible by seed."""
    earlier = EmbeddingMatrix(spec.lemma, periods[0], _draw_period(spec, spec.weights_earlier, 0))
    later = EmbeddingMatrix(spec.lemma, periods[1], _draw_period(spec, spec.weights_later, 1))
    return earlier, later


def analytic_jsd(spec: DriftSpec) -> float:
    """Divergence a perfect clustering would report, from the planted weights."""
    return measures.jsd(spec.weights_earlier, spec.weights_later)


def analytic_ms(spec: DriftSpec) -> float:
    return measures.max_square(spec.weights_earlier, spec.weights_later)


def load_drift_specs(path: Path | str) -> tuple[tuple[str, str], list[DriftSpec]]:
    """Parse a synth spec file (JSON).

    Schema::

        {
          "periods": ["earlier", "later"],      # optional, exactly two
          "seed": 42,                           # optional, default 0
          "words": [
            {"lemma": "w1",
             "n_per_period": 500,
             "senses": [{"mean": [0, 0], "sigma": 1.0}, ...],
             "weights_earlier": [0.8, 0.2],
             "weights_later": [0.2, 0.8],
             "seed": 7}                         # optional per-word override
          ]
        }
    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SynthSpecError(f"unreadable spec file: {exc}") from exc
    periods = tuple(payload.get("periods", DEFAULT_PERIODS))
    if len(periods) != 2 or periods[0] == periods[1]:
        raise SynthSpecError("periods must be two distinct identifiers")
    base_seed = int(payload.get("seed", 0))
    words = payload.get("words")
    if not isinstance(words, list) or not words:
        raise SynthSpecError("spec needs a non-empty 'words' list")
    specs = []
    lemmas: set[str] = set()
    try:
        for w in words:
            lemma = w["lemma"]
            if lemma in lemmas:
                raise SynthSpecError(f"duplicate lemma {lemma!r} in spec")
            lemmas.add(lemma)
            specs.append(
                DriftSpec(
                    lemma=lemma,
                    senses=tuple(
                        SenseSpec(mean=tuple(s["mean"]), sigma=float(s["sigma"]))
                        for s in w["senses"]
                    ),
                    weights_earlier=tuple(w["weights_earlier"]),
                    weights_later=tuple(w["weights_later"]),
                    n_per_period=int(w["n_per_period"]),
                    seed=int(w.get("seed", stable_hash(str(base_seed), lemma))),
                )
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise SynthSpecError(f"bad word entry in spec: {exc}") from exc
    dims = {s.dim for s in specs}
    if len(dims) != 1:
        raise SynthSpecError("all words must share one embedding dimension")
    return (periods[0], periods[1]), specs


def gold_tsv_for(specs: list[DriftSpec]) -> str:
    """Gold-style TSV where the analytic divergence plays the human measures.

    delta_later carries the analytic divergence directly; compare maps it
    into the 1..4 relatedness scale (4 - 3 * divergence), so stronger change
    means a lower compare value, matching the real datasets' convention.
    """
    lines = ["\t".join(("word", "delta_later", "compare", "agreement", "analytic_jsd", "analytic_ms"))]
    for spec in specs:
        a_jsd = analytic_jsd(spec)
        a_ms = analytic_ms(spec)
        compare = 4.0 - 3.0 * a_jsd
        lines.append(
            "\t".join(
                (
                    spec.lemma,
                    f"{a_jsd:.9f}",
                    f"{compare:.9f}",
                    "1.000000000",
                    f"{a_jsd:.9f}",
                    f"{a_ms:.9f}",
                )
            )
        )
    return "\n".join(lines) + "\n"


def build_synthetic_bundle(
    specs: list[DriftSpec],
    periods: tuple[str, str],
    directory: Path | str,
) -> BundleManifest:
    """Generate all words, write the bundle, and return its manifest."""
    matrices: list[EmbeddingMatrix] = []
    for spec in specs:
        matrices.extend(generate(spec, periods))
    manifest = build_manifest(matrices, periods=list(periods))
    write_bundle(manifest, matrices, directory)
    return manifest
