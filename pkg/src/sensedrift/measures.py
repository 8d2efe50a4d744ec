"""The four change measures: prototype distance and cluster-distribution shifts.

prt compares the two period prototypes by cosine distance. The clustering
measures pool both periods' usages, cluster them jointly, read off the
per-period distribution over clusters, and compare the two distributions with
Jensen-Shannon divergence or the maximum squared difference. Divergences use
base-2 logs so every clustering score lands in [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import bundle as bundle_io
from .bundle import DEFAULT_USAGE_CAP, EmbeddingMatrix
from .clustering import (
    AFFINITY,
    KMEANS,
    AffinityConfig,
    JointClustering,
    KMeansConfig,
    joint_cluster,
    with_seed,
)
from .numerics import cosine_distance, mean_vector
from .seeding import derive_seed

PRT = "prt"
AFFINITY_JSD = "affinity-jsd"
KMEANS_JSD = "kmeans-jsd"
KMEANS_MS = "kmeans-ms"
METHODS = (PRT, AFFINITY_JSD, KMEANS_JSD, KMEANS_MS)

SCORE_HEADER = ("lemma", "method", "earlier", "later", "value")


class ScoringError(Exception):
    """A word could not be scored; the message carries the lemma context."""


@dataclass(frozen=True)
class ChangeScore:
    lemma: str
    method: str
    period_pair: tuple[str, str]
    value: float


def prt(m_earlier: EmbeddingMatrix, m_later: EmbeddingMatrix) -> ChangeScore:
    """Cosine distance between the two period prototypes (mean embeddings)."""
    for m in (m_earlier, m_later):
        if m.n == 0:
            raise ValueError(f"word absent in period {m.period!r}")
    value = cosine_distance(mean_vector(m_earlier.vectors), mean_vector(m_later.vectors))
    return ChangeScore(
        lemma=m_earlier.lemma,
        method=PRT,
        period_pair=(m_earlier.period, m_later.period),
        value=value,
    )


def usage_distribution(labels: Sequence[int] | np.ndarray, k: int) -> np.ndarray:
    """Fraction of usages per cluster label, a length-k probability vector."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("word absent in period (no labels)")
    if k < 1:
        raise ValueError("k must be >= 1")
    if labels.min() < 0 or labels.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    return counts / labels.size


def jsd(p: Sequence[float] | np.ndarray, q: Sequence[float] | np.ndarray) -> float:
    """Jensen-Shannon divergence (square-root form, base-2 logs), in [0, 1].

    Zero-mass clusters are fine on either side: 0 * log 0 is taken as 0, and
    the mixture is positive wherever p or q is.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("distributions differ in length")
    m = 0.5 * (p + q)
    kl_p = np.where(p > 0.0, p * (np.log2(np.maximum(p, 1e-300)) - np.log2(np.maximum(m, 1e-300))), 0.0)
    kl_q = np.where(q > 0.0, q * (np.log2(np.maximum(q, 1e-300)) - np.log2(np.maximum(m, 1e-300))), 0.0)
    divergence = 0.5 * (kl_p.sum() + kl_q.sum())
    return math.sqrt(max(float(divergence), 0.0))


def max_square(p: Sequence[float] | np.ndarray, q: Sequence[float] | np.ndarray) -> float:
    """Largest squared per-cluster difference between the two distributions."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("distributions differ in length")
    return float(((p - q) ** 2).max())


def distribution_pair(clustering: JointClustering) -> tuple[np.ndarray, np.ndarray]:
    p = usage_distribution(clustering.labels_earlier, clustering.k)
    q = usage_distribution(clustering.labels_later, clustering.k)
    return p, q


def _normalize_rows(m: EmbeddingMatrix) -> EmbeddingMatrix:
    vectors = np.asarray(m.vectors, dtype=np.float64)
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("zero-norm usage vector cannot be normalized")
    return EmbeddingMatrix(m.lemma, m.period, vectors / norms[:, None])


def score_word_methods(
    bundle_dir: Path | str,
    lemma: str,
    earlier: str,
    later: str,
    methods: Sequence[str],
    *,
    cap: int = DEFAULT_USAGE_CAP,
    seed: int = 0,
    kmeans_config: KMeansConfig | None = None,
    affinity_config: AffinityConfig | None = None,
    normalize: bool = False,
    trace: Callable[[str], None] | None = None,
) -> list[ChangeScore]:
    """Score one word with several methods, sharing work where possible.

    The k-means JSD and MS scores are computed from the same joint clustering
    run, so the two columns never diverge because of seeding. The usage cap is
    applied to the clustering methods only; prt averages over all usages.
    Everything is deterministic given (bundle, seed).
    """
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
    note = trace or (lambda line: None)
    try:
        m_earlier = bundle_io.read_matrix(bundle_dir, lemma, earlier)
        m_later = bundle_io.read_matrix(bundle_dir, lemma, later)

        scores: dict[str, ChangeScore] = {}
        if PRT in methods:
            scores[PRT] = prt(m_earlier, m_later)

        cluster_methods = [m for m in methods if m != PRT]
        if cluster_methods:
            s_earlier = bundle_io.sample_usages(
                m_earlier, cap, derive_seed(seed, lemma, earlier, "sample")
            )
            s_later = bundle_io.sample_usages(
                m_later, cap, derive_seed(seed, lemma, later, "sample")
            )
            for before, after in ((m_earlier, s_earlier), (m_later, s_later)):
                if after.n < before.n:
                    note(
                        f"[sample] lemma={lemma} period={after.period} "
                        f"usages={before.n} kept={after.n}"
                    )
            if normalize:
                s_earlier = _normalize_rows(s_earlier)
                s_later = _normalize_rows(s_later)

            pair = (earlier, later)
            if KMEANS_JSD in methods or KMEANS_MS in methods:
                kconf = with_seed(
                    kmeans_config or KMeansConfig(), derive_seed(seed, lemma, "kmeans")
                )
                jc = joint_cluster(s_earlier, s_later, KMEANS, kconf)
                note(
                    f"[cluster] lemma={lemma} method=kmeans "
                    f"n_earlier={s_earlier.n} n_later={s_later.n} k={jc.k}"
                )
                p, q = distribution_pair(jc)
                scores[KMEANS_JSD] = ChangeScore(lemma, KMEANS_JSD, pair, jsd(p, q))
                scores[KMEANS_MS] = ChangeScore(lemma, KMEANS_MS, pair, max_square(p, q))
            if AFFINITY_JSD in methods:
                jc = joint_cluster(
                    s_earlier, s_later, AFFINITY, affinity_config or AffinityConfig()
                )
                note(
                    f"[cluster] lemma={lemma} method=affinity "
                    f"n_earlier={s_earlier.n} n_later={s_later.n} k={jc.k}"
                    + ("" if jc.converged else " converged=false")
                )
                p, q = distribution_pair(jc)
                scores[AFFINITY_JSD] = ChangeScore(lemma, AFFINITY_JSD, pair, jsd(p, q))

        return [scores[m] for m in methods]
    except (bundle_io.BundleError, ValueError) as exc:
        raise ScoringError(f"{lemma}: {exc}") from exc


def score_word(
    bundle_dir: Path | str,
    lemma: str,
    earlier: str,
    later: str,
    method: str,
    **kwargs,
) -> ChangeScore:
    """Score one word with one method; see score_word_methods."""
    return score_word_methods(bundle_dir, lemma, earlier, later, [method], **kwargs)[0]


def rank_words(scores: Sequence[ChangeScore]) -> list[ChangeScore]:
    """Order scores by descending change; ties break lexicographically by lemma."""
    if not scores:
        return []
    methods = {s.method for s in scores}
    pairs = {s.period_pair for s in scores}
    if len(methods) > 1:
        raise ValueError(f"mixed methods in ranking: {sorted(methods)}")
    if len(pairs) > 1:
        raise ValueError(f"mixed period pairs in ranking: {sorted(pairs)}")
    return sorted(scores, key=lambda s: (-s.value, s.lemma))


def scores_to_tsv(scores: Sequence[ChangeScore], *, ranked: bool = False) -> str:
    """Tab-separated score rows with a header; values carry 9 decimal digits."""
    header = (("rank",) + SCORE_HEADER) if ranked else SCORE_HEADER
    lines = ["\t".join(header)]
    for i, s in enumerate(scores, start=1):
        row = (s.lemma, s.method, s.period_pair[0], s.period_pair[1], f"{s.value:.9f}")
        if ranked:
            row = (str(i),) + row
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def scores_from_tsv(text: str) -> list[ChangeScore]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty score file")
    header = lines[0].split("\t")
    if header[:5] != list(SCORE_HEADER) and header[:6] != ["rank", *SCORE_HEADER]:
        raise ValueError(f"unexpected score header: {header}")
    offset = 1 if header[0] == "rank" else 0
    out = []
    for line in lines[1:]:
        cells = line.split("\t")
        lemma, method, earlier, later, value = cells[offset : offset + 5]
        out.append(ChangeScore(lemma, method, (earlier, later), float(value)))
    return out
