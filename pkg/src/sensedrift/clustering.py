"""Joint clustering of a word's usages pooled from two time periods.

Two clusterers are provided: Lloyd k-means with k-means++ seeding and
restarts, and affinity propagation on negative squared euclidean
similarities. Both are deterministic given their config, which is what makes
whole-pipeline runs reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .bundle import EmbeddingMatrix
from .numerics import negative_squared_euclidean_similarities
from .seeding import rng_for

KMEANS = "kmeans"
AFFINITY = "affinity"


@dataclass(frozen=True)
class KMeansConfig:
    k: int = 5
    restarts: int = 10
    max_iterations: int = 300
    tolerance: float = 1e-10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")


@dataclass(frozen=True)
class AffinityConfig:
    # defaults follow the original apcluster implementation
    damping: float = 0.9
    preference: Union[str, float] = "median"
    max_iterations: int = 1000
    convergence_iterations: int = 50

    def __post_init__(self) -> None:
        if not 0.5 <= self.damping < 1.0:
            raise ValueError("damping must be in [0.5, 1)")
        if isinstance(self.preference, str) and self.preference != "median":
            raise ValueError("preference must be 'median' or a number")


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iterations: int
    inertia_history: np.ndarray  # inertia after each assignment step, non-increasing


@dataclass(frozen=True)
class APResult:
    labels: np.ndarray
    exemplar_indices: np.ndarray
    converged: bool
    n_iterations: int


@dataclass(frozen=True)
class JointClustering:
    """Per-usage labels of one word, split back by period.

    Labels are a contiguous 0..k-1 range and every label occurs at least once
    across the two periods combined.
    """

    labels_earlier: np.ndarray
    labels_later: np.ndarray
    k: int
    method: str
    converged: bool = True


def _squared_distances(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        np.einsum("ij,ij->i", points, points)[:, None]
        + np.einsum("ij,ij->i", centers, centers)[None, :]
        - 2.0 * points @ centers.T
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    centers[0] = points[rng.integers(n)]
    d2 = _squared_distances(points, centers[:1]).ravel()
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            # D^2 sampling via the cumulative distribution
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total))
            idx = min(idx, n - 1)
        centers[j] = points[idx]
        np.minimum(d2, _squared_distances(points, centers[j : j + 1]).ravel(), out=d2)
    return centers


def _lloyd(points: np.ndarray, centers: np.ndarray, config: KMeansConfig):
    n, k = points.shape[0], centers.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    iterations = 0
    for _ in range(config.max_iterations):
        iterations += 1
        d2 = _squared_distances(points, centers)
        new_labels = d2.argmin(axis=1)
        point_cost = d2[np.arange(n), new_labels]
        history.append(float(point_cost.sum()))

        new_centers = centers.copy()
        counts = np.bincount(new_labels, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                new_centers[j] = points[new_labels == j].mean(axis=0)
        # empty-cluster repair: reseed at the point farthest from its centroid,
        # so k stays constant; futile when every point already sits on a
        # centroid (duplicate inputs), in which case the cluster stays empty
        # and the joint relabeling collapses k
        repaired = False
        claimed: set[int] = set()
        order = np.argsort(point_cost)[::-1]
        for j in np.flatnonzero(counts == 0):
            far = next(
                (int(i) for i in order if int(i) not in claimed and point_cost[i] > 0.0),
                None,
            )
            if far is None:
                break
            claimed.add(far)
            new_centers[j] = points[far]
            repaired = True

        shift = float(((new_centers - centers) ** 2).sum())
        unchanged = np.array_equal(new_labels, labels)
        centers, labels = new_centers, new_labels
        if not repaired and (unchanged or shift <= config.tolerance):
            break

    d2 = _squared_distances(points, centers)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels, centers, inertia, iterations, np.asarray(history)


def kmeans(points: np.ndarray, config: KMeansConfig) -> KMeansResult:
    """Best of `config.restarts` k-means++/Lloyd runs, by inertia.

    Restart r draws from a generator derived from (config.seed, r), so adding
    restarts never changes the earlier runs and the result with more restarts
    is never worse.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("expected an n x d matrix")
    n = points.shape[0]
    if n < config.k:
        raise ValueError(f"too few usages: {n} points for k={config.k}")

    best: KMeansResult | None = None
    for r in range(config.restarts):
        rng = rng_for(config.seed, r)
        centers = _kmeans_pp_init(points, config.k, rng)
        labels, centers, inertia, iterations, history = _lloyd(points, centers, config)
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels, centers, inertia, iterations, history)
    assert best is not None
    return best


def affinity_propagation(sims: np.ndarray, config: AffinityConfig) -> APResult:
    """Responsibility/availability message passing over a similarity matrix.

    `sims` is the full pairwise similarity matrix; its diagonal is replaced by
    the preference (the median of off-diagonal similarities unless the config
    carries an explicit value). Convergence means the exemplar set was stable
    for `convergence_iterations` consecutive sweeps; if the loop runs out the
    current assignment is returned with `converged=False`.

    No degeneracy noise is injected (the classical trick); instead, if message
    passing ends with an empty exemplar set, which happens for exactly
    symmetric inputs such as duplicate points, the point with the highest
    exemplar evidence becomes the single exemplar.
    """
    S = np.array(sims, dtype=np.float64)
    n = S.shape[0]
    if S.ndim != 2 or S.shape[1] != n or n < 2:
        raise ValueError("similarity matrix must be square with n >= 2")

    if isinstance(config.preference, str):
        off = ~np.eye(n, dtype=bool)
        preference = float(np.median(S[off]))
    else:
        preference = float(config.preference)
    np.fill_diagonal(S, preference)

    # exactly symmetric inputs (duplicate points) settle on evidence 0 up to
    # round-off; the tolerance keeps them out of the exemplar set
    scale = max(1.0, float(np.abs(S).max()))
    evidence_tol = 1e-9 * scale
    fixed_point_tol = 1e-12 * scale

    A = np.zeros((n, n))
    R = np.zeros((n, n))
    work = np.empty((n, n))
    rows = np.arange(n)
    damping = config.damping
    blend = 1.0 - damping
    convits = config.convergence_iterations
    exemplar_log = np.zeros((n, convits), dtype=bool)
    evidence = np.zeros(n)
    converged = False
    iterations = 0

    for it in range(config.max_iterations):
        iterations = it + 1
        # responsibilities: r(i,k) = s(i,k) - max_{k' != k} (a(i,k') + s(i,k'))
        np.add(A, S, out=work)
        top = work.argmax(axis=1)
        first = work[rows, top].copy()
        work[rows, top] = -np.inf
        second = work.max(axis=1)
        np.subtract(S, first[:, None], out=work)
        work[rows, top] = S[rows, top] - second
        R *= damping
        work *= blend
        R += work
        # availabilities: a(i,k) = min(0, r(k,k) + sum_{i' not in {i,k}} max(0, r(i',k)))
        np.maximum(R, 0.0, out=work)
        work[rows, rows] = R[rows, rows]
        colsum = work.sum(axis=0)
        np.subtract(colsum[None, :], work, out=work)
        diag = work[rows, rows].copy()
        np.minimum(work, 0.0, out=work)
        work[rows, rows] = diag
        A *= damping
        work *= blend
        A += work

        previous_evidence = evidence
        evidence = A[rows, rows] + R[rows, rows]
        exemplars = evidence > evidence_tol
        exemplar_log[:, it % convits] = exemplars
        if it >= convits - 1:
            stable_counts = exemplar_log.sum(axis=1)
            stable = np.all((stable_counts == convits) | (stable_counts == 0))
            if stable and exemplars.any():
                converged = True
                break
            # degenerate ties never grow an exemplar set; stop once the
            # self-evidence has reached a fixed point
            if np.abs(evidence - previous_evidence).max() < fixed_point_tol:
                converged = True
                break

    exemplar_indices = np.flatnonzero(evidence > evidence_tol)
    if exemplar_indices.size == 0:
        exemplar_indices = np.array([int(evidence.argmax())])

    labels = np.argmax(S[:, exemplar_indices], axis=1)
    labels[exemplar_indices] = np.arange(exemplar_indices.size)
    return APResult(
        labels=labels,
        exemplar_indices=exemplar_indices,
        converged=converged,
        n_iterations=iterations,
    )


def _relabel_contiguous(labels: np.ndarray) -> tuple[np.ndarray, int]:
    mapping: dict[int, int] = {}
    out = np.empty(labels.shape[0], dtype=np.int64)
    for i, lab in enumerate(labels):
        lab = int(lab)
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out, len(mapping)


def joint_cluster(
    m_earlier: EmbeddingMatrix,
    m_later: EmbeddingMatrix,
    method: str,
    config: Union[KMeansConfig, AffinityConfig, None] = None,
) -> JointClustering:
    """Pool both periods' usages, cluster once, split the labels back.

    Labels are renumbered to first-appearance order so they form a contiguous
    0..k-1 range with every label used.
    """
    if m_earlier.n == 0:
        raise ValueError(f"word absent in period {m_earlier.period!r}")
    if m_later.n == 0:
        raise ValueError(f"word absent in period {m_later.period!r}")
    pooled = np.vstack(
        [
            np.asarray(m_earlier.vectors, dtype=np.float64),
            np.asarray(m_later.vectors, dtype=np.float64),
        ]
    )
    converged = True
    if method == KMEANS:
        kconf = config if isinstance(config, KMeansConfig) else KMeansConfig()
        labels = kmeans(pooled, kconf).labels
    elif method == AFFINITY:
        aconf = config if isinstance(config, AffinityConfig) else AffinityConfig()
        sims = negative_squared_euclidean_similarities(pooled)
        result = affinity_propagation(sims, aconf)
        labels = result.labels
        converged = result.converged
    else:
        raise ValueError(f"unknown clustering method {method!r}")

    labels, k = _relabel_contiguous(labels)
    return JointClustering(
        labels_earlier=labels[: m_earlier.n],
        labels_later=labels[m_earlier.n :],
        k=k,
        method=method,
        converged=converged,
    )


def with_seed(config: KMeansConfig, seed: int) -> KMeansConfig:
    return replace(config, seed=seed)
