"""Dense-vector kernel: prototype means, cosine distance, pairwise similarities.

Storage upstream is float32; everything here computes in float64 because the
clustering and divergence values downstream are tolerance-sensitive.
"""
from __future__ import annotations

import numpy as np


def mean_vector(rows: np.ndarray) -> np.ndarray:
    """Column-wise mean of an n x d matrix, the period prototype of a word."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError("expected an n x d matrix")
    if rows.shape[0] == 0:
        raise ValueError("no usages")
    return rows.mean(axis=0)


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), clamped to [0, 2] against round-off.

    Zero-norm inputs are rejected: a zero prototype signals corrupt data
    upstream, not a meaningful direction.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError("vectors differ in dimension")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("degenerate prototype (zero norm)")
    value = 1.0 - float(np.dot(u, v) / (nu * nv))
    return min(max(value, 0.0), 2.0)


def negative_squared_euclidean_similarities(points: np.ndarray) -> np.ndarray:
    """Pairwise s[i, j] = -||x_i - x_j||^2, the affinity-propagation input.

    The diagonal is left at 0; the clustering code overwrites it with the
    preference value.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] < 2:
        raise ValueError("need at least 2 points")
    sq = np.einsum("ij,ij->i", points, points)
    d2 = sq[:, None] + sq[None, :] - 2.0 * points @ points.T
    np.maximum(d2, 0.0, out=d2)
    # exact symmetry: the formula above is symmetric analytically but not in floats
    d2 = 0.5 * (d2 + d2.T)
    np.fill_diagonal(d2, 0.0)
    return -d2
