"""Shared test utilities: bundle builders and planted-blob generators."""
import numpy as np

from sensedrift.bundle import EmbeddingMatrix, build_manifest, write_bundle


def make_matrix(lemma, period, rows, dtype=np.float32):
    return EmbeddingMatrix(lemma, period, np.asarray(rows, dtype=dtype))


def write_test_bundle(directory, matrices, periods, dim=None):
    manifest = build_manifest(matrices, periods=list(periods), dim=dim)
    write_bundle(manifest, matrices, directory)
    return manifest


def two_blobs(n_a, n_b, separation=10.0, dim=3, seed=0):
    """Two unit-noise gaussian blobs with planted labels."""
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 1.0, (n_a, dim))
    b = rng.normal(0.0, 1.0, (n_b, dim))
    b[:, 0] += separation
    points = np.vstack([a, b])
    labels = np.array([0] * n_a + [1] * n_b)
    return points, labels
