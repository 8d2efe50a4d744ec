"""Quantify diachronic drift of word usage from per-period token embeddings."""

from .bundle import (
    BundleError,
    BundleManifest,
    EmbeddingMatrix,
    build_manifest,
    read_matrix,
    sample_usages,
    validate_bundle,
    write_bundle,
)
from .clustering import (
    AffinityConfig,
    JointClustering,
    KMeansConfig,
    affinity_propagation,
    joint_cluster,
    kmeans,
)
from .evaluation import (
    CorrelationResult,
    GoldRecord,
    evaluate,
    filter_by_agreement,
    load_gold,
    spearman,
)
from .measures import (
    METHODS,
    ChangeScore,
    ScoringError,
    jsd,
    max_square,
    prt,
    rank_words,
    score_word,
    score_word_methods,
    usage_distribution,
)
from .synth import DriftSpec, SenseSpec, analytic_jsd, analytic_ms, generate

__version__ = "0.1.0"

__all__ = [
    "AffinityConfig",
    "BundleError",
    "BundleManifest",
    "ChangeScore",
    "CorrelationResult",
    "DriftSpec",
    "EmbeddingMatrix",
    "GoldRecord",
    "JointClustering",
    "KMeansConfig",
    "METHODS",
    "ScoringError",
    "SenseSpec",
    "affinity_propagation",
    "analytic_jsd",
    "analytic_ms",
    "build_manifest",
    "evaluate",
    "filter_by_agreement",
    "generate",
    "joint_cluster",
    "jsd",
    "kmeans",
    "load_gold",
    "max_square",
    "prt",
    "rank_words",
    "read_matrix",
    "sample_usages",
    "score_word",
    "score_word_methods",
    "spearman",
    "usage_distribution",
    "validate_bundle",
    "write_bundle",
]
