"""Dump per-occurrence contextual token embeddings into sensedrift bundles."""

from .bundle_writer import write_bundle
from .extract import Encoder, ExtractionError, ExtractionJob, Occurrence, extract, read_occurrences

__version__ = "0.1.0"

__all__ = [
    "Encoder",
    "ExtractionError",
    "ExtractionJob",
    "Occurrence",
    "extract",
    "read_occurrences",
    "write_bundle",
]
