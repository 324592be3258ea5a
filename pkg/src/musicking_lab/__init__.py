"""Toolkit for validating, synchronizing, and analyzing multimodal
music-performance session recordings: skin conductance, four EEG channels,
2-D skeleton keypoints, and self-reported flow, aligned to a musical
beat/bar grid of a shared backing track.
"""

from . import analytics, cluster, errors, ingest, quality, stats, svg, timing
from .model import (
    BarFeatureMatrix,
    BeatGrid,
    Keypoint,
    QualityReport,
    Record,
    Session,
    column_values,
    validate_record,
    validate_session,
)

__version__ = "0.1.0"

__all__ = [
    "analytics",
    "cluster",
    "errors",
    "ingest",
    "quality",
    "stats",
    "svg",
    "timing",
    "BarFeatureMatrix",
    "BeatGrid",
    "Keypoint",
    "QualityReport",
    "Record",
    "Session",
    "column_values",
    "validate_record",
    "validate_session",
    "__version__",
]
