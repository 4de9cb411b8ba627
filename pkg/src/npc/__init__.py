"""Neighbors Progressive Competition (NPC) for imbalanced binary data."""

__version__ = "0.1.0"

from .classifier import (  # noqa: E402
    KNNBaselineClassifier,
    NPCClassifier,
    NpcModel,
    Prediction,
    classify,
    classify_batch,
    knn_baseline,
)
from .dataset import Dataset, MinMaxNormalizer, parse_csv, parse_keel, stratified_folds  # noqa: E402
from .evaluation import friedman_holm, geometric_mean, read_score_table  # noqa: E402
from .grading import ImbalanceStats, build_grade_table, compute_imbalance  # noqa: E402

__all__ = [
    "Dataset",
    "ImbalanceStats",
    "KNNBaselineClassifier",
    "MinMaxNormalizer",
    "NPCClassifier",
    "NpcModel",
    "Prediction",
    "build_grade_table",
    "classify",
    "classify_batch",
    "compute_imbalance",
    "friedman_holm",
    "geometric_mean",
    "knn_baseline",
    "parse_csv",
    "parse_keel",
    "read_score_table",
    "stratified_folds",
]
