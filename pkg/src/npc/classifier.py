"""Neighbors Progressive Competition classifier and a plain k-NN baseline."""

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets, type_of_target
from sklearn.utils.validation import check_is_fitted, validate_data

from .dataset import NormalizationParams, apply_minmax, fit_minmax
from .grading import (
    GradeTable,
    ImbalanceStats,
    build_grade_table,
    compute_imbalance,
    winning_threshold,
)
from .neighbors import check_query, euclidean, full_order, neighbor_blocks

MODEL_FORMAT = "npc-model/1"


@dataclass(frozen=True)
class Prediction:
    label: int
    stop_rank: int
    final_score: float
    decided_by: str  # "threshold" or "fallback"


@dataclass(frozen=True, eq=False)
class NpcModel:
    """Everything needed to classify: training points, grades and threshold.

    ``features`` are stored already normalised when ``normalization`` is
    set; queries are normalised on the way in.
    """

    features: np.ndarray
    labels: np.ndarray
    stats: ImbalanceStats
    grades: GradeTable = field(repr=False)
    threshold: float
    normalization: NormalizationParams | None = None
    metric: object = field(default=euclidean, repr=False)

    @classmethod
    def train(cls, features, labels, normalize="minmax", metric=euclidean):
        features = np.array(features, dtype=np.float64)
        labels = np.array(labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] != labels.shape[0]:
            raise ValueError("features must be (n, d) with one label per row")
        stats = compute_imbalance(labels)
        params = None
        if normalize == "minmax":
            params = fit_minmax(features)
            features = apply_minmax(params, features)
        elif normalize not in (None, "none"):
            raise ValueError(f"unknown normalization {normalize!r}")
        features.flags.writeable = False
        labels.flags.writeable = False
        return cls(
            features=features,
            labels=labels,
            stats=stats,
            grades=build_grade_table(stats),
            threshold=winning_threshold(stats),
            normalization=params,
            metric=metric,
        )

    @property
    def n_features(self):
        return self.features.shape[1]

    def distances(self, query):
        query = check_query(query, self.n_features)
        if self.normalization is not None:
            query = apply_minmax(self.normalization, query)
        return self.metric(self.features, query)

    def to_json(self) -> str:
        doc = {
            "format": MODEL_FORMAT,
            "n_min": self.stats.n_min,
            "n_maj": self.stats.n_maj,
            "features": self.features.tolist(),
            "labels": self.labels.tolist(),
            "normalization": None
            if self.normalization is None
            else {
                "minimum": self.normalization.minimum.tolist(),
                "maximum": self.normalization.maximum.tolist(),
            },
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text, metric=euclidean):
        doc = json.loads(text)
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format {doc.get('format')!r}")
        features = np.array(doc["features"], dtype=np.float64)
        labels = np.array(doc["labels"], dtype=np.int64)
        stats = compute_imbalance(labels)
        if (stats.n_min, stats.n_maj) != (doc["n_min"], doc["n_maj"]):
            raise ValueError("stored class counts do not match labels")
        norm = doc["normalization"]
        params = None
        if norm is not None:
            params = NormalizationParams(
                np.array(norm["minimum"], dtype=np.float64),
                np.array(norm["maximum"], dtype=np.float64),
            )
        features.flags.writeable = False
        labels.flags.writeable = False
        return cls(
            features, labels, stats, build_grade_table(stats),
            winning_threshold(stats), params, metric,
        )


def _fallback(model, total):
    # no prefix crossed the threshold: sign of the full sum, zero -> minority
    return Prediction(int(total >= 0), model.stats.n_all, float(total), "fallback")


def classify(model: NpcModel, query) -> Prediction:
    """Accumulate grades nearest-first and stop at the first |sum| > threshold."""
    distances = model.distances(query)
    total = 0.0
    seen = 0
    for block in neighbor_blocks(distances):
        ranks = np.arange(seen + 1, seen + block.size + 1)
        grades = model.grades.lookup(ranks, model.labels[block])
        running = np.cumsum(np.concatenate(([total], grades)))[1:]
        crossed = np.flatnonzero(np.abs(running) > model.threshold)
        if crossed.size:
            i = crossed[0]
            score = float(running[i])
            return Prediction(int(score > 0), seen + int(i) + 1, score, "threshold")
        total = running[-1]
        seen += block.size
    return _fallback(model, total)


def classify_reference(model: NpcModel, query) -> Prediction:
    """Same decision via a full sort and a materialised score vector."""
    distances = model.distances(query)
    order = full_order(distances)
    grades = model.grades.lookup(np.arange(1, order.size + 1), model.labels[order])
    scores = np.cumsum(grades)
    crossed = np.flatnonzero(np.abs(scores) > model.threshold)
    if crossed.size:
        i = crossed[0]
        return Prediction(int(scores[i] > 0), int(i) + 1, float(scores[i]), "threshold")
    return _fallback(model, scores[-1])


def classify_batch(model: NpcModel, queries) -> list:
    queries = np.asarray(queries, dtype=np.float64)
    if queries.size == 0:
        return []
    if queries.ndim != 2:
        raise ValueError("queries must be an (m, d) matrix")
    out = []
    for i, query in enumerate(queries):
        try:
            out.append(classify(model, query))
        except ValueError as exc:
            raise ValueError(f"query {i}: {exc}") from exc
    return out


def knn_baseline(training, query, k, metric=euclidean) -> int:
    """Unweighted vote of the ``k`` nearest rows of a labelled ``Dataset``.

    A tied vote goes to label 1.
    """
    return _knn_vote(training.features, training.labels, query, k, metric)


def _knn_vote(features, labels, query, k, metric=euclidean):
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if not 1 <= k <= features.shape[0]:
        raise ValueError(f"k={k} outside 1..{features.shape[0]}")
    distances = metric(features, check_query(query, features.shape[1]))
    nearest = []
    for block in neighbor_blocks(distances, first_block=k):
        nearest.extend(block[: k - len(nearest)])
        if len(nearest) == k:
            break
    positives = int(np.count_nonzero(labels[nearest] == 1))
    return int(2 * positives >= k)


# --- scikit-learn estimators -------------------------------------------


def _binary_classes(y):
    check_classification_targets(y)
    classes = np.unique(y)
    if len(classes) != 2 or type_of_target(y) != "binary":
        raise ValueError(
            f"Only binary classification is supported, got {len(classes)} class(es)"
        )
    if set(classes.tolist()) == {0, 1}:
        positive = 1
    else:
        counts = [np.count_nonzero(y == c) for c in classes]
        positive = classes[0] if counts[0] < counts[1] else classes[1]
    return classes, positive


class _BinaryNeighborsMixin:
    def _encode(self, X, y):
        X, y = validate_data(self, X, y)
        self.classes_, self.positive_class_ = _binary_classes(y)
        return X, (y == self.positive_class_).astype(np.int64)

    def _decode(self, labels):
        negative = self.classes_[self.classes_ != self.positive_class_][0]
        return np.where(np.asarray(labels) == 1, self.positive_class_, negative)

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.classifier_tags.multi_class = False
        return tags

    def _check_X(self, X):
        return validate_data(self, X, reset=False)


class NPCClassifier(_BinaryNeighborsMixin, ClassifierMixin, BaseEstimator):
    """Neighbors Progressive Competition for binary imbalanced data.

    Training neighbours are visited nearest first; each contributes a
    precomputed grade that depends on its rank and class. The first time
    the running sum leaves ``[-0.7 * IR, 0.7 * IR]`` its sign decides the
    class. No neighbour count needs tuning.

    Parameters
    ----------
    normalize : {"minmax", None}, default="minmax"
        Feature scaling fitted on the training data and applied to queries.
    metric : callable, default=None
        ``metric(train, query) -> distances``; Euclidean when ``None``.

    Attributes
    ----------
    model_ : NpcModel
    classes_ : ndarray of shape (2,)
    positive_class_ :
        The class treated as minority; ``1`` for 0/1 targets, otherwise
        the rarer class.
    """

    def __init__(self, normalize="minmax", metric=None):
        self.normalize = normalize
        self.metric = metric

    def fit(self, X, y):
        X, labels = self._encode(X, y)
        self.model_ = NpcModel.train(
            X, labels, normalize=self.normalize, metric=self.metric or euclidean
        )
        return self

    def explain(self, X) -> list:
        """Full :class:`Prediction` records (stop rank, score, how decided)."""
        check_is_fitted(self, "model_")
        return classify_batch(self.model_, self._check_X(X))

    def decision_function(self, X):
        return np.array([p.final_score for p in self.explain(X)])

    def predict(self, X):
        return self._decode([p.label for p in self.explain(X)])


class KNNBaselineClassifier(_BinaryNeighborsMixin, ClassifierMixin, BaseEstimator):
    """Unweighted k-NN with the same ranking and scaling as :class:`NPCClassifier`."""

    def __init__(self, n_neighbors=3, normalize="minmax"):
        self.n_neighbors = n_neighbors
        self.normalize = normalize

    def fit(self, X, y):
        X, labels = self._encode(X, y)
        self.params_ = fit_minmax(X) if self.normalize == "minmax" else None
        self.features_ = X if self.params_ is None else apply_minmax(self.params_, X)
        self.labels_ = labels
        return self

    def predict(self, X):
        check_is_fitted(self, "features_")
        X = self._check_X(X)
        if self.params_ is not None:
            X = apply_minmax(self.params_, X)
        return self._decode(
            [_knn_vote(self.features_, self.labels_, q, self.n_neighbors) for q in X]
        )
