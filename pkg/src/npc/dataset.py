"""Binary-class datasets: KEEL ``.dat`` and CSV parsing, stratified folds,
and per-fold min-max scaling.

Label convention: 1 is the minority / positive class, 0 the majority.
"""

import csv
import io
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data


class DatasetError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}: "
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus binary labels.

    ``class_values`` records the original spelling of the (negative,
    positive) class so the dataset can be written back out unchanged.
    ``labels`` is ``None`` for unlabeled query sets.
    """

    name: str
    features: np.ndarray
    labels: np.ndarray | None
    feature_names: tuple = ()
    class_values: tuple = ("negative", "positive")

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        if features.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if not np.all(np.isfinite(features)):
            raise ValueError("features contain NaN or infinite values")
        features.flags.writeable = False
        object.__setattr__(self, "features", features)
        names = tuple(self.feature_names) or tuple(
            f"x{i}" for i in range(features.shape[1])
        )
        if len(names) != features.shape[1]:
            raise ValueError(
                f"{len(names)} feature names for {features.shape[1]} features"
            )
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "class_values", tuple(self.class_values))
        if self.labels is not None:
            labels = np.array(self.labels, dtype=np.int64)
            if labels.shape != (features.shape[0],):
                raise ValueError(
                    f"{labels.shape[0] if labels.ndim else 0} labels for "
                    f"{features.shape[0]} rows"
                )
            if not np.isin(labels, (0, 1)).all():
                raise ValueError("labels must be 0 or 1")
            labels.flags.writeable = False
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.features.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        same_labels = (
            self.labels is None and other.labels is None
        ) or (
            self.labels is not None
            and other.labels is not None
            and np.array_equal(self.labels, other.labels)
        )
        return (
            self.name == other.name
            and self.feature_names == other.feature_names
            and self.class_values == other.class_values
            and np.array_equal(self.features, other.features)
            and same_labels
        )

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def check_trainable(self):
        if self.labels is None:
            raise ValueError(f"dataset {self.name!r} is unlabeled")
        present = set(np.unique(self.labels).tolist())
        if present != {0, 1}:
            raise ValueError(
                f"dataset {self.name!r} has a single class {sorted(present)}"
            )

    def subset(self, indices, name=None) -> "Dataset":
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(
            name=name or self.name,
            features=self.features[indices],
            labels=None if self.labels is None else self.labels[indices],
            feature_names=self.feature_names,
            class_values=self.class_values,
        )


def _label_map(counts: Counter) -> dict:
    """Map two class spellings to {0, 1}.

    ``positive``/``negative`` (any case) win; otherwise the rarer value is
    positive, ties going to the lexicographically smaller spelling.
    """
    values = list(counts)
    lowered = {v.strip().lower(): v for v in values}
    if set(lowered) == {"positive", "negative"}:
        return {lowered["negative"]: 0, lowered["positive"]: 1}
    if set(lowered) == {"0", "1"}:
        return {lowered["0"]: 0, lowered["1"]: 1}
    positive = min(values, key=lambda v: (counts[v], v))
    return {v: int(v == positive) for v in values}


def _class_values(mapping: dict) -> tuple:
    inverse = {label: value for value, label in mapping.items()}
    return inverse[0], inverse[1]


def _to_float(token, line, source):
    try:
        value = float(token)
    except ValueError:
        raise DatasetError(f"non-numeric feature value {token!r}", line, source) from None
    if not math.isfinite(value):
        raise DatasetError(f"non-finite feature value {token!r}", line, source)
    return value


_ATTRIBUTE = re.compile(
    r"""^@attribute\s+('[^']*'|"[^"]*"|[^\s{\[]+)\s*(.*)$""", re.IGNORECASE
)


def parse_keel(text, name=None, class_map=None, source=None) -> Dataset:
    """Parse a KEEL ``.dat`` document.

    ``text`` is a string or a text stream. ``class_map`` forces the
    spelling -> label mapping; partition files pass the training file's
    mapping so both halves agree.
    """
    if not isinstance(text, str):
        text = text.read()
    relation = name
    attributes = []  # (name, kind, nominal values or None)
    outputs = None
    rows = []
    classes = []
    in_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            tokens = [t.strip() for t in line.split(",")]
            if len(tokens) != len(attributes):
                raise DatasetError(
                    f"expected {len(attributes)} values, found {len(tokens)}",
                    lineno,
                    source,
                )
            feats = []
            for i, token in enumerate(tokens):
                if i == class_index:
                    continue
                feats.append(_to_float(token, lineno, source))
            cls = tokens[class_index]
            if declared is not None and cls not in declared:
                raise DatasetError(f"undeclared class value {cls!r}", lineno, source)
            rows.append(feats)
            classes.append((cls, lineno))
            continue
        lower = line.lower()
        if lower.startswith("@relation"):
            if relation is None:
                relation = line[len("@relation"):].strip().strip("'\"")
        elif lower.startswith("@attribute"):
            match = _ATTRIBUTE.match(line)
            if not match:
                raise DatasetError(f"malformed attribute line {line!r}", lineno, source)
            attr_name = match.group(1).strip("'\"")
            spec = match.group(2).strip()
            if spec.startswith("{"):
                if not spec.endswith("}"):
                    raise DatasetError("unterminated nominal value list", lineno, source)
                values = [v.strip() for v in spec[1:-1].split(",") if v.strip()]
                attributes.append((attr_name, "nominal", values, lineno))
            else:
                kind = spec.split("[")[0].strip().lower()
                if kind not in ("real", "integer", "numeric"):
                    raise DatasetError(
                        f"unsupported attribute type {kind!r}", lineno, source
                    )
                attributes.append((attr_name, kind, None, lineno))
        elif lower.startswith("@inputs"):
            pass
        elif lower.startswith("@output"):
            outputs = [v.strip() for v in line.split(None, 1)[1].split(",")] if " " in line else []
        elif lower.startswith("@data"):
            if not attributes:
                raise DatasetError("@data before any @attribute", lineno, source)
            names = [a[0] for a in attributes]
            if outputs:
                if len(outputs) != 1 or outputs[0] not in names:
                    raise DatasetError(f"bad @outputs {outputs!r}", lineno, source)
                class_index = names.index(outputs[0])
            else:
                class_index = len(attributes) - 1
            for i, (attr_name, kind, values, attr_line) in enumerate(attributes):
                if i == class_index:
                    if kind != "nominal":
                        raise DatasetError(
                            f"class attribute {attr_name!r} is not nominal",
                            attr_line,
                            source,
                        )
                elif kind == "nominal":
                    raise DatasetError(
                        f"nominal input attribute {attr_name!r} is not supported",
                        attr_line,
                        source,
                    )
            declared = attributes[class_index][2]
            if len(declared) != 2 and class_map is None:
                raise DatasetError(
                    f"class attribute must have two values, found {len(declared)}",
                    attributes[class_index][3],
                    source,
                )
            in_data = True
        else:
            raise DatasetError(f"unexpected header line {line!r}", lineno, source)
    if not in_data:
        raise DatasetError("missing @data section", None, source)

    if class_map is None:
        counts = Counter({v: 0 for v in declared})
        counts.update(c for c, _ in classes)
        mapping = _label_map(counts)
    else:
        mapping = dict(class_map)
        for cls, lineno in classes:
            if cls not in mapping:
                raise DatasetError(f"unknown class value {cls!r}", lineno, source)
    feature_names = tuple(a[0] for i, a in enumerate(attributes) if i != class_index)
    features = np.array(rows, dtype=np.float64).reshape(len(rows), len(feature_names))
    return Dataset(
        name=relation or "dataset",
        features=features,
        labels=np.array([mapping[c] for c, _ in classes], dtype=np.int64),
        feature_names=feature_names,
        class_values=_class_values(mapping),
    )


def _looks_numeric(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def parse_csv(text, label_column=-1, header=None, name="dataset", source=None) -> Dataset:
    """Parse comma-separated values with one class column.

    ``label_column`` is a header name or a column index (negative indices
    count from the end). ``header=None`` detects a header row by its
    non-numeric feature cells; a column name always implies a header.
    """
    if not isinstance(text, str):
        text = text.read()
    records = [
        (lineno, [c.strip() for c in row])
        for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1)
        if row and any(c.strip() for c in row)
    ]
    if not records:
        raise DatasetError("empty CSV", None, source)
    width = len(records[0][1])
    if isinstance(label_column, str):
        header = True
    if header is None:
        first = records[0][1]
        idx = label_column % width if -width <= label_column < width else None
        header = any(
            not _looks_numeric(c) for i, c in enumerate(first) if i != idx
        )
    names = None
    if header:
        names = records[0][1]
        records = records[1:]
    if isinstance(label_column, str):
        if label_column not in names:
            raise DatasetError(f"missing label column {label_column!r}", 1, source)
        label_index = names.index(label_column)
    else:
        if not -width <= label_column < width:
            raise DatasetError(f"label column {label_column} out of range", 1, source)
        label_index = label_column % width
    rows, classes = [], []
    for lineno, cells in records:
        if len(cells) != width:
            raise DatasetError(
                f"expected {width} values, found {len(cells)}", lineno, source
            )
        rows.append(
            [_to_float(c, lineno, source) for i, c in enumerate(cells) if i != label_index]
        )
        classes.append(cells[label_index])
    counts = Counter(classes)
    if len(counts) != 2:
        raise DatasetError(
            f"label column must hold two classes, found {len(counts)}", None, source
        )
    mapping = _label_map(counts)
    feature_names = (
        tuple(n for i, n in enumerate(names) if i != label_index) if names else ()
    )
    return Dataset(
        name=name,
        features=np.array(rows, dtype=np.float64).reshape(len(rows), width - 1),
        labels=np.array([mapping[c] for c in classes], dtype=np.int64),
        feature_names=feature_names,
        class_values=_class_values(mapping),
    )


def to_keel(dataset: Dataset) -> str:
    out = [f"@relation {dataset.name}"]
    for j, fname in enumerate(dataset.feature_names):
        col = dataset.features[:, j]
        span = f" [{col.min()!r}, {col.max()!r}]" if col.size else ""
        out.append(f"@attribute {fname} real{span}")
    neg, pos = dataset.class_values
    out.append(f"@attribute Class {{{pos}, {neg}}}")
    out.append(f"@inputs {', '.join(dataset.feature_names)}")
    out.append("@outputs Class")
    out.append("@data")
    for row, label in zip(dataset.features, dataset.labels):
        values = ", ".join(repr(float(v)) for v in row)
        out.append(f"{values}, {dataset.class_values[label]}")
    return "\n".join(out) + "\n"


def to_csv(dataset: Dataset, label_name="Class") -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*dataset.feature_names, label_name])
    for row, label in zip(dataset.features, dataset.labels):
        writer.writerow([*(repr(float(v)) for v in row), dataset.class_values[label]])
    return buf.getvalue()


def load_dataset(path, class_map=None) -> Dataset:
    """Read a ``.dat`` (KEEL) or ``.csv`` file; CSV labels are the last column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read file: {exc.strerror}", None, str(path)) from None
    if path.suffix.lower() == ".csv":
        return parse_csv(text, name=path.stem, source=str(path))
    return parse_keel(text, class_map=class_map, source=str(path))


# --- folds -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignments: np.ndarray = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, FoldPlan):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.assignments, other.assignments)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def split(self, dataset: Dataset):
        """Yield ``(fold, train, test)`` datasets; single-class training folds raise."""
        for fold in range(self.k):
            train = dataset.subset(self.train_indices(fold))
            if set(np.unique(train.labels).tolist()) != {0, 1}:
                raise ValueError(
                    f"training part of fold {fold} of {dataset.name!r} has a single class"
                )
            yield fold, train, dataset.subset(self.test_indices(fold))


def stratified_folds(dataset: Dataset, k: int = 5, seed: int = 0) -> FoldPlan:
    """Shuffle each class with a seeded permutation and deal it round-robin.

    The deal continues from where the previous class stopped, which keeps
    overall fold sizes within one of each other as well.
    """
    if dataset.labels is None:
        raise ValueError("cannot stratify an unlabeled dataset")
    n = len(dataset)
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if k > n:
        raise ValueError(f"{k} folds requested for {n} samples")
    rng = np.random.default_rng(seed)
    assignments = np.empty(n, dtype=np.int64)
    offset = 0
    for label in (1, 0):
        members = np.flatnonzero(dataset.labels == label)
        members = members[rng.permutation(members.size)]
        assignments[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    return FoldPlan(k=k, assignments=assignments)


_PARTITION = re.compile(r"^(?P<stem>.+)-(?P<k>\d+)-(?P<fold>\d+)(?P<kind>tra|tst)\.dat$")


def find_keel_partitions(directory):
    """Group ``<name>-<k>-<i>tra.dat`` / ``<name>-<k>-<i>tst.dat`` pairs.

    Returns ``{name: [(train_path, test_path), ...]}`` ordered by fold.
    """
    found = {}
    for path in sorted(Path(directory).iterdir()):
        match = _PARTITION.match(path.name)
        if match:
            key = (match["stem"], int(match["k"]))
            found.setdefault(key, {}).setdefault(int(match["fold"]), {})[match["kind"]] = path
    result = {}
    for (stem, k), folds in found.items():
        pairs = []
        for fold in sorted(folds):
            parts = folds[fold]
            if set(parts) != {"tra", "tst"}:
                raise DatasetError(f"fold {fold} of {stem} lacks a train/test twin")
            pairs.append((parts["tra"], parts["tst"]))
        result[stem] = pairs
    return result


def load_partition(train_path, test_path):
    train = load_dataset(train_path)
    test = load_dataset(test_path, class_map={v: i for i, v in enumerate(train.class_values)})
    if train.feature_names != test.feature_names:
        raise DatasetError("train/test attribute lists differ", None, str(test_path))
    return train, test


# --- normalization -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class NormalizationParams:
    minimum: np.ndarray
    maximum: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, NormalizationParams):
            return NotImplemented
        return np.array_equal(self.minimum, other.minimum) and np.array_equal(
            self.maximum, other.maximum
        )


def fit_minmax(rows) -> NormalizationParams:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("need at least one training row")
    return NormalizationParams(rows.min(axis=0), rows.max(axis=0))


def apply_minmax(params: NormalizationParams, rows) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    span = params.maximum - params.minimum
    constant = span == 0
    scaled = (rows - params.minimum) / np.where(constant, 1.0, span)
    scaled[..., constant] = 0.0
    return scaled


class MinMaxNormalizer(TransformerMixin, BaseEstimator):
    """Scale each feature to the training range; constant features become 0.

    Unlike ``sklearn.preprocessing.MinMaxScaler`` test rows are never
    clipped, so values outside ``[0, 1]`` survive.
    """

    def fit(self, X, y=None):
        X = validate_data(self, X)
        self.params_ = fit_minmax(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = validate_data(self, X, reset=False)
        return apply_minmax(self.params_, X)
