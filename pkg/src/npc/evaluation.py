"""Scoring and multi-dataset comparison.

Per-fold metrics (confusion counts, TP/TN rates, geometric mean), their
aggregation, and the Friedman test with a Holm step-down post hoc against
the best-ranked algorithm.
"""

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int


def confusion(predicted, truth) -> ConfusionMatrix:
    """Count outcomes with label 1 as the positive class."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError(
            f"{predicted.size} predictions for {truth.size} true labels"
        )
    for arr in (predicted, truth):
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
    pos = truth == 1
    hit = predicted == truth
    return ConfusionMatrix(
        tp=int(np.count_nonzero(pos & hit)),
        fn=int(np.count_nonzero(pos & ~hit)),
        fp=int(np.count_nonzero(~pos & ~hit)),
        tn=int(np.count_nonzero(~pos & hit)),
    )


@dataclass(frozen=True)
class MetricReport:
    """Rates are ``None`` when the matching class is absent from the truth."""

    tp_rate: float | None
    tn_rate: float | None
    gm: float | None
    mean_query_time: float | None = None

    @property
    def defined(self) -> bool:
        return self.gm is not None


def geometric_mean(cm: ConfusionMatrix, mean_query_time=None) -> MetricReport:
    positives = cm.tp + cm.fn
    negatives = cm.tn + cm.fp
    tp_rate = cm.tp / positives if positives else None
    tn_rate = cm.tn / negatives if negatives else None
    gm = None
    if tp_rate is not None and tn_rate is not None:
        gm = math.sqrt(tp_rate * tn_rate)
    return MetricReport(tp_rate, tn_rate, gm, mean_query_time)


def summarize(reports) -> MetricReport:
    """Average fold reports; undefined folds are dropped with a warning."""
    reports = list(reports)
    if not reports:
        raise ValueError("no fold reports to summarize")

    def mean(values, what):
        present = [v for v in values if v is not None]
        missing = len(values) - len(present)
        if missing and what != "mean_query_time":
            warnings.warn(
                f"{missing} of {len(values)} folds have undefined {what}; excluded",
                RuntimeWarning,
                stacklevel=3,
            )
        return sum(present) / len(present) if present else None

    return MetricReport(
        tp_rate=mean([r.tp_rate for r in reports], "tp_rate"),
        tn_rate=mean([r.tn_rate for r in reports], "tn_rate"),
        gm=mean([r.gm for r in reports], "gm"),
        mean_query_time=mean([r.mean_query_time for r in reports], "mean_query_time"),
    )


# --- score tables ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScoreTable:
    datasets: tuple
    algorithms: tuple
    scores: np.ndarray

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64)
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if scores.shape != (len(self.datasets), len(self.algorithms)):
            raise ValueError(
                f"score matrix {scores.shape} does not match "
                f"{len(self.datasets)} datasets x {len(self.algorithms)} algorithms"
            )
        if not np.all(np.isfinite(scores)):
            raise ValueError("score table contains non-finite values")
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)

    def __eq__(self, other):
        if not isinstance(other, ScoreTable):
            return NotImplemented
        return (
            self.datasets == other.datasets
            and self.algorithms == other.algorithms
            and np.array_equal(self.scores, other.scores)
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["dataset", *self.algorithms])
        for name, row in zip(self.datasets, self.scores):
            writer.writerow([name, *(repr(float(v)) for v in row)])
        return buf.getvalue()


def read_score_table(text) -> ScoreTable:
    """Parse ``dataset,<alg>,<alg>...`` CSV; first column holds dataset names.

    The ``dataset`` header cell is mandatory so a transposed table is
    rejected instead of being ranked the wrong way round.
    """
    if not isinstance(text, str):
        text = text.read()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise ValueError("score table needs a header row and at least one dataset")
    header = [c.strip() for c in rows[0]]
    if header[0].lower() not in ("dataset", "datasets"):
        raise ValueError(
            f"first header cell must be 'dataset', found {header[0]!r}; "
            "rows are datasets and columns are algorithms"
        )
    algorithms = header[1:]
    if not algorithms:
        raise ValueError("score table has no algorithm columns")
    datasets, scores = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(
                f"line {lineno}: expected {len(header)} cells, found {len(row)}"
            )
        try:
            scores.append([float(c) for c in row[1:]])
        except ValueError:
            raise ValueError(
                f"line {lineno}: non-numeric score in row {row[0]!r}"
            ) from None
        datasets.append(row[0].strip())
    for alg in algorithms:
        try:
            float(alg)
        except ValueError:
            continue
        raise ValueError(
            f"algorithm name {alg!r} is numeric; is the table transposed or missing its header?"
        )
    return ScoreTable(datasets, algorithms, scores)


def rank_rows(scores, higher_is_better=True) -> np.ndarray:
    """Rank within each row, 1 = best, ties sharing their average rank."""
    if isinstance(scores, ScoreTable):
        scores = scores.scores
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ValueError("scores must be a 2-d table")
    keyed = -scores if higher_is_better else scores
    return sps.rankdata(keyed, method="average", axis=1)


def normal_tail(z: float) -> float:
    """Upper-tail probability of the standard normal, ``1 - Phi(z)``."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


@dataclass(frozen=True)
class Comparison:
    algorithm: str
    mean_rank: float
    z: float
    p: float
    holm: float  # step-down significance threshold for this comparison
    rejected: bool


@dataclass(frozen=True)
class FriedmanResult:
    algorithms: tuple
    mean_ranks: tuple
    statistic: float
    p_value: float
    control: str
    alpha: float
    comparisons: tuple = field(default=())  # ordered by p ascending

    def ranking(self):
        """``(algorithm, mean rank)`` pairs, best first."""
        return sorted(zip(self.algorithms, self.mean_ranks), key=lambda t: t[1])

    def to_rows(self):
        """Rows mirroring the classic report layout: Algorithm, Ranking, p, Holm."""
        rows = [(self.control, self.mean_ranks[self.algorithms.index(self.control)], None, None)]
        for c in sorted(self.comparisons, key=lambda c: -c.p):
            rows.append((c.algorithm, c.mean_rank, c.p, c.holm))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["Algorithm", "Ranking", "p", "Holm"])
        for alg, rank, p, holm in self.to_rows():
            writer.writerow([
                alg, f"{rank:.4f}",
                "" if p is None else f"{p:.6f}",
                "" if holm is None else f"{holm:.6f}",
            ])
        return buf.getvalue()

    def format_table(self) -> str:
        lines = [
            f"Friedman chi2 = {self.statistic:.4f}, p = {self.p_value:.6g} "
            f"(k={len(self.algorithms)}, alpha={self.alpha})",
            f"{'Algorithm':<16}{'Ranking':>10}{'p':>12}{'Holm':>12}",
        ]
        for alg, rank, p, holm in self.to_rows():
            p_txt = "-" if p is None else f"{p:.6f}"
            h_txt = "-" if holm is None else f"{holm:.6f}"
            lines.append(f"{alg:<16}{rank:>10.4f}{p_txt:>12}{h_txt:>12}")
        return "\n".join(lines) + "\n"


def friedman_holm(table: ScoreTable, alpha=0.05, higher_is_better=True) -> FriedmanResult:
    """Friedman ranking plus Holm-corrected z tests against the best algorithm.

    ``z = (R_i - R_control) / sqrt(k (k + 1) / (6 N))`` with two-sided
    normal p-values. Sorted by ascending p, the i-th comparison (0-based)
    is tested at ``alpha / (k - 1 - i)``, stopping at the first failure.
    """
    n, k = table.scores.shape
    if n < 2 or k < 2:
        raise ValueError(f"need at least 2 datasets and 2 algorithms, got {n}x{k}")
    if np.all(table.scores == table.scores[:, :1]):
        raise ValueError("every dataset row is constant; nothing to rank")
    ranks = rank_rows(table.scores, higher_is_better)
    mean_ranks = ranks.mean(axis=0)
    statistic = 12.0 * n / (k * (k + 1)) * (
        np.sum(mean_ranks**2) - k * (k + 1) ** 2 / 4.0
    )
    p_value = float(sps.chi2.sf(statistic, k - 1))
    control = int(np.argmin(mean_ranks))
    se = math.sqrt(k * (k + 1) / (6.0 * n))
    raw = []
    for j in range(k):
        if j == control:
            continue
        z = (mean_ranks[j] - mean_ranks[control]) / se
        raw.append((table.algorithms[j], float(mean_ranks[j]), z, 2.0 * normal_tail(abs(z))))
    raw.sort(key=lambda t: t[3])
    comparisons = []
    still_rejecting = True
    for i, (alg, rank, z, p) in enumerate(raw):
        threshold = alpha / (k - 1 - i)
        still_rejecting = still_rejecting and p <= threshold
        comparisons.append(Comparison(alg, rank, float(z), p, threshold, still_rejecting))
    return FriedmanResult(
        algorithms=table.algorithms,
        mean_ranks=tuple(float(r) for r in mean_ranks),
        statistic=float(statistic),
        p_value=p_value,
        control=table.algorithms[control],
        alpha=alpha,
        comparisons=tuple(comparisons),
    )
