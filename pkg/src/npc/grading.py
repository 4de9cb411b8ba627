"""Imbalance statistics and the reference grade table.

Grades depend only on a training sample's rank and class, so the whole
table is computed once per training set, before any query arrives.
"""

import math
from dataclasses import dataclass

import numpy as np

WINNING_FACTOR = 0.7


@dataclass(frozen=True)
class ImbalanceStats:
    """Class counts of a training set and its imbalance ratio ``n_maj / n_min``.

    Built from counts via :func:`compute_imbalance` or :meth:`from_counts`;
    :meth:`from_ratio` accepts a size and ratio directly (for grade curves)
    and then carries fractional class counts.
    """

    n_min: float
    n_maj: float
    n_all: int
    ir: float

    def __post_init__(self):
        if not (self.n_min > 0 and self.n_maj > 0):
            raise ValueError(
                f"both classes must be present (n_min={self.n_min}, n_maj={self.n_maj})"
            )
        if not (self.ir > 0 and math.isfinite(self.ir)):
            raise ValueError(f"imbalance ratio must be positive, got {self.ir}")
        if self.n_all - 1 <= math.sqrt(self.ir):
            raise ValueError(
                f"training set too small for its imbalance ratio: "
                f"n_all - 1 = {self.n_all - 1} <= sqrt(ir) = {math.sqrt(self.ir):.6g}"
            )

    @classmethod
    def from_counts(cls, n_min: int, n_maj: int) -> "ImbalanceStats":
        if n_min < 1 or n_maj < 1:
            raise ValueError(
                f"both classes must be present (n_min={n_min}, n_maj={n_maj})"
            )
        return cls(n_min, n_maj, n_min + n_maj, n_maj / n_min)

    @classmethod
    def from_ratio(cls, n_all: int, ir: float) -> "ImbalanceStats":
        if ir <= 0:
            raise ValueError(f"imbalance ratio must be positive, got {ir}")
        n_min = n_all / (1.0 + ir)
        return cls(n_min, n_all - n_min, int(n_all), float(ir))


def compute_imbalance(labels) -> ImbalanceStats:
    """Count minority (label 1) and majority (label 0) samples."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError("labels must be a 1-d vector")
    bad = ~np.isin(labels, (0, 1))
    if bad.any():
        raise ValueError(f"labels must be 0 or 1, found {labels[bad][0]!r}")
    n_min = int(np.count_nonzero(labels == 1))
    return ImbalanceStats.from_counts(n_min, int(labels.size - n_min))


def _check_rank(rank, stats):
    if not 1 <= rank <= stats.n_all:
        raise ValueError(f"rank {rank} outside 1..{stats.n_all}")


def grade_majority(rank: int, stats: ImbalanceStats) -> float:
    """Grade of a majority neighbour at ``rank``: ``-(ir ** (rank / n_all))``.

    Magnitude grows with rank, from about 1 at the nearest neighbour to
    exactly ``ir`` at the farthest one.
    """
    _check_rank(rank, stats)
    if rank == stats.n_all:
        return -stats.ir
    return -math.exp(math.log(stats.ir) * rank / stats.n_all)


def grade_minority(rank: int, stats: ImbalanceStats) -> float:
    """Grade of a minority neighbour at ``rank``; linear, zero at ``n_all``."""
    _check_rank(rank, stats)
    denominator = stats.n_all - 1 - math.sqrt(stats.ir)
    if denominator <= 0:
        raise ValueError("nonpositive minority grade denominator")
    return stats.ir * (stats.n_all - rank) / denominator


def winning_threshold(stats: ImbalanceStats) -> float:
    return WINNING_FACTOR * stats.ir


class GradeTable:
    """Per-rank grades, row ``r - 1`` holding rank ``r``.

    ``majority`` and ``minority`` are read-only float64 arrays of length
    ``n_all``. ``lookup(ranks, labels)`` picks the column by class label.
    """

    def __init__(self, majority, minority):
        majority = np.array(majority, dtype=np.float64)
        minority = np.array(minority, dtype=np.float64)
        if majority.shape != minority.shape or majority.ndim != 1:
            raise ValueError("grade columns must be 1-d and of equal length")
        majority.flags.writeable = False
        minority.flags.writeable = False
        self.majority = majority
        self.minority = minority
        # column 0 = majority, column 1 = minority, so a label indexes its column
        self._columns = np.stack([majority, minority])
        self._columns.flags.writeable = False

    def __len__(self):
        return self.majority.size

    def __eq__(self, other):
        if not isinstance(other, GradeTable):
            return NotImplemented
        return np.array_equal(self.majority, other.majority) and np.array_equal(
            self.minority, other.minority
        )

    def __repr__(self):
        return f"GradeTable(n_all={len(self)})"

    def row(self, rank: int) -> tuple:
        return float(self.majority[rank - 1]), float(self.minority[rank - 1])

    def lookup(self, ranks, labels) -> np.ndarray:
        ranks = np.asarray(ranks)
        return self._columns[np.asarray(labels, dtype=np.intp), ranks - 1]

    def to_rows(self):
        """Yield ``(rank, |majority grade|, minority grade)`` for plotting."""
        for i in range(len(self)):
            yield i + 1, -float(self.majority[i]), float(self.minority[i])


def build_grade_table(stats: ImbalanceStats) -> GradeTable:
    ranks = range(1, stats.n_all + 1)
    return GradeTable(
        [grade_majority(r, stats) for r in ranks],
        [grade_minority(r, stats) for r in ranks],
    )


def write_grade_curve(stats: ImbalanceStats, fh) -> None:
    """Write ``rank,majority_grade,minority_grade`` (majority as magnitude)."""
    fh.write("rank,majority_grade,minority_grade\n")
    for rank, maj, mino in build_grade_table(stats).to_rows():
        fh.write(f"{rank},{maj!r},{mino!r}\n")
