"""Exact nearest-neighbour ranking, produced lazily in rank order.

All distances are computed up front (one vectorised pass); the ordering is
then extracted in growing blocks with ``np.argpartition`` so a consumer
that stops at rank ``r`` only pays for sorting roughly ``2r`` entries.
Ordering key is ``(distance, training index)``.
"""

from typing import NamedTuple

import numpy as np

FIRST_BLOCK = 16


def euclidean(train, query):
    diff = train - query
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


class RankedNeighbor(NamedTuple):
    index: int
    distance: float
    rank: int


def check_query(query, n_features):
    query = np.asarray(query, dtype=np.float64)
    if query.ndim != 1 or query.shape[0] != n_features:
        raise ValueError(
            f"query has shape {query.shape}, expected ({n_features},)"
        )
    if not np.all(np.isfinite(query)):
        raise ValueError("query contains NaN or infinite values")
    return query


def _ordered(indices, distances):
    order = np.lexsort((indices, distances[indices]))
    return indices[order]


def neighbor_blocks(distances, first_block=FIRST_BLOCK):
    """Yield index arrays that concatenate to the full ``(distance, index)`` order.

    Each block holds every remaining point with distance <= the block's
    pivot, so ties straddling a block boundary cannot be split.
    """
    remaining = np.arange(distances.size)
    size = first_block
    while remaining.size:
        if remaining.size <= size:
            yield _ordered(remaining, distances)
            return
        pivot_pos = np.argpartition(distances[remaining], size - 1)[size - 1]
        pivot = distances[remaining[pivot_pos]]
        take = distances[remaining] <= pivot
        yield _ordered(remaining[take], distances)
        remaining = remaining[~take]
        size *= 2


def rank_neighbors(train, query, metric=euclidean):
    """Generate :class:`RankedNeighbor` tuples, nearest first."""
    train = np.asarray(train, dtype=np.float64)
    query = check_query(query, train.shape[1])
    distances = metric(train, query)
    rank = 0
    for block in neighbor_blocks(distances):
        for index in block:
            rank += 1
            yield RankedNeighbor(int(index), float(distances[index]), rank)


def full_order(distances):
    """Eager reference ordering: a complete stable sort."""
    return np.lexsort((np.arange(distances.size), distances))
