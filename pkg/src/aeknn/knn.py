"""Exact k-nearest-neighbor classification with majority vote.

Search is a full scan under Euclidean distance; after dimensionality
reduction the reference matrices are narrow enough that the exact scan is
both correct and fast. Every tie has a deterministic rule: equal distances
prefer the lower reference index, and vote ties go to the class whose
closest neighbor among the k is nearest, then to the lower class index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["KnnModel", "Prediction", "neighbors", "classify", "classify_batch"]

_QUERY_BLOCK = 256  # rows per broadcasted distance block


@dataclass(frozen=True)
class KnnModel:
    references: np.ndarray
    labels: np.ndarray
    k: int
    n_classes: int | None = None

    def __post_init__(self):
        refs = np.ascontiguousarray(self.references, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if refs.ndim != 2:
            raise ValueError("references must be a matrix")
        if labels.shape != (refs.shape[0],):
            raise ValueError("one label per reference row required")
        if not np.all(np.isfinite(refs)):
            raise ValueError("references contain non-finite values")
        if not 1 <= self.k <= refs.shape[0]:
            raise ValueError(f"k={self.k} must be in [1, {refs.shape[0]}]")
        n_classes = self.n_classes
        if n_classes is None:
            n_classes = int(labels.max()) + 1
        elif labels.size and labels.max() >= n_classes:
            raise ValueError("labels exceed n_classes")
        refs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "references", refs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "n_classes", int(n_classes))

    @property
    def dim(self) -> int:
        return self.references.shape[1]


@dataclass(frozen=True)
class Prediction:
    label: int
    vote_fractions: np.ndarray  # (n_classes,), multiples of 1/k summing to 1
    neighbor_indices: np.ndarray
    neighbor_distances: np.ndarray


def _distance_block(references: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Exact Euclidean distances, queries x references.

    Computed from explicit differences (not the expanded-square identity) so a
    query equal to a reference yields exactly zero and single-query and batch
    calls share identical arithmetic.
    """
    out = np.empty((queries.shape[0], references.shape[0]))
    for start in range(0, queries.shape[0], _QUERY_BLOCK):
        block = queries[start : start + _QUERY_BLOCK]
        d2 = ((block[:, None, :] - references[None, :, :]) ** 2).sum(axis=2)
        out[start : start + _QUERY_BLOCK] = d2
    return np.sqrt(out)


def _check_queries(model: KnnModel, queries: np.ndarray, what: str) -> np.ndarray:
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim == 1:
        queries = queries[None, :]
    if queries.ndim != 2 or queries.shape[1] != model.dim:
        raise ValueError(f"{what} has shape {queries.shape}, expected (*, {model.dim})")
    return queries


def neighbors(model: KnnModel, query: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The k nearest reference rows, distance-ascending; distance ties are
    returned lower-index first. Returns (indices, distances)."""
    q = _check_queries(model, query, "query")
    if q.shape[0] != 1:
        raise ValueError("neighbors takes a single query vector")
    dist = _distance_block(model.references, q)[0]
    order = np.argsort(dist, kind="stable")[: model.k]
    return order, dist[order]


def _vote(model: KnnModel, order: np.ndarray, dist: np.ndarray) -> Prediction:
    nn_labels = model.labels[order]
    counts = np.bincount(nn_labels, minlength=model.n_classes)
    best = counts.max()
    contenders = np.flatnonzero(counts == best)
    if contenders.size == 1:
        winner = int(contenders[0])
    else:
        # nearest single representative decides; neighbors are sorted, so the
        # first occurrence of a class is its closest member
        nearest = np.full(model.n_classes, np.inf)
        for pos in range(len(order) - 1, -1, -1):
            nearest[nn_labels[pos]] = dist[pos]
        winner = int(min(contenders, key=lambda c: (nearest[c], c)))
    return Prediction(
        label=winner,
        vote_fractions=counts / model.k,
        neighbor_indices=order,
        neighbor_distances=dist,
    )


def classify(model: KnnModel, query: np.ndarray) -> Prediction:
    """Majority vote over the k nearest neighbors."""
    order, dist = neighbors(model, query)
    return _vote(model, order, dist)


def classify_batch(model: KnnModel, queries: np.ndarray) -> list[Prediction]:
    """Row-wise classification; elementwise identical to repeated classify."""
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim != 2:
        raise ValueError("queries must be a matrix")
    if queries.shape[0] == 0:
        return []
    if queries.shape[1] != model.dim:
        raise ValueError(f"queries have shape {queries.shape}, expected (*, {model.dim})")
    distances = _distance_block(model.references, queries)
    order_all = np.argsort(distances, axis=1, kind="stable")[:, : model.k]
    predictions = []
    for row in range(queries.shape[0]):
        order = order_all[row]
        predictions.append(_vote(model, order, distances[row, order]))
    return predictions
