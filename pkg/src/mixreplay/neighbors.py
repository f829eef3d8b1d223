"""Exact nearest-neighbor queries in standardized state-action space.

Neighborhoods are computed by a full linear scan over the live buffer,
standardized with the caller's running moments at query time.  No spatial
structure is cached, so a query can never observe stale coordinates: the
points and the query are always z-scored with the same moments.

Distances are squared Euclidean.  Exact ties are broken toward the
transition inserted earlier, which makes every query's answer a total
order and keeps both kernel backends byte-for-byte interchangeable.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .buffer import RingBuffer
from .errors import EmptyBufferError, InsufficientPopulationError, InvalidInputError
from .moments import RunningMoments


def eligible_count(buf: RingBuffer, exclude_slot: int) -> int:
    """Number of candidate rows a query may return."""
    return buf.count - (1 if exclude_slot >= 0 else 0)


def knn_batch(buf: RingBuffer, moments: RunningMoments, features: np.ndarray,
              k: int, exclude_slots: np.ndarray) -> np.ndarray:
    """k nearest stored slots for each raw [state | action] query row.

    Parameters:
        buf: live transition store; slots index into it.
        moments: running moments over the buffer's feature prefix.
        features: (m, state_dim + action_dim) raw query rows.
        k: neighbors per query, at least 1.
        exclude_slots: (m,) slot to omit per query (-1 keeps all), used
            to drop the query transition itself from its own neighborhood.

    Returns (m, k) slot indices ordered nearest first.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != buf.spec.feature_dim:
        raise InvalidInputError(
            f"queries must have shape (m, {buf.spec.feature_dim}), got {features.shape}"
        )
    exclude_slots = np.asarray(exclude_slots, dtype=np.int64)
    if exclude_slots.shape != (features.shape[0],):
        raise InvalidInputError("exclude_slots must have one entry per query")
    if buf.count == 0:
        raise EmptyBufferError("neighbor query on an empty buffer")
    if k < 1:
        raise InvalidInputError(f"k must be at least 1, got {k}")
    worst_case = buf.count - (1 if np.any(exclude_slots >= 0) else 0)
    if k > worst_case:
        raise InsufficientPopulationError(
            f"k={k} exceeds the {worst_case} eligible transitions"
        )
    points = moments.standardize(buf.features)
    queries = moments.standardize(features)
    return _kernels.knn_select(points, queries, buf.insert_order,
                               int(k), exclude_slots)


def knn(buf: RingBuffer, moments: RunningMoments, features: np.ndarray,
        k: int, exclude_slot: int = -1) -> np.ndarray:
    """Single-query form of `knn_batch`; returns (k,) slot indices."""
    features = np.asarray(features, dtype=np.float64)
    out = knn_batch(buf, moments, features.reshape(1, -1), k,
                    np.array([exclude_slot], dtype=np.int64))
    return out[0]


def knn_of_slot(buf: RingBuffer, moments: RunningMoments, slot: int, k: int,
                exclude_self: bool = True) -> np.ndarray:
    """Neighbors of a stored transition, excluding it from its own result
    unless `exclude_self` is False."""
    slot = int(slot)
    if not 0 <= slot < buf.count:
        raise InvalidInputError(f"slot {slot} outside live range [0, {buf.count})")
    return knn(buf, moments, buf.features[slot], k,
               exclude_slot=slot if exclude_self else -1)
