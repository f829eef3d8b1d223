"""Binary sum tree for proportional priority sampling.

Leaves hold non-negative priorities; each internal node is recomputed as
the exact sum of its two children on every write, so the root is always
the pairwise-tree sum of the leaves rather than a drifting running total.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import EmptyBufferError, InvalidInputError


class SumTree:
    """Fixed-capacity priority tree with O(log n) writes and draws.

    Parameters:
        capacity: number of addressable leaves, at least 1.  Internally
            padded to the next power of two; padding leaves keep priority
            zero and can never be drawn.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InvalidInputError(f"capacity must be at least 1, got {capacity}")
        self.capacity = int(capacity)
        leaf_base = 1
        while leaf_base < capacity:
            leaf_base *= 2
        self.leaf_base = leaf_base
        self._tree = np.zeros(2 * leaf_base, dtype=np.float64)
        self.max_priority_seen = 1.0

    @property
    def total(self) -> float:
        """Root value: the tree-structured sum of all leaf priorities."""
        return float(self._tree[1])

    @property
    def leaves(self) -> np.ndarray:
        """Read-only view of the addressable leaf priorities."""
        return self._tree[self.leaf_base:self.leaf_base + self.capacity]

    def get(self, idx: int) -> float:
        idx = self._check_idx(idx)
        return float(self._tree[self.leaf_base + idx])

    def _check_idx(self, idx: int) -> int:
        idx = int(idx)
        if not 0 <= idx < self.capacity:
            raise InvalidInputError(f"leaf {idx} outside [0, {self.capacity})")
        return idx

    def set(self, idx: int, priority: float) -> None:
        """Write one leaf priority and refresh its ancestors."""
        self.set_batch(np.array([idx], dtype=np.int64),
                       np.array([priority], dtype=np.float64))

    def set_batch(self, idxs: np.ndarray, priorities: np.ndarray) -> None:
        """Write several leaf priorities; later duplicates win."""
        idxs = np.asarray(idxs, dtype=np.int64)
        priorities = np.asarray(priorities, dtype=np.float64)
        if idxs.shape != priorities.shape or idxs.ndim != 1:
            raise InvalidInputError("set_batch expects matching 1-D arrays")
        if idxs.size == 0:
            return
        if idxs.min() < 0 or idxs.max() >= self.capacity:
            raise InvalidInputError("leaf index outside capacity")
        if not np.all(np.isfinite(priorities)) or priorities.min() < 0.0:
            raise InvalidInputError("priorities must be finite and non-negative")
        _kernels.sumtree_set(self._tree, self.leaf_base, idxs, priorities)
        m = float(priorities.max())
        if m > self.max_priority_seen:
            self.max_priority_seen = m

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n leaves, each with probability proportional to its priority."""
        if n < 0:
            raise InvalidInputError(f"sample size must be non-negative, got {n}")
        if n == 0:
            return np.empty(0, dtype=np.int64)
        total = self.total
        if total <= 0.0:
            raise EmptyBufferError("cannot sample from a tree with zero total priority")
        us = rng.random(n) * total
        return _kernels.sumtree_locate(self._tree, self.leaf_base, us)
