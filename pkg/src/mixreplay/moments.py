"""Streaming per-dimension mean and variance for feature standardization.

Uses Welford's update so a million inserts stay numerically stable.  The
variance convention is population (divide by count): these are moments of
the data actually in the buffer, not an estimate of anything beyond it.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, UninitializedMomentsError


class RunningMoments:
    """Per-dimension running mean and variance over inserted vectors.

    Parameters:
        dim: feature dimensionality.
        std_floor: lower clamp applied to the standard deviation before
            dividing, so constant dimensions standardize to zero instead
            of blowing up.
    """

    def __init__(self, dim: int, std_floor: float = 1e-8):
        if dim < 1:
            raise InvalidInputError(f"dim must be at least 1, got {dim}")
        if std_floor <= 0.0:
            raise InvalidInputError(f"std_floor must be positive, got {std_floor}")
        self.dim = int(dim)
        self.std_floor = float(std_floor)
        self.count = 0
        self.mean = np.zeros(dim, dtype=np.float64)
        self.m2 = np.zeros(dim, dtype=np.float64)

    def update(self, x: np.ndarray) -> None:
        """Fold one vector into the running moments."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise InvalidInputError(f"update expects shape ({self.dim},), got {x.shape}")
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    @property
    def std(self) -> np.ndarray:
        """Population standard deviation per dimension (no floor applied)."""
        if self.count == 0:
            raise UninitializedMomentsError("no vectors seen yet")
        return np.sqrt(self.m2 / self.count)

    def standardize(self, x: np.ndarray) -> np.ndarray:
        """Z-score `x` (vector or row matrix) under the current moments.

        Dimensions whose deviation sits below the floor divide by the
        floor instead, so a single stored point standardizes to zeros.
        """
        if self.count == 0:
            raise UninitializedMomentsError("standardize called before any update")
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise InvalidInputError(
                f"standardize expects trailing dimension {self.dim}, got {x.shape}"
            )
        denom = np.maximum(self.std, self.std_floor)
        return (x - self.mean) / denom

    def recompute_full(self, features: np.ndarray) -> None:
        """Replace the streamed moments with exact two-pass values.

        Called periodically once the buffer wraps, because the streamed
        moments keep counting evicted rows while the buffer forgets them.
        """
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.dim:
            raise InvalidInputError(
                f"recompute_full expects (n, {self.dim}) features, got {features.shape}"
            )
        if features.shape[0] == 0:
            raise InvalidInputError("recompute_full needs at least one row")
        self.count = features.shape[0]
        self.mean = features.mean(axis=0)
        self.m2 = ((features - self.mean) ** 2).sum(axis=0)
