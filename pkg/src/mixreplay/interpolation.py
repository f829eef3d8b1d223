"""Convex interpolation of flat transition vectors.

`mixup` blends two encoded transitions; `local_mixup` blends a stored
transition with one of its standardized-space neighbors.  Termination is
never blended: if either endpoint is terminal the sampled transition
passes through untouched, so interpolation cannot fabricate or dilute a
terminal signal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .buffer import RingBuffer
from .errors import InvalidInputError
from .moments import RunningMoments
from .neighbors import knn_of_slot


@dataclass(frozen=True)
class MixupParams:
    """Interpolation hyperparameters.

    `alpha` parameterizes the symmetric Beta law the mixing weight is
    drawn from; alpha=1 makes the weight uniform on [0, 1].
    """

    alpha: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0.0):
            raise InvalidInputError(f"alpha must be positive, got {self.alpha}")


def sample_lambda(params: MixupParams, rng: np.random.Generator) -> float:
    """Draw one mixing weight from Beta(alpha, alpha)."""
    return float(rng.beta(params.alpha, params.alpha))


def _canonical_weights(lam: float) -> tuple[float, float]:
    """Split lam into weights (w1, w2) that sum to exactly 1.0.

    Recomputing w1 as 1 - (1 - lam) makes the pair invariant under the
    swap (x1, x2, lam) -> (x2, x1, 1 - lam), so the symmetry identity
    holds bitwise instead of only up to rounding.
    """
    if not (np.isfinite(lam) and 0.0 <= lam <= 1.0):
        raise InvalidInputError(f"lambda must lie in [0, 1], got {lam}")
    w2 = 1.0 - lam
    w1 = 1.0 - w2
    return w1, w2


def mixup(x1: np.ndarray, x2: np.ndarray, lam: float) -> np.ndarray:
    """Convex combination lam * x1 + (1 - lam) * x2, elementwise."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != x2.shape:
        raise InvalidInputError(f"shape mismatch {x1.shape} vs {x2.shape}")
    w1, w2 = _canonical_weights(float(lam))
    return w1 * x1 + w2 * x2


def mixup_batch(x1: np.ndarray, x2: np.ndarray, lams: np.ndarray) -> np.ndarray:
    """Row-wise `mixup`; bitwise identical to calling it per row."""
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    lams = np.asarray(lams, dtype=np.float64)
    if x1.shape != x2.shape or lams.shape != (x1.shape[0],):
        raise InvalidInputError("mixup_batch shapes disagree")
    if lams.size and not (np.all(np.isfinite(lams))
                          and lams.min() >= 0.0 and lams.max() <= 1.0):
        raise InvalidInputError("lambdas must lie in [0, 1]")
    w2 = 1.0 - lams
    w1 = 1.0 - w2
    return w1[:, None] * x1 + w2[:, None] * x2


@dataclass(frozen=True)
class InterpolationOutcome:
    """Result of one local mixup attempt.

    When `was_interpolated` is False the flat vector is the stored
    sample's encoding unchanged, `lambda_used` is 1, and `neighbor_slot`
    is -1.  `done` is always the sampled transition's own flag; blended
    vectors are never terminal because terminal endpoints never blend.
    """

    flat: np.ndarray
    done: bool
    lambda_used: float
    was_interpolated: bool
    sample_slot: int
    neighbor_slot: int


def _passthrough(buf: RingBuffer, slot: int) -> InterpolationOutcome:
    return InterpolationOutcome(
        flat=buf.flat(slot),
        done=bool(buf.dones[slot]),
        lambda_used=1.0,
        was_interpolated=False,
        sample_slot=int(slot),
        neighbor_slot=-1,
    )


def local_mixup(buf: RingBuffer, moments: RunningMoments, slot: int, k: int,
                params: MixupParams, rng: np.random.Generator,
                exclude_self: bool = True) -> InterpolationOutcome:
    """Blend the transition at `slot` with one of its k nearest neighbors.

    The neighborhood lives in standardized [state | action] space.  One
    neighbor is picked uniformly, the weight comes from Beta(alpha, alpha),
    and the blend covers the full [s | a | r | s2] vector.  A terminal
    sample returns immediately without consuming randomness; a terminal
    neighbor falls back to the unmixed sample after the draws.
    """
    slot = int(slot)
    if not 0 <= slot < buf.count:
        raise InvalidInputError(f"slot {slot} outside live range [0, {buf.count})")
    if buf.dones[slot]:
        return _passthrough(buf, slot)
    neighbors = knn_of_slot(buf, moments, slot, k, exclude_self=exclude_self)
    pick = int(rng.integers(0, k))
    lam = sample_lambda(params, rng)
    neighbor = int(neighbors[pick])
    if buf.dones[neighbor]:
        return _passthrough(buf, slot)
    flat = mixup(buf.flats[slot], buf.flats[neighbor], lam)
    return InterpolationOutcome(
        flat=flat,
        done=False,
        lambda_used=lam,
        was_interpolated=True,
        sample_slot=int(slot),
        neighbor_slot=neighbor,
    )
