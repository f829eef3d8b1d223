"""Core data model: spaces, transitions, and their flat encoding.

A transition is stored and interpolated as a flat float64 vector laid out
as [state | action | reward | next_state].  The termination flag is a
boolean carried alongside the vector, never part of it, so arithmetic on
flat vectors can never manufacture a fractional terminal signal.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


def _as_float64(x, name: str, dim: int) -> np.ndarray:
    """Coerce to a 1-D float64 array of length `dim`, rejecting bad input."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape != (dim,):
        raise InvalidInputError(
            f"{name} has shape {arr.shape}, expected ({dim},)"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class SpaceSpec:
    """Dimensions and action bounds for one environment.

    Parameters:
        state_dim: length of the observation vector, at least 1.
        action_dim: length of the action vector, at least 1.
        action_low: per-dimension lower action bound, finite.
        action_high: per-dimension upper action bound, finite and
            strictly above `action_low` everywhere.
    """

    state_dim: int
    action_dim: int
    action_low: np.ndarray = field(repr=False)
    action_high: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.state_dim < 1 or self.action_dim < 1:
            raise InvalidInputError(
                f"dimensions must be at least 1, got state_dim={self.state_dim} "
                f"action_dim={self.action_dim}"
            )
        low = _as_float64(self.action_low, "action_low", self.action_dim)
        high = _as_float64(self.action_high, "action_high", self.action_dim)
        if not np.all(low < high):
            raise InvalidInputError("action_low must be strictly below action_high")
        low.flags.writeable = False
        high.flags.writeable = False
        object.__setattr__(self, "action_low", low)
        object.__setattr__(self, "action_high", high)

    @property
    def flat_dim(self) -> int:
        """Length of the flat vector [state | action | reward | next_state]."""
        return 2 * self.state_dim + self.action_dim + 1

    @property
    def feature_dim(self) -> int:
        """Length of the state-action prefix used for neighbor lookups."""
        return self.state_dim + self.action_dim


@dataclass(frozen=True)
class Transition:
    """One environment step.

    `done` marks a genuine terminal transition.  Horizon truncation is
    recorded with done=False so bootstrapped targets keep the value of
    the truncated tail.
    """

    s: np.ndarray
    a: np.ndarray
    r: float
    s2: np.ndarray
    done: bool
    episode_id: int
    step_idx: int

    def validate(self, spec: SpaceSpec) -> "Transition":
        """Return a normalized copy, rejecting shape or finiteness violations."""
        s = _as_float64(self.s, "s", spec.state_dim)
        a = _as_float64(self.a, "a", spec.action_dim)
        s2 = _as_float64(self.s2, "s2", spec.state_dim)
        r = float(self.r)
        if not np.isfinite(r):
            raise InvalidInputError("r is non-finite")
        if self.episode_id < 0 or self.step_idx < 0:
            raise InvalidInputError("episode_id and step_idx must be non-negative")
        return Transition(s, a, r, s2, bool(self.done),
                          int(self.episode_id), int(self.step_idx))


def encode(t: Transition, spec: SpaceSpec) -> np.ndarray:
    """Pack a transition into its flat float64 vector.

    Layout is [s | a | r | s2]; `done` is intentionally left out.
    """
    flat = np.empty(spec.flat_dim, dtype=np.float64)
    ds, da = spec.state_dim, spec.action_dim
    flat[:ds] = t.s
    flat[ds:ds + da] = t.a
    flat[ds + da] = t.r
    flat[ds + da + 1:] = t.s2
    return flat


def decode(flat: np.ndarray, spec: SpaceSpec, done: bool = False,
           episode_id: int = 0, step_idx: int = 0) -> Transition:
    """Unpack a flat vector produced by `encode`.

    Round-trips bitwise: decode(encode(t)) reproduces every component of
    t exactly.  The metadata fields are not part of the vector and must
    be supplied by the caller when they matter.
    """
    flat = np.asarray(flat, dtype=np.float64)
    if flat.shape != (spec.flat_dim,):
        raise InvalidInputError(
            f"flat vector has shape {flat.shape}, expected ({spec.flat_dim},)"
        )
    ds, da = spec.state_dim, spec.action_dim
    return Transition(
        s=flat[:ds].copy(),
        a=flat[ds:ds + da].copy(),
        r=float(flat[ds + da]),
        s2=flat[ds + da + 1:].copy(),
        done=bool(done),
        episode_id=int(episode_id),
        step_idx=int(step_idx),
    )
