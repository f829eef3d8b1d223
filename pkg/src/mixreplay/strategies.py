"""Batch sampling strategies over the ring buffer.

Eight interchangeable samplers produce `TrainingBatch` objects:

    uniform      plain uniform draws
    per          proportional prioritized replay with importance weights
    ct           blend each draw with its in-episode successor
    nmer         blend each draw with one of its k nearest neighbors
    knn1_mixup   nmer restricted to the single nearest neighbor
    naive_mixup  nmer widened to the entire buffer (k = count - 1)
    s4rl         replace the state with a blend of state and next state
    noisy        add per-dimension Gaussian noise scaled to buffer spread

All samplers draw their randomness in a fixed order (slots first, then
per-item auxiliaries), so a seeded generator reproduces batches exactly.
Cross-transition blends never involve a terminal endpoint: those draws
fall back to the untouched stored transition.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .buffer import RingBuffer
from .core import SpaceSpec, Transition, encode
from .errors import (EmptyBufferError, InsufficientPopulationError,
                     InvalidConfigError, InvalidInputError)
from .interpolation import mixup_batch
from .moments import RunningMoments
from .neighbors import knn_batch
from .sumtree import SumTree

STRATEGY_KINDS = ("uniform", "per", "ct", "nmer", "knn1_mixup",
                  "naive_mixup", "s4rl", "noisy")

# once the buffer has wrapped, streamed moments still remember evicted
# rows; refresh them from live contents this often
MOMENTS_RECOMPUTE_INTERVAL = 10_000


@dataclass(frozen=True)
class StrategyConfig:
    """Configuration shared by every sampler; unused knobs are ignored.

    Parameters:
        kind: one of STRATEGY_KINDS.
        k: neighborhood size for nmer.
        alpha: Beta(alpha, alpha) parameter for all blend weights.
        interp_fraction: share of nmer-family draws that blend at all;
            the remainder pass through as plain uniform draws.
        exclude_self: whether a transition is barred from being its own
            neighbor.
        per_alpha: priority exponent, priority = (|td| + per_epsilon)^per_alpha.
        per_beta_initial / per_beta_final: importance-weight exponent,
            annealed linearly over per_beta_anneal_steps environment steps.
        per_epsilon: additive floor keeping priorities positive.
        noise_sigma_scale: noisy-sampler scale; each flat dimension gets
            Gaussian noise with sd = scale * that dimension's buffer sd.
    """

    kind: str = "uniform"
    k: int = 10
    alpha: float = 1.0
    interp_fraction: float = 1.0
    exclude_self: bool = True
    per_alpha: float = 0.6
    per_beta_initial: float = 0.4
    per_beta_final: float = 0.4
    per_beta_anneal_steps: int = 20_000
    per_epsilon: float = 1e-6
    noise_sigma_scale: float = 0.1

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise InvalidConfigError(
                f"unknown strategy kind {self.kind!r}, expected one of {STRATEGY_KINDS}"
            )
        if self.k < 1:
            raise InvalidConfigError(f"k must be at least 1, got {self.k}")
        if not (np.isfinite(self.alpha) and self.alpha > 0.0):
            raise InvalidConfigError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 <= self.interp_fraction <= 1.0:
            raise InvalidConfigError(
                f"interp_fraction must lie in [0, 1], got {self.interp_fraction}"
            )
        if self.per_alpha < 0.0:
            raise InvalidConfigError(f"per_alpha must be >= 0, got {self.per_alpha}")
        for name in ("per_beta_initial", "per_beta_final"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.per_beta_anneal_steps < 1:
            raise InvalidConfigError(
                f"per_beta_anneal_steps must be >= 1, got {self.per_beta_anneal_steps}"
            )
        if self.per_epsilon <= 0.0:
            raise InvalidConfigError(
                f"per_epsilon must be positive, got {self.per_epsilon}"
            )
        if self.noise_sigma_scale < 0.0:
            raise InvalidConfigError(
                f"noise_sigma_scale must be >= 0, got {self.noise_sigma_scale}"
            )


@dataclass
class TrainingBatch:
    """One sampled batch in flat encoding.

    `importance_weights` are all ones except under PER.  `interpolated`
    marks rows holding synthetic vectors rather than stored transitions;
    residual analysis keys off it.  `source_slots` feed PER priority
    updates back to the tree.  `partner_slots` records which stored
    transition a blended row was mixed with, -1 where no cross-transition
    blend happened.
    """

    flats: np.ndarray
    dones: np.ndarray
    importance_weights: np.ndarray
    source_slots: np.ndarray
    interpolated: np.ndarray
    partner_slots: np.ndarray

    def __len__(self) -> int:
        return self.flats.shape[0]


def _empty_batch(flat_dim: int) -> TrainingBatch:
    return TrainingBatch(
        flats=np.empty((0, flat_dim), dtype=np.float64),
        dones=np.empty(0, dtype=np.bool_),
        importance_weights=np.empty(0, dtype=np.float64),
        source_slots=np.empty(0, dtype=np.int64),
        interpolated=np.empty(0, dtype=np.bool_),
        partner_slots=np.empty(0, dtype=np.int64),
    )


def _raw_batch(buf: RingBuffer, slots: np.ndarray) -> TrainingBatch:
    n = slots.shape[0]
    return TrainingBatch(
        flats=buf.encode_batch(slots),
        dones=buf.dones[slots].copy(),
        importance_weights=np.ones(n, dtype=np.float64),
        source_slots=slots,
        interpolated=np.zeros(n, dtype=np.bool_),
        partner_slots=np.full(n, -1, dtype=np.int64),
    )


def sample_uniform_batch(buf: RingBuffer, n: int,
                         rng: np.random.Generator) -> TrainingBatch:
    """n independent uniform draws, stored vectors untouched."""
    if n == 0:
        return _empty_batch(buf.spec.flat_dim)
    return _raw_batch(buf, buf.sample_uniform(n, rng))


def _mix_with_neighbors(buf: RingBuffer, slots: np.ndarray,
                        neighbor_of: np.ndarray, gate: np.ndarray,
                        lams: np.ndarray) -> TrainingBatch:
    """Assemble a batch that blends slot i with neighbor_of[i] where allowed.

    A row passes through raw when its gate is off, or when either endpoint
    is terminal.  Blended rows are never terminal.
    """
    dones = buf.dones
    sample_done = dones[slots]
    neighbor_done = dones[neighbor_of]
    blend = gate & ~sample_done & ~neighbor_done
    x1 = buf.encode_batch(slots)
    out = x1.copy()
    if np.any(blend):
        x2 = buf.encode_batch(neighbor_of[blend])
        out[blend] = mixup_batch(x1[blend], x2, lams[blend])
    n = slots.shape[0]
    return TrainingBatch(
        flats=out,
        dones=sample_done & ~blend,
        importance_weights=np.ones(n, dtype=np.float64),
        source_slots=slots,
        interpolated=blend,
        partner_slots=np.where(blend, neighbor_of, -1),
    )


def sample_nmer_batch(buf: RingBuffer, moments: RunningMoments,
                      cfg: StrategyConfig, n: int, rng: np.random.Generator,
                      k_override: int | None = None) -> TrainingBatch:
    """Uniform draws, each blended with one of its k nearest neighbors.

    Neighborhoods are found in standardized [state | action] space over
    the whole live buffer.  Per item the draw order is fixed: slot, gate
    (only when interp_fraction < 1), neighbor pick, blend weight.
    """
    if n == 0:
        return _empty_batch(buf.spec.flat_dim)
    k = cfg.k if k_override is None else k_override
    slots = buf.sample_uniform(n, rng)
    if cfg.interp_fraction == 0.0:
        return _raw_batch(buf, slots)
    gate = (rng.random(n) < cfg.interp_fraction
            if cfg.interp_fraction < 1.0 else np.ones(n, dtype=np.bool_))
    picks = rng.integers(0, k, size=n)
    lams = rng.beta(cfg.alpha, cfg.alpha, size=n)
    exclude = slots if cfg.exclude_self else np.full(n, -1, dtype=np.int64)
    neighbors = knn_batch(buf, moments, buf.features[slots], k, exclude)
    neighbor_of = neighbors[np.arange(n), picks]
    return _mix_with_neighbors(buf, slots, neighbor_of, gate, lams)


def sample_knn1_batch(buf: RingBuffer, moments: RunningMoments,
                      cfg: StrategyConfig, n: int,
                      rng: np.random.Generator) -> TrainingBatch:
    """nmer with the neighborhood collapsed to the single nearest point."""
    return sample_nmer_batch(buf, moments, cfg, n, rng, k_override=1)


def sample_naive_batch(buf: RingBuffer, cfg: StrategyConfig, n: int,
                       rng: np.random.Generator) -> TrainingBatch:
    """Blend each draw with a partner chosen uniformly from the buffer.

    Equivalent in law to nmer with k = count - 1 (every other transition
    is a neighbor), without paying for a full sort.
    """
    if n == 0:
        return _empty_batch(buf.spec.flat_dim)
    if buf.count < (2 if cfg.exclude_self else 1):
        raise InsufficientPopulationError(
            "naive mixup needs a partner transition to blend with"
        )
    slots = buf.sample_uniform(n, rng)
    if cfg.interp_fraction == 0.0:
        return _raw_batch(buf, slots)
    gate = (rng.random(n) < cfg.interp_fraction
            if cfg.interp_fraction < 1.0 else np.ones(n, dtype=np.bool_))
    if cfg.exclude_self:
        picks = rng.integers(0, buf.count - 1, size=n)
        partners = picks + (picks >= slots)  # skip over the sampled slot
    else:
        partners = rng.integers(0, buf.count, size=n)
    lams = rng.beta(cfg.alpha, cfg.alpha, size=n)
    return _mix_with_neighbors(buf, slots, partners, gate, lams)


def sample_ct_batch(buf: RingBuffer, cfg: StrategyConfig, n: int,
                    rng: np.random.Generator) -> TrainingBatch:
    """Blend each draw with its successor step from the same episode.

    Draws whose successor has been evicted (or never stored) and draws
    touching a terminal endpoint pass through raw.
    """
    if n == 0:
        return _empty_batch(buf.spec.flat_dim)
    slots = buf.sample_uniform(n, rng)
    lams = rng.beta(cfg.alpha, cfg.alpha, size=n)
    partners = np.empty(n, dtype=np.int64)
    gate = np.empty(n, dtype=np.bool_)
    for i in range(n):
        succ = buf.successor(int(slots[i]))
        if succ is None:
            partners[i] = slots[i]  # placeholder, gated off
            gate[i] = False
        else:
            partners[i] = succ
            gate[i] = True
    return _mix_with_neighbors(buf, slots, partners, gate, lams)


def sample_s4rl_batch(buf: RingBuffer, cfg: StrategyConfig, n: int,
                      rng: np.random.Generator) -> TrainingBatch:
    """Blend each draw's state with its own next state, within-transition.

    Action, reward, next state, and the terminal flag stay untouched, so
    the augmentation never crosses transition boundaries.
    """
    if n == 0:
        return _empty_batch(buf.spec.flat_dim)
    slots = buf.sample_uniform(n, rng)
    lams = rng.beta(cfg.alpha, cfg.alpha, size=n)
    ds = buf.spec.state_dim
    da = buf.spec.action_dim
    flats = buf.encode_batch(slots)
    flats[:, :ds] = mixup_batch(flats[:, :ds], flats[:, ds + da + 1:], lams)
    return TrainingBatch(
        flats=flats,
        dones=buf.dones[slots].copy(),
        importance_weights=np.ones(n, dtype=np.float64),
        source_slots=slots,
        interpolated=np.ones(n, dtype=np.bool_),
        partner_slots=np.full(n, -1, dtype=np.int64),
    )


def sample_noisy_batch(buf: RingBuffer, flat_moments: RunningMoments,
                       cfg: StrategyConfig, n: int,
                       rng: np.random.Generator) -> TrainingBatch:
    """Add zero-mean Gaussian noise to every flat component of each draw.

    Per dimension j the noise sd is noise_sigma_scale * std_j, where
    std_j is the running spread of that flat dimension, so constant
    dimensions stay constant.  Terminal flags are untouched.
    """
    if n == 0:
        return _empty_batch(buf.spec.flat_dim)
    slots = buf.sample_uniform(n, rng)
    sigma = cfg.noise_sigma_scale * flat_moments.std
    flats = buf.encode_batch(slots)
    flats += rng.normal(0.0, 1.0, size=flats.shape) * sigma
    return TrainingBatch(
        flats=flats,
        dones=buf.dones[slots].copy(),
        importance_weights=np.ones(n, dtype=np.float64),
        source_slots=slots,
        interpolated=np.ones(n, dtype=np.bool_),
        partner_slots=np.full(n, -1, dtype=np.int64),
    )


def per_beta(cfg: StrategyConfig, global_step: int) -> float:
    """Importance exponent after `global_step` environment steps."""
    frac = min(1.0, max(0.0, global_step / cfg.per_beta_anneal_steps))
    return cfg.per_beta_initial + (cfg.per_beta_final - cfg.per_beta_initial) * frac


def sample_per_batch(buf: RingBuffer, tree: SumTree, cfg: StrategyConfig,
                     n: int, global_step: int,
                     rng: np.random.Generator) -> TrainingBatch:
    """Priority-proportional draws with max-normalized importance weights.

    w_i = (count * P(i))^(-beta), divided by the largest weight in the
    batch so weights stay in (0, 1].
    """
    if n == 0:
        return _empty_batch(buf.spec.flat_dim)
    if buf.count == 0:
        raise EmptyBufferError("cannot sample from an empty buffer")
    slots = tree.sample(n, rng)
    total = tree.total
    probs = tree.leaves[slots] / total
    beta = per_beta(cfg, global_step)
    weights = (buf.count * probs) ** (-beta)
    weights /= weights.max()
    batch = _raw_batch(buf, slots)
    batch.importance_weights = weights
    return batch


def update_per_priorities(tree: SumTree, slots: np.ndarray,
                          td_errors: np.ndarray, cfg: StrategyConfig) -> None:
    """Refresh leaf priorities to (|td| + per_epsilon)^per_alpha."""
    slots = np.asarray(slots, dtype=np.int64)
    td_errors = np.asarray(td_errors, dtype=np.float64)
    if slots.shape != td_errors.shape:
        raise InvalidInputError("slots and td_errors must align")
    if td_errors.size and not np.all(np.isfinite(td_errors)):
        raise InvalidInputError("td_errors must be finite")
    tree.set_batch(slots, (np.abs(td_errors) + cfg.per_epsilon) ** cfg.per_alpha)


class ReplayEngine:
    """Buffer, moments, and strategy wired into one insert/sample surface.

    Owns the bookkeeping every strategy needs: feature moments for
    standardized neighborhoods, full flat-vector moments for the noisy
    sampler, the priority tree under PER, and the periodic exact moment
    refresh once the ring has wrapped.
    """

    def __init__(self, spec: SpaceSpec, capacity: int, cfg: StrategyConfig):
        self.spec = spec
        self.cfg = cfg
        self.buffer = RingBuffer(spec, capacity)
        self.feature_moments = RunningMoments(spec.feature_dim)
        self.flat_moments = RunningMoments(spec.flat_dim)
        self.tree = SumTree(capacity) if cfg.kind == "per" else None

    @classmethod
    def from_buffer(cls, buf: RingBuffer, cfg: StrategyConfig) -> "ReplayEngine":
        """Engine over an existing buffer, with statistics rebuilt.

        Restored buffers carry no priority history, so under PER every
        occupied slot starts at priority 1.
        """
        engine = cls(buf.spec, buf.capacity, cfg)
        engine.buffer = buf
        if buf.count:
            engine.feature_moments.recompute_full(buf.features)
            engine.flat_moments.recompute_full(buf.flats)
            if engine.tree is not None:
                engine.tree.set_batch(np.arange(buf.count),
                                      np.ones(buf.count))
        return engine

    def insert(self, t: Transition) -> int:
        """Store a transition and fold it into every running statistic."""
        slot = self.buffer.insert(t)
        flat = self.buffer.flats[slot]
        self.feature_moments.update(flat[:self.spec.feature_dim])
        self.flat_moments.update(flat)
        if self.tree is not None:
            self.tree.set(slot, self.tree.max_priority_seen)
        buf = self.buffer
        if (buf.count == buf.capacity
                and buf.insert_counter % MOMENTS_RECOMPUTE_INTERVAL == 0):
            self.feature_moments.recompute_full(buf.features)
            self.flat_moments.recompute_full(buf.flats)
        return slot

    def sample(self, n: int, rng: np.random.Generator,
               global_step: int = 0) -> TrainingBatch:
        """Draw a batch with this engine's strategy."""
        kind = self.cfg.kind
        if kind == "uniform":
            return sample_uniform_batch(self.buffer, n, rng)
        if kind == "per":
            return sample_per_batch(self.buffer, self.tree, self.cfg, n,
                                    global_step, rng)
        if kind == "ct":
            return sample_ct_batch(self.buffer, self.cfg, n, rng)
        if kind == "nmer":
            return sample_nmer_batch(self.buffer, self.feature_moments,
                                     self.cfg, n, rng)
        if kind == "knn1_mixup":
            return sample_knn1_batch(self.buffer, self.feature_moments,
                                     self.cfg, n, rng)
        if kind == "naive_mixup":
            return sample_naive_batch(self.buffer, self.cfg, n, rng)
        if kind == "s4rl":
            return sample_s4rl_batch(self.buffer, self.cfg, n, rng)
        if kind == "noisy":
            return sample_noisy_batch(self.buffer, self.flat_moments,
                                      self.cfg, n, rng)
        raise InvalidConfigError(f"unknown strategy kind {kind!r}")

    def update_priorities(self, slots: np.ndarray,
                          td_errors: np.ndarray) -> None:
        """Feed TD errors back; a no-op for every strategy except PER."""
        if self.tree is not None:
            update_per_priorities(self.tree, slots, td_errors, self.cfg)
