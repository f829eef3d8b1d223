"""Twin-critic deterministic policy gradient with delayed actor updates.

The agent holds six networks: actor, two critics, and a slow-moving
target copy of each.  Critic targets use the smaller of the two target
critics evaluated at a smoothed target action; the actor and all target
networks update only every `policy_delay` gradient steps.  Optimization
is plain SGD by default, with Adam available behind a config switch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SpaceSpec
from .errors import InvalidConfigError, InvalidInputError
from .nets import DenseNet, make_optimizer, polyak_update
from .strategies import TrainingBatch


@dataclass(frozen=True)
class TD3Config:
    """Agent hyperparameters.

    `random_steps` environment steps are taken uniformly at random before
    the policy is consulted; `replay_ratio` is the number of gradient
    steps per post-warmup environment step and is consumed by the harness
    loop rather than the agent itself.
    """

    actor_lr: float = 5e-4
    critic_lr: float = 5e-4
    tau: float = 0.005
    gamma: float = 0.99
    policy_delay: int = 2
    target_noise: float = 0.2
    target_noise_clip: float = 0.5
    exploration_noise: float = 0.1
    random_steps: int = 1000
    batch_size: int = 100
    hidden: tuple = (64, 64)
    optimizer: str = "sgd"
    replay_ratio: int = 1

    def __post_init__(self):
        if self.actor_lr < 0 or self.critic_lr < 0:
            raise InvalidConfigError("learning rates must be non-negative")
        if not 0.0 <= self.tau <= 1.0:
            raise InvalidConfigError(f"tau must lie in [0, 1], got {self.tau}")
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidConfigError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.policy_delay < 1:
            raise InvalidConfigError("policy_delay must be at least 1")
        if self.target_noise < 0 or self.target_noise_clip < 0:
            raise InvalidConfigError("target noise settings must be non-negative")
        if self.exploration_noise < 0:
            raise InvalidConfigError("exploration_noise must be non-negative")
        if self.random_steps < 0:
            raise InvalidConfigError("random_steps must be non-negative")
        if self.batch_size < 1:
            raise InvalidConfigError("batch_size must be at least 1")
        if len(self.hidden) < 1 or any(int(h) < 1 for h in self.hidden):
            raise InvalidConfigError("hidden must list positive layer widths")
        if self.optimizer not in ("sgd", "adam"):
            raise InvalidConfigError(
                f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}"
            )
        if self.replay_ratio < 1:
            raise InvalidConfigError("replay_ratio must be at least 1")


class TD3:
    """Actor-critic agent over flat-encoded batches.

    Parameters:
        spec: environment dimensions and action bounds.
        cfg: hyperparameters.
        seed: seeds network initialization and the target-noise stream.
            Exploration noise comes from the rng passed to `act`, so a
            paired experiment can share one exploration stream across
            agents.
    """

    def __init__(self, spec: SpaceSpec, cfg: TD3Config, seed: int):
        self.spec = spec
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        hidden = tuple(int(h) for h in cfg.hidden)
        ds, da = spec.state_dim, spec.action_dim
        self.actor = DenseNet((ds,) + hidden + (da,), self.rng,
                              out_low=spec.action_low, out_high=spec.action_high)
        self.q1 = DenseNet((ds + da,) + hidden + (1,), self.rng)
        self.q2 = DenseNet((ds + da,) + hidden + (1,), self.rng)
        self.actor_target = self.actor.copy()
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()
        self.actor_opt = make_optimizer(cfg.optimizer, cfg.actor_lr)
        self.q1_opt = make_optimizer(cfg.optimizer, cfg.critic_lr)
        self.q2_opt = make_optimizer(cfg.optimizer, cfg.critic_lr)
        self.update_counter = 0
        self.env_steps = 0

    # -- acting -----------------------------------------------------------

    def act(self, s: np.ndarray, explore: bool,
            rng: np.random.Generator | None = None) -> np.ndarray:
        """Action for one state.

        With `explore`, the first `random_steps` environment steps return
        uniform actions and later steps add clipped Gaussian noise; both
        draw from the supplied rng.  Without `explore` the policy output
        is returned as-is (it already lies inside the action box).
        """
        s = np.asarray(s, dtype=np.float64)
        if s.shape != (self.spec.state_dim,):
            raise InvalidInputError(
                f"act expects a ({self.spec.state_dim},) state, got {s.shape}"
            )
        low, high = self.spec.action_low, self.spec.action_high
        if explore:
            if rng is None:
                raise InvalidInputError("exploration requires an rng")
            if self.env_steps < self.cfg.random_steps:
                return rng.uniform(low, high)
        a = self.actor.forward(s[None])[0]
        if explore and self.cfg.exploration_noise > 0.0:
            a = a + rng.normal(0.0, self.cfg.exploration_noise,
                               size=self.spec.action_dim)
            a = np.clip(a, low, high)
        return a

    # -- learning ---------------------------------------------------------

    def _split(self, flats: np.ndarray):
        ds, da = self.spec.state_dim, self.spec.action_dim
        s = flats[:, :ds]
        a = flats[:, ds:ds + da]
        r = flats[:, ds + da]
        s2 = flats[:, ds + da + 1:]
        return s, a, r, s2

    def compute_targets(self, batch: TrainingBatch) -> np.ndarray:
        """Bootstrapped critic targets y for a batch.

        y = r for terminal rows, exactly; otherwise
        y = r + gamma * min(Q1', Q2') at a smoothed target action.
        Consumes the agent's own rng for the smoothing noise.
        """
        cfg = self.cfg
        s, a, r, s2 = self._split(batch.flats)
        n = batch.flats.shape[0]
        da = self.spec.action_dim
        noise = self.rng.normal(0.0, cfg.target_noise, size=(n, da))
        np.clip(noise, -cfg.target_noise_clip, cfg.target_noise_clip, out=noise)
        a2 = self.actor_target.forward(s2) + noise
        np.clip(a2, self.spec.action_low, self.spec.action_high, out=a2)
        sa2 = np.concatenate([s2, a2], axis=1)
        qmin = np.minimum(self.q1_target.forward(sa2),
                          self.q2_target.forward(sa2))[:, 0]
        return np.where(batch.dones, r, r + cfg.gamma * qmin)

    def update(self, batch: TrainingBatch) -> dict:
        """One gradient step on the critics, plus the delayed actor step.

        Critic loss is the importance-weighted mean squared TD error.
        The reported td_errors are |(e1 + e2) / 2|, the magnitude of the
        mean of the two critics' errors, suitable for PER feedback.
        """
        if len(batch) == 0:
            raise InvalidInputError("cannot update on an empty batch")
        cfg = self.cfg
        s, a, r, s2 = self._split(batch.flats)
        n = len(batch)
        w = batch.importance_weights
        y = self.compute_targets(batch)

        sa = np.concatenate([s, a], axis=1)
        q1, c1 = self.q1.forward(sa, want_cache=True)
        q2, c2 = self.q2.forward(sa, want_cache=True)
        e1 = q1[:, 0] - y
        e2 = q2[:, 0] - y
        g1 = (2.0 / n) * (w * e1)[:, None]
        g2 = (2.0 / n) * (w * e2)[:, None]
        dw1, db1, _ = self.q1.backward(c1, g1)
        dw2, db2, _ = self.q2.backward(c2, g2)
        self.q1_opt.step(self.q1.params(), _interleave(dw1, db1))
        self.q2_opt.step(self.q2.params(), _interleave(dw2, db2))

        out = {
            "td_errors": np.abs(0.5 * (e1 + e2)),
            "q1_loss": float(np.mean(w * e1 * e1)),
            "q2_loss": float(np.mean(w * e2 * e2)),
            "actor_loss": None,
        }

        self.update_counter += 1
        if self.update_counter % cfg.policy_delay == 0:
            a_pi, actor_cache = self.actor.forward(s, want_cache=True)
            sa_pi = np.concatenate([s, a_pi], axis=1)
            q_pi, q_cache = self.q1.forward(sa_pi, want_cache=True)
            out["actor_loss"] = float(-np.mean(q_pi))
            grad_q = np.full((n, 1), -1.0 / n)
            _, _, d_input = self.q1.backward(q_cache, grad_q)
            d_action = d_input[:, self.spec.state_dim:]
            dwa, dba, _ = self.actor.backward(actor_cache, d_action)
            self.actor_opt.step(self.actor.params(), _interleave(dwa, dba))
            polyak_update(self.actor_target, self.actor, cfg.tau)
            polyak_update(self.q1_target, self.q1, cfg.tau)
            polyak_update(self.q2_target, self.q2, cfg.tau)
        return out


def _interleave(dws, dbs):
    out = []
    for dw, db in zip(dws, dbs):
        out.append(dw)
        out.append(db)
    return out
