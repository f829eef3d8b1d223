"""Shared builders for test buffers and specs."""
import numpy as np

from mixreplay.buffer import RingBuffer
from mixreplay.core import SpaceSpec, Transition
from mixreplay.moments import RunningMoments


def make_spec(ds=3, da=2, low=-1.0, high=1.0):
    return SpaceSpec(
        state_dim=ds,
        action_dim=da,
        action_low=np.full(da, low),
        action_high=np.full(da, high),
    )


def random_transition(rng, spec, episode_id=0, step_idx=0, done=False):
    return Transition(
        s=rng.normal(size=spec.state_dim),
        a=rng.uniform(spec.action_low, spec.action_high),
        r=float(rng.normal()),
        s2=rng.normal(size=spec.state_dim),
        done=done,
        episode_id=episode_id,
        step_idx=step_idx,
    )


def fill_buffer(rng, spec, n, capacity=None, terminal_every=0,
                episode_len=50):
    """Buffer with n random transitions plus matching feature moments.

    terminal_every > 0 marks every that-many-th insert as terminal.
    Episodes advance every `episode_len` steps so successor lookups see
    realistic (episode_id, step_idx) structure.
    """
    buf = RingBuffer(spec, capacity or n)
    moments = RunningMoments(spec.feature_dim)
    for i in range(n):
        done = terminal_every > 0 and (i + 1) % terminal_every == 0
        t = random_transition(rng, spec, episode_id=i // episode_len,
                              step_idx=i % episode_len, done=done)
        slot = buf.insert(t)
        moments.update(buf.features[slot])
    return buf, moments
