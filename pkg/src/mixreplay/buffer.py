"""Fixed-capacity ring buffer over flat-encoded transitions.

Transitions live in one contiguous float64 matrix, one row per slot, in
the [state | action | reward | next_state] layout from `core`.  Slots are
reused FIFO once the buffer is full.  Sampling is with replacement.
"""
from __future__ import annotations

from typing import IO, Optional, Union

import numpy as np

from .core import SpaceSpec, Transition, decode, encode
from .errors import EmptyBufferError, InvalidInputError

_DUMP_MAGIC = "mixreplay-buffer"
_DUMP_VERSION = 1


class RingBuffer:
    """Circular transition store with O(1) insert and successor lookup.

    Parameters:
        spec: dimensions and bounds of the stored transitions.
        capacity: maximum number of transitions held at once, at least 1.
    """

    def __init__(self, spec: SpaceSpec, capacity: int):
        if capacity < 1:
            raise InvalidInputError(f"capacity must be at least 1, got {capacity}")
        self.spec = spec
        self.capacity = int(capacity)
        self.count = 0
        self.insert_counter = 0  # total inserts ever, monotone
        self._head = 0
        self._flat = np.zeros((capacity, spec.flat_dim), dtype=np.float64)
        self._done = np.zeros(capacity, dtype=np.bool_)
        self._episode_id = np.zeros(capacity, dtype=np.int64)
        self._step_idx = np.zeros(capacity, dtype=np.int64)
        self._insert_order = np.zeros(capacity, dtype=np.int64)
        # (episode_id, step_idx) -> slot, kept in lockstep with eviction
        self._by_step: dict[tuple[int, int], int] = {}

    def __len__(self) -> int:
        return self.count

    # -- writes ---------------------------------------------------------

    def insert(self, t: Transition) -> int:
        """Store a transition, evicting the oldest slot when full.

        Returns the slot index the transition now occupies.
        """
        t = t.validate(self.spec)
        slot = self._head
        if self.count == self.capacity:
            old_key = (int(self._episode_id[slot]), int(self._step_idx[slot]))
            if self._by_step.get(old_key) == slot:
                del self._by_step[old_key]
        self._flat[slot] = encode(t, self.spec)
        self._done[slot] = t.done
        self._episode_id[slot] = t.episode_id
        self._step_idx[slot] = t.step_idx
        self._insert_order[slot] = self.insert_counter
        self._by_step[(t.episode_id, t.step_idx)] = slot
        self._head = (self._head + 1) % self.capacity
        self.count = min(self.count + 1, self.capacity)
        self.insert_counter += 1
        return slot

    # -- reads ----------------------------------------------------------

    def _check_slot(self, slot: int) -> int:
        slot = int(slot)
        if not 0 <= slot < self.count:
            raise InvalidInputError(f"slot {slot} outside live range [0, {self.count})")
        return slot

    def get(self, slot: int) -> Transition:
        """Decode the transition stored at `slot`."""
        slot = self._check_slot(slot)
        return decode(self._flat[slot], self.spec, bool(self._done[slot]),
                      int(self._episode_id[slot]), int(self._step_idx[slot]))

    def flat(self, slot: int) -> np.ndarray:
        """Copy of the stored flat vector at `slot`."""
        slot = self._check_slot(slot)
        return self._flat[slot].copy()

    def encode_batch(self, slots: np.ndarray) -> np.ndarray:
        """Flat vectors for a batch of slots, one row each."""
        slots = np.asarray(slots, dtype=np.int64)
        if slots.size and (slots.min() < 0 or slots.max() >= self.count):
            raise InvalidInputError("slot batch outside live range")
        return self._flat[slots].copy()

    @property
    def flats(self) -> np.ndarray:
        """Read-only view of all live flat vectors (count rows)."""
        return self._flat[:self.count]

    @property
    def features(self) -> np.ndarray:
        """Read-only view of the live [state | action] prefixes."""
        return self._flat[:self.count, :self.spec.feature_dim]

    @property
    def dones(self) -> np.ndarray:
        return self._done[:self.count]

    @property
    def episode_ids(self) -> np.ndarray:
        return self._episode_id[:self.count]

    @property
    def step_idxs(self) -> np.ndarray:
        return self._step_idx[:self.count]

    @property
    def insert_order(self) -> np.ndarray:
        """Per-slot insert counter; older transitions carry smaller values."""
        return self._insert_order[:self.count]

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n slots uniformly with replacement."""
        if n < 0:
            raise InvalidInputError(f"sample size must be non-negative, got {n}")
        if n == 0:
            return np.empty(0, dtype=np.int64)
        if self.count == 0:
            raise EmptyBufferError("cannot sample from an empty buffer")
        return rng.integers(0, self.count, size=n, dtype=np.int64)

    def successor(self, slot: int) -> Optional[int]:
        """Slot holding the next step of the same episode, if still stored."""
        slot = self._check_slot(slot)
        key = (int(self._episode_id[slot]), int(self._step_idx[slot]) + 1)
        return self._by_step.get(key)

    # -- persistence ----------------------------------------------------

    def dump(self, fp: Union[str, IO[str]]) -> None:
        """Write live transitions to a line-delimited text file.

        The header records the layout; each following line holds the flat
        fields in [s | a | r | s2] order, then done, episode_id, step_idx.
        Rows appear oldest first so a restore reproduces insertion order.
        Floats are written with repr, which round-trips float64 exactly.
        """
        if isinstance(fp, str):
            with open(fp, "w") as fh:
                self.dump(fh)
            return
        fp.write(f"{_DUMP_MAGIC} v{_DUMP_VERSION} "
                 f"state_dim={self.spec.state_dim} action_dim={self.spec.action_dim}\n")
        order = np.argsort(self._insert_order[:self.count], kind="stable")
        for slot in order:
            fields = [repr(float(v)) for v in self._flat[slot]]
            fields.append("1" if self._done[slot] else "0")
            fields.append(str(int(self._episode_id[slot])))
            fields.append(str(int(self._step_idx[slot])))
            fp.write(" ".join(fields) + "\n")

    @classmethod
    def restore(cls, fp: Union[str, IO[str]], spec: SpaceSpec,
                capacity: Optional[int] = None) -> "RingBuffer":
        """Rebuild a buffer from `dump` output.

        The file's dimensions must match `spec`.  Capacity defaults to the
        number of stored rows; a smaller capacity keeps only the newest rows,
        matching what a live buffer of that size would have retained.
        """
        if isinstance(fp, str):
            with open(fp) as fh:
                return cls.restore(fh, spec, capacity)
        header = fp.readline().strip()
        parts = header.split()
        if (len(parts) != 4 or parts[0] != _DUMP_MAGIC
                or parts[1] != f"v{_DUMP_VERSION}"):
            raise InvalidInputError(f"unrecognized buffer dump header: {header!r}")
        dims = dict(p.split("=", 1) for p in parts[2:])
        if (int(dims["state_dim"]) != spec.state_dim
                or int(dims["action_dim"]) != spec.action_dim):
            raise InvalidInputError(
                f"dump dimensions {dims} do not match spec "
                f"({spec.state_dim}, {spec.action_dim})"
            )
        rows = []
        for line in fp:
            line = line.strip()
            if not line:
                continue
            vals = line.split()
            if len(vals) != spec.flat_dim + 3:
                raise InvalidInputError(
                    f"dump row has {len(vals)} fields, expected {spec.flat_dim + 3}"
                )
            flat = np.array([float(v) for v in vals[:spec.flat_dim]], dtype=np.float64)
            done = vals[spec.flat_dim] == "1"
            episode_id = int(vals[spec.flat_dim + 1])
            step_idx = int(vals[spec.flat_dim + 2])
            rows.append((flat, done, episode_id, step_idx))
        buf = cls(spec, capacity if capacity is not None else max(len(rows), 1))
        for flat, done, episode_id, step_idx in rows:
            buf.insert(decode(flat, spec, done, episode_id, step_idx))
        return buf
