"""Line-delimited JSON server exposing the replay engine over stdio.

One request object per line on stdin, one response object per line on
stdout.  Every request carries an `id` echoed back in the response and an
`op` naming the operation; responses carry `ok` plus either the result
fields or an `error` object with the engine's own message text.

Float arrays cross the boundary as base64 of their raw little-endian
bytes, so a value read on the other side is the identical float64 bit
pattern, not a decimal approximation.  Scalar floats ride as plain JSON
numbers; shortest-round-trip serialization on both sides makes that exact
for float64 too.

The protocol is versioned independently of the package: clients check
`version` before anything else and refuse a protocol they do not know.

Ops:
    version            -> engine version string, protocol number
    create             -> handle for a fresh buffer+strategy instance
    insert             -> store one transition through a handle
    sample             -> draw a batch; arrays plus a layout descriptor
    update_priorities  -> feed TD errors back (no-op unless PER)
    count              -> live transition count
    dump               -> exact text snapshot of buffer contents
    destroy            -> invalidate a handle
"""
from __future__ import annotations

import base64
import io
import json
import sys

import numpy as np

from .config import _STRATEGY_FIELDS
from .core import SpaceSpec, Transition
from .errors import InvalidConfigError, InvalidInputError, ReplayError
from .strategies import ReplayEngine, StrategyConfig

PROTOCOL_VERSION = 1

MAX_SEED = 2 ** 63 - 1


def _b64(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr).tobytes()).decode("ascii")


def _vector(params: dict, key: str) -> np.ndarray:
    v = params.get(key)
    if not isinstance(v, list):
        raise InvalidInputError(f"{key} must be a JSON array of numbers")
    return np.asarray(v, dtype=np.float64)


def _intfield(params: dict, key: str, default=None):
    v = params.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool):
        raise InvalidInputError(f"{key} must be an integer")
    return v


class EngineServer:
    """Dispatch table plus the handle registry behind it."""

    def __init__(self):
        self._engines: dict[int, ReplayEngine] = {}
        self._next_handle = 1

    # -- handle registry --------------------------------------------

    def _engine(self, params: dict) -> ReplayEngine:
        handle = _intfield(params, "handle")
        engine = self._engines.get(handle)
        if engine is None:
            raise InvalidInputError(f"invalid handle {handle}")
        return engine

    # -- operations --------------------------------------------------

    def op_version(self, params: dict) -> dict:
        from . import __version__
        return {"engine": __version__, "protocol": PROTOCOL_VERSION}

    def op_create(self, params: dict) -> dict:
        spec_obj = params.get("spec")
        if not isinstance(spec_obj, dict):
            raise InvalidInputError("create needs a spec object")
        spec = SpaceSpec(
            state_dim=_intfield(spec_obj, "state_dim"),
            action_dim=_intfield(spec_obj, "action_dim"),
            action_low=_vector(spec_obj, "action_low"),
            action_high=_vector(spec_obj, "action_high"),
        )
        strategy_obj = params.get("strategy") or {}
        if not isinstance(strategy_obj, dict):
            raise InvalidInputError("strategy must be an object")
        unknown = set(strategy_obj) - set(_STRATEGY_FIELDS)
        if unknown:
            raise InvalidConfigError(
                f"unknown strategy key {sorted(unknown)[0]!r}"
            )
        cfg = StrategyConfig(**strategy_obj)
        capacity = _intfield(params, "capacity")
        engine = ReplayEngine(spec, capacity, cfg)
        handle = self._next_handle
        self._next_handle += 1
        self._engines[handle] = engine
        return {
            "handle": handle,
            "echo": {
                "kind": cfg.kind,
                "k": cfg.k,
                "state_dim": spec.state_dim,
                "action_dim": spec.action_dim,
                "capacity": capacity,
            },
        }

    def op_insert(self, params: dict) -> dict:
        engine = self._engine(params)
        r = params.get("r")
        if not isinstance(r, (int, float)) or isinstance(r, bool):
            raise InvalidInputError("r must be a number")
        t = Transition(
            s=_vector(params, "s"),
            a=_vector(params, "a"),
            r=float(r),
            s2=_vector(params, "s2"),
            done=bool(params.get("done", False)),
            episode_id=_intfield(params, "episode_id", 0),
            step_idx=_intfield(params, "step_idx", 0),
        )
        slot = engine.insert(t)
        return {"slot": slot, "count": engine.buffer.count}

    def op_sample(self, params: dict) -> dict:
        engine = self._engine(params)
        n = _intfield(params, "n")
        seed = _intfield(params, "seed")
        if not 0 <= seed <= MAX_SEED:
            raise InvalidInputError(f"seed must lie in [0, 2^63), got {seed}")
        global_step = _intfield(params, "global_step", 0)
        batch = engine.sample(n, np.random.default_rng(seed), global_step)
        spec = engine.spec
        ds, da, fd = spec.state_dim, spec.action_dim, spec.flat_dim
        return {
            "batch": {
                "n": int(batch.flats.shape[0]),
                "flats": _b64(batch.flats),
                "dones": _b64(batch.dones.astype(np.uint8)),
                "weights": _b64(batch.importance_weights),
                "slots": _b64(batch.source_slots),
                "interpolated": _b64(batch.interpolated.astype(np.uint8)),
                "partners": _b64(batch.partner_slots),
            },
            "layout": {
                "flat_dim": fd,
                "state": [0, ds],
                "action": [ds, ds + da],
                "reward": [ds + da, ds + da + 1],
                "next_state": [ds + da + 1, fd],
            },
        }

    def op_update_priorities(self, params: dict) -> dict:
        engine = self._engine(params)
        slots = params.get("slots")
        tds = params.get("td_errors")
        if not isinstance(slots, list) or not isinstance(tds, list):
            raise InvalidInputError("slots and td_errors must be JSON arrays")
        engine.update_priorities(np.asarray(slots, dtype=np.int64),
                                 np.asarray(tds, dtype=np.float64))
        return {}

    def op_count(self, params: dict) -> dict:
        return {"count": self._engine(params).buffer.count}

    def op_dump(self, params: dict) -> dict:
        engine = self._engine(params)
        out = io.StringIO()
        engine.buffer.dump(out)
        return {"text": out.getvalue()}

    def op_destroy(self, params: dict) -> dict:
        handle = _intfield(params, "handle")
        if self._engines.pop(handle, None) is None:
            raise InvalidInputError(f"invalid handle {handle}")
        return {}

    # -- framing -----------------------------------------------------

    def handle_line(self, line: str) -> str:
        req_id = None
        try:
            req = json.loads(line)
            if not isinstance(req, dict):
                raise InvalidInputError("request must be a JSON object")
            req_id = req.get("id")
            op = req.get("op")
            method = getattr(self, f"op_{op}", None) if isinstance(op, str) \
                else None
            if method is None:
                raise InvalidInputError(f"unknown op {op!r}")
            result = method(req)
            result["id"] = req_id
            result["ok"] = True
            return json.dumps(result)
        except json.JSONDecodeError as exc:
            err = {"kind": "ProtocolError", "message": str(exc)}
        except ReplayError as exc:
            err = {"kind": type(exc).__name__, "message": str(exc)}
        except (TypeError, ValueError, KeyError) as exc:
            err = {"kind": "ProtocolError", "message": str(exc)}
        return json.dumps({"id": req_id, "ok": False, "error": err})


def serve(stdin=None, stdout=None) -> int:
    """Serve requests until stdin closes.  Returns the exit code."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    server = EngineServer()
    for line in stdin:
        if not line.strip():
            continue
        stdout.write(server.handle_line(line) + "\n")
        stdout.flush()
    return 0
