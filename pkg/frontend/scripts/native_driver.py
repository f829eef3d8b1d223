"""Produce the equivalence fixture: a scripted op sequence plus its
native-side results.

Usage: python3 native_driver.py OUTDIR

Writes three files into OUTDIR:
    script.jsonl          create + 1000 inserts + 100 interleaved samples
    native_batches.jsonl  per sample, every batch array base64-encoded
    native_dump.txt       buffer text snapshot after the full sequence

The client test replays script.jsonl through the stdio binding and
byte-compares its batches and dump against these files.
"""
import json
import os
import sys

import numpy as np

from mixreplay.core import SpaceSpec, Transition
from mixreplay.server import _b64
from mixreplay.strategies import ReplayEngine, StrategyConfig

SPEC = {
    "state_dim": 3,
    "action_dim": 2,
    "action_low": [-1.0, -1.0],
    "action_high": [1.0, 1.0],
}
STRATEGY = {"kind": "nmer", "k": 10}
CAPACITY = 800
N_INSERTS = 1000
N_SAMPLES = 100
BATCH = 64


def build_script(rng):
    ops = [{"op": "create", "spec": SPEC, "strategy": STRATEGY,
            "capacity": CAPACITY}]
    for i in range(N_INSERTS):
        ops.append({
            "op": "insert",
            "s": [float(v) for v in rng.uniform(-1, 1, 3)],
            "a": [float(v) for v in rng.uniform(-1, 1, 2)],
            "r": float(rng.normal()),
            "s2": [float(v) for v in rng.uniform(-1, 1, 3)],
            "done": i % 13 == 12,
            "episode_id": i // 50,
            "step_idx": i % 50,
        })
        n_done = i + 1
        if n_done > 100 and (n_done - 100) % 9 == 0:
            j = (n_done - 100) // 9
            if j <= N_SAMPLES:
                ops.append({"op": "sample", "n": BATCH, "seed": 50_000 + j})
    assert sum(op["op"] == "sample" for op in ops) == N_SAMPLES
    return ops


def run_native(ops):
    engine = None
    batches = []
    for op in ops:
        if op["op"] == "create":
            spec = SpaceSpec(
                state_dim=op["spec"]["state_dim"],
                action_dim=op["spec"]["action_dim"],
                action_low=np.asarray(op["spec"]["action_low"]),
                action_high=np.asarray(op["spec"]["action_high"]),
            )
            engine = ReplayEngine(spec, op["capacity"],
                                  StrategyConfig(**op["strategy"]))
        elif op["op"] == "insert":
            engine.insert(Transition(
                s=np.asarray(op["s"]), a=np.asarray(op["a"]), r=op["r"],
                s2=np.asarray(op["s2"]), done=op["done"],
                episode_id=op["episode_id"], step_idx=op["step_idx"],
            ))
        elif op["op"] == "sample":
            b = engine.sample(op["n"], np.random.default_rng(op["seed"]))
            batches.append({
                "n": int(b.flats.shape[0]),
                "flats": _b64(b.flats),
                "dones": _b64(b.dones.astype(np.uint8)),
                "weights": _b64(b.importance_weights),
                "slots": _b64(b.source_slots),
                "interpolated": _b64(b.interpolated.astype(np.uint8)),
                "partners": _b64(b.partner_slots),
            })
    return engine, batches


def main():
    outdir = sys.argv[1]
    os.makedirs(outdir, exist_ok=True)
    ops = build_script(np.random.default_rng(20_240_817))
    engine, batches = run_native(ops)
    with open(os.path.join(outdir, "script.jsonl"), "w") as fh:
        for op in ops:
            fh.write(json.dumps(op) + "\n")
    with open(os.path.join(outdir, "native_batches.jsonl"), "w") as fh:
        for b in batches:
            fh.write(json.dumps(b) + "\n")
    engine.buffer.dump(os.path.join(outdir, "native_dump.txt"))
    print(f"wrote {len(ops)} ops, {len(batches)} batches, "
          f"{engine.buffer.count} live rows")


if __name__ == "__main__":
    main()
