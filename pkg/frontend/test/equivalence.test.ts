/**
 * Replays a scripted sequence (1000 inserts, 100 sampled batches) through
 * the binding and requires bit-for-bit agreement with the native engine
 * driving the identical sequence in-process: every batch array byte
 * equal, every decoded float === equal, and the final buffer dumps
 * identical.
 */
import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, expect, it } from "vitest";

import {
  ReplayClient,
  decodeFloat64,
  type BufferHandle,
  type ReplaySpec,
  type StrategyOptions,
  type WireBatch,
} from "../src/index.js";

const DRIVER = fileURLToPath(
  new URL("../scripts/native_driver.py", import.meta.url)
);
const PYTHON = process.env["MIXREPLAY_PYTHON"] ?? "python3";

interface ScriptCreate {
  op: "create";
  spec: {
    state_dim: number;
    action_dim: number;
    action_low: number[];
    action_high: number[];
  };
  strategy: { kind: StrategyOptions["kind"]; k: number };
  capacity: number;
}

interface ScriptInsert {
  op: "insert";
  s: number[];
  a: number[];
  r: number;
  s2: number[];
  done: boolean;
  episode_id: number;
  step_idx: number;
}

interface ScriptSample {
  op: "sample";
  n: number;
  seed: number;
}

type ScriptOp = ScriptCreate | ScriptInsert | ScriptSample;

let client: ReplayClient;
let workDir: string;

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "mixreplay-equiv-"));
  execFileSync(PYTHON, [DRIVER, workDir], { stdio: "inherit" });
  client = await ReplayClient.spawn();
});

afterAll(async () => {
  await client.close();
});

function readJsonl<T>(path: string): T[] {
  return readFileSync(path, "utf8")
    .split("\n")
    .filter((line) => line.length > 0)
    .map((line) => JSON.parse(line) as T);
}

it("[criterion 11] binding matches the native sequence bit-for-bit", async () => {
  const ops = readJsonl<ScriptOp>(join(workDir, "script.jsonl"));
  const nativeBatches = readJsonl<WireBatch>(
    join(workDir, "native_batches.jsonl")
  );

  let buf: BufferHandle | undefined;
  const mineBatches: WireBatch[] = [];
  for (const op of ops) {
    if (op.op === "create") {
      const spec: ReplaySpec = {
        stateDim: op.spec.state_dim,
        actionDim: op.spec.action_dim,
        actionLow: op.spec.action_low,
        actionHigh: op.spec.action_high,
      };
      buf = await client.create(spec, op.strategy, op.capacity);
    } else if (op.op === "insert") {
      await buf!.insert({
        s: op.s,
        a: op.a,
        r: op.r,
        s2: op.s2,
        done: op.done,
        episodeId: op.episode_id,
        stepIdx: op.step_idx,
      });
    } else {
      const batch = await buf!.sample(op.n, op.seed);
      mineBatches.push(batch.wire);
    }
  }

  expect(mineBatches.length).toBe(nativeBatches.length);
  expect(mineBatches.length).toBe(100);

  let byteMismatches = 0;
  let floatMismatches = 0;
  let floatsCompared = 0;
  const fields = [
    "flats",
    "dones",
    "weights",
    "slots",
    "interpolated",
    "partners",
  ] as const;
  for (let i = 0; i < nativeBatches.length; i += 1) {
    const mine = mineBatches[i]!;
    const native = nativeBatches[i]!;
    for (const field of fields) {
      if (mine[field] !== native[field]) {
        byteMismatches += 1;
      }
    }
    for (const field of ["flats", "weights"] as const) {
      const a = decodeFloat64(mine[field]);
      const b = decodeFloat64(native[field]);
      expect(a.length).toBe(b.length);
      for (let j = 0; j < a.length; j += 1) {
        floatsCompared += 1;
        if (a[j] !== b[j]) {
          floatMismatches += 1;
        }
      }
    }
  }

  const mineDump = await buf!.dump();
  const nativeDump = readFileSync(join(workDir, "native_dump.txt"), "utf8");
  const dumpEqual = mineDump === nativeDump;

  const ok = byteMismatches === 0 && floatMismatches === 0 && dumpEqual;
  console.log(
    `[criterion 11] ${ok ? "PASS" : "FAIL"} binding equivalence: ` +
      `batches=100 byte_mismatches=${byteMismatches} ` +
      `floats_compared=${floatsCompared} float_mismatches=${floatMismatches} ` +
      `dump_bytes=${nativeDump.length} dump_equal=${dumpEqual}`
  );
  expect(byteMismatches).toBe(0);
  expect(floatMismatches).toBe(0);
  expect(dumpEqual).toBe(true);
});
