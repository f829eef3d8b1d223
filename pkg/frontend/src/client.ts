/**
 * Process-spawning client for the replay engine.
 *
 * The engine runs as a child process (`python -m mixreplay serve`) and
 * answers requests strictly in order, so correlation is a FIFO of pending
 * promises; the echoed request id is checked as a belt-and-braces guard.
 *
 * A handle must not be used from two in-flight calls that race on intent
 * (the transport itself serializes everything); distinct handles through
 * one client are fine, as are multiple clients.
 */
import { type ChildProcessByStdio, spawn } from "node:child_process";
import { once } from "node:events";
import { createInterface, type Interface } from "node:readline";
import type { Readable, Writable } from "node:stream";

import {
  type BatchLayout,
  type CreateEcho,
  type EngineVersion,
  type ReplaySpec,
  type SampleBatch,
  type StrategyOptions,
  type TransitionInput,
  type WireBatch,
  EngineError,
  PROTOCOL_VERSION,
  decodeFloat64,
  decodeInt64,
  decodeUint8,
  specToWire,
  strategyToWire,
} from "./protocol.js";

type EngineProcess = ChildProcessByStdio<Writable, Readable, null>;

interface Pending {
  id: number;
  resolve: (value: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export interface ClientOptions {
  /** Python executable; defaults to MIXREPLAY_PYTHON or "python3". */
  python?: string;
  /** Extra environment entries for the engine process. */
  env?: Record<string, string>;
}

export class ReplayClient {
  private readonly child: EngineProcess;
  private readonly lines: Interface;
  private readonly pending: Pending[] = [];
  private nextId = 1;
  private closed = false;

  /** Engine package version, filled in by spawn(). */
  engineVersion = "";

  private constructor(child: EngineProcess) {
    this.child = child;
    this.lines = createInterface({ input: child.stdout });
    this.lines.on("line", (line) => this.onLine(line));
    child.on("exit", () => this.failAll(new Error("engine process exited")));
  }

  /** Start an engine process and verify it speaks our protocol. */
  static async spawn(options: ClientOptions = {}): Promise<ReplayClient> {
    const python =
      options.python ?? process.env["MIXREPLAY_PYTHON"] ?? "python3";
    const child = spawn(python, ["-m", "mixreplay", "serve"], {
      stdio: ["pipe", "pipe", "inherit"],
      env: { ...process.env, ...options.env },
    });
    const client = new ReplayClient(child);
    const version = (await client.request("version", {})) as unknown as
      EngineVersion;
    if (version.protocol !== PROTOCOL_VERSION) {
      await client.close();
      throw new EngineError(
        "ProtocolError",
        `engine speaks protocol ${version.protocol}, client needs ${PROTOCOL_VERSION}`
      );
    }
    client.engineVersion = version.engine;
    return client;
  }

  private onLine(line: string): void {
    const waiter = this.pending.shift();
    if (waiter === undefined) {
      return;
    }
    let reply: Record<string, unknown>;
    try {
      reply = JSON.parse(line) as Record<string, unknown>;
    } catch {
      waiter.reject(new Error(`engine sent unparseable line: ${line}`));
      return;
    }
    if (reply["id"] !== waiter.id) {
      waiter.reject(
        new Error(`reply id ${String(reply["id"])} != request id ${waiter.id}`)
      );
      return;
    }
    if (reply["ok"] === true) {
      waiter.resolve(reply);
      return;
    }
    const error = reply["error"] as { kind?: string; message?: string } | undefined;
    waiter.reject(
      new EngineError(error?.kind ?? "ProtocolError", error?.message ?? line)
    );
  }

  private failAll(err: Error): void {
    while (this.pending.length > 0) {
      this.pending.shift()?.reject(err);
    }
  }

  request(
    op: string,
    params: Record<string, unknown>
  ): Promise<Record<string, unknown>> {
    if (this.closed) {
      return Promise.reject(new Error("client is closed"));
    }
    const id = this.nextId;
    this.nextId += 1;
    const payload = JSON.stringify({ ...params, id, op });
    return new Promise((resolve, reject) => {
      this.pending.push({ id, resolve, reject });
      this.child.stdin.write(payload + "\n");
    });
  }

  async version(): Promise<EngineVersion> {
    const reply = await this.request("version", {});
    return { engine: reply["engine"] as string, protocol: reply["protocol"] as number };
  }

  /** Create a buffer+strategy instance and wrap its handle. */
  async create(
    spec: ReplaySpec,
    strategy: StrategyOptions,
    capacity: number
  ): Promise<BufferHandle> {
    const reply = await this.request("create", {
      spec: specToWire(spec),
      strategy: strategyToWire(strategy),
      capacity,
    });
    return new BufferHandle(
      this,
      reply["handle"] as number,
      reply["echo"] as unknown as CreateEcho
    );
  }

  /** Close stdin and wait for the engine to exit. */
  async close(): Promise<void> {
    if (this.closed) {
      return;
    }
    this.closed = true;
    this.child.stdin.end();
    if (this.child.exitCode === null) {
      await once(this.child, "exit");
    }
  }
}

export class BufferHandle {
  readonly handle: number;
  readonly echo: CreateEcho;
  private readonly client: ReplayClient;

  constructor(client: ReplayClient, handle: number, echo: CreateEcho) {
    this.client = client;
    this.handle = handle;
    this.echo = echo;
  }

  async insert(t: TransitionInput): Promise<number> {
    const reply = await this.client.request("insert", {
      handle: this.handle,
      s: t.s,
      a: t.a,
      r: t.r,
      s2: t.s2,
      done: t.done,
      episode_id: t.episodeId,
      step_idx: t.stepIdx,
    });
    return reply["count"] as number;
  }

  async sample(n: number, seed: number, globalStep = 0): Promise<SampleBatch> {
    const reply = await this.client.request("sample", {
      handle: this.handle,
      n,
      seed,
      global_step: globalStep,
    });
    const wire = reply["batch"] as unknown as WireBatch;
    return {
      n: wire.n,
      flats: decodeFloat64(wire.flats),
      dones: decodeUint8(wire.dones),
      weights: decodeFloat64(wire.weights),
      slots: decodeInt64(wire.slots),
      interpolated: decodeUint8(wire.interpolated),
      partners: decodeInt64(wire.partners),
      layout: reply["layout"] as unknown as BatchLayout,
      wire,
    };
  }

  async updatePriorities(slots: number[], tdErrors: number[]): Promise<void> {
    await this.client.request("update_priorities", {
      handle: this.handle,
      slots,
      td_errors: tdErrors,
    });
  }

  async count(): Promise<number> {
    const reply = await this.client.request("count", { handle: this.handle });
    return reply["count"] as number;
  }

  /** Exact text snapshot of live contents, oldest row first. */
  async dump(): Promise<string> {
    const reply = await this.client.request("dump", { handle: this.handle });
    return reply["text"] as string;
  }

  async destroy(): Promise<void> {
    await this.client.request("destroy", { handle: this.handle });
  }
}
