/**
 * Wire types for the engine's line-delimited JSON protocol.
 *
 * One JSON object per line in each direction.  Requests carry `id` and
 * `op`; responses echo `id` and carry `ok` plus either result fields or
 * an `error` object whose message text is the engine's own.
 *
 * Bulk float data rides as base64 of raw little-endian float64 bytes, so
 * decoded values are bit-identical to what the engine holds.  Scalars use
 * plain JSON numbers; both runtimes print shortest round-trip decimals,
 * which makes those exact for float64 as well.
 */

/** Protocol revision this client speaks. */
export const PROTOCOL_VERSION = 1;

/** Dimensions and action bounds of one environment. */
export interface ReplaySpec {
  stateDim: number;
  actionDim: number;
  actionLow: number[];
  actionHigh: number[];
}

/** Strategy selection plus its knobs; omitted fields take engine defaults. */
export interface StrategyOptions {
  kind:
    | "uniform"
    | "per"
    | "ct"
    | "nmer"
    | "knn1_mixup"
    | "naive_mixup"
    | "s4rl"
    | "noisy";
  k?: number;
  alpha?: number;
  interpFraction?: number;
  excludeSelf?: boolean;
  perAlpha?: number;
  perBetaInitial?: number;
  perBetaFinal?: number;
  perBetaAnnealSteps?: number;
  perEpsilon?: number;
  noiseSigmaScale?: number;
}

/** One environment step in host-side naming. */
export interface TransitionInput {
  s: number[];
  a: number[];
  r: number;
  s2: number[];
  done: boolean;
  episodeId: number;
  stepIdx: number;
}

/** Column ranges inside one flat row; [start, end) pairs. */
export interface BatchLayout {
  flat_dim: number;
  state: [number, number];
  action: [number, number];
  reward: [number, number];
  next_state: [number, number];
}

/** Base64 fields exactly as they crossed the boundary. */
export interface WireBatch {
  n: number;
  flats: string;
  dones: string;
  weights: string;
  slots: string;
  interpolated: string;
  partners: string;
}

/** A decoded batch; `wire` keeps the raw transport strings for diffing. */
export interface SampleBatch {
  n: number;
  /** Row-major (n x layout.flat_dim) flat transition rows. */
  flats: Float64Array;
  dones: Uint8Array;
  weights: Float64Array;
  slots: BigInt64Array;
  interpolated: Uint8Array;
  partners: BigInt64Array;
  layout: BatchLayout;
  wire: WireBatch;
}

/** Engine identification returned by the version op. */
export interface EngineVersion {
  engine: string;
  protocol: number;
}

/** Echo block confirming what a create call instantiated. */
export interface CreateEcho {
  kind: string;
  k: number;
  state_dim: number;
  action_dim: number;
  capacity: number;
}

/** An engine-side failure, rethrown host-side with the kind preserved. */
export class EngineError extends Error {
  readonly kind: string;

  constructor(kind: string, message: string) {
    super(message);
    this.name = "EngineError";
    this.kind = kind;
  }
}

const STRATEGY_KEY_MAP: Record<string, string> = {
  kind: "kind",
  k: "k",
  alpha: "alpha",
  interpFraction: "interp_fraction",
  excludeSelf: "exclude_self",
  perAlpha: "per_alpha",
  perBetaInitial: "per_beta_initial",
  perBetaFinal: "per_beta_final",
  perBetaAnnealSteps: "per_beta_anneal_steps",
  perEpsilon: "per_epsilon",
  noiseSigmaScale: "noise_sigma_scale",
};

/** Rename strategy options to the engine's snake_case keys. */
export function strategyToWire(
  options: StrategyOptions
): Record<string, unknown> {
  const out: Record<string, unknown> = {};
  for (const [key, value] of Object.entries(options)) {
    const wireKey = STRATEGY_KEY_MAP[key];
    if (wireKey === undefined) {
      throw new EngineError("InvalidConfigError", `unknown strategy key '${key}'`);
    }
    if (value !== undefined) {
      out[wireKey] = value;
    }
  }
  return out;
}

/** Rename a spec to the engine's snake_case keys. */
export function specToWire(spec: ReplaySpec): Record<string, unknown> {
  return {
    state_dim: spec.stateDim,
    action_dim: spec.actionDim,
    action_low: spec.actionLow,
    action_high: spec.actionHigh,
  };
}

function toAligned(b64: string): ArrayBuffer {
  const bytes = Buffer.from(b64, "base64");
  const aligned = new ArrayBuffer(bytes.length);
  new Uint8Array(aligned).set(bytes);
  return aligned;
}

export function decodeFloat64(b64: string): Float64Array {
  return new Float64Array(toAligned(b64));
}

export function decodeInt64(b64: string): BigInt64Array {
  return new BigInt64Array(toAligned(b64));
}

export function decodeUint8(b64: string): Uint8Array {
  return new Uint8Array(toAligned(b64));
}
