export { BufferHandle, ReplayClient, type ClientOptions } from "./client.js";
export {
  EngineError,
  PROTOCOL_VERSION,
  decodeFloat64,
  decodeInt64,
  decodeUint8,
  type BatchLayout,
  type CreateEcho,
  type EngineVersion,
  type ReplaySpec,
  type SampleBatch,
  type StrategyOptions,
  type TransitionInput,
  type WireBatch,
} from "./protocol.js";
