/**
 * WebSocket wire protocol: typed views of server messages plus builders
 * for the client side. Text frames are JSON; binary frames carry audio
 * and must be announced by the preceding UploadWav/AudioChunk message.
 */

export const PROTOCOL_VERSION = 1;
export const MAX_CHUNK_BYTES = 64 * 1024;

export interface ReadyMessage {
  type: "Ready";
  session_id: string;
  labels: string[];
}

export interface TrackHeaderMessage {
  type: "TrackHeader";
  frame_interval: number;
  frame_count: number;
  audio_url: string;
}

export interface VisemeMessage {
  type: "Viseme";
  t: number;
  weights: Record<string, number>;
}

export interface LiveVisemeMessage {
  type: "LiveViseme";
  t: number;
  weights: Record<string, number>;
}

export interface DoneMessage {
  type: "Done";
}

export interface ErrorMessage {
  type: "Error";
  code: string;
  message: string;
}

export type ServerMessage =
  | ReadyMessage
  | TrackHeaderMessage
  | VisemeMessage
  | LiveVisemeMessage
  | DoneMessage
  | ErrorMessage;

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

function isWeights(value: unknown): value is Record<string, number> {
  if (!isRecord(value)) return false;
  return Object.values(value).every((w) => typeof w === "number" && Number.isFinite(w));
}

/**
 * Parse one server text frame. Returns null for anything that is not a
 * well-formed message of a known type — the client warns and carries on
 * rather than tearing the session down over a frame it cannot read.
 */
export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (!isRecord(raw) || typeof raw.type !== "string") return null;
  switch (raw.type) {
    case "Ready":
      if (
        typeof raw.session_id === "string" &&
        Array.isArray(raw.labels) &&
        raw.labels.every((l) => typeof l === "string")
      ) {
        return { type: "Ready", session_id: raw.session_id, labels: raw.labels as string[] };
      }
      return null;
    case "TrackHeader":
      if (
        typeof raw.frame_interval === "number" &&
        raw.frame_interval > 0 &&
        typeof raw.frame_count === "number" &&
        Number.isInteger(raw.frame_count) &&
        raw.frame_count >= 0 &&
        typeof raw.audio_url === "string"
      ) {
        return {
          type: "TrackHeader",
          frame_interval: raw.frame_interval,
          frame_count: raw.frame_count,
          audio_url: raw.audio_url,
        };
      }
      return null;
    case "Viseme":
    case "LiveViseme":
      if (typeof raw.t === "number" && Number.isFinite(raw.t) && isWeights(raw.weights)) {
        return { type: raw.type, t: raw.t, weights: raw.weights };
      }
      return null;
    case "Done":
      return { type: "Done" };
    case "Error":
      if (typeof raw.code === "string" && typeof raw.message === "string") {
        return { type: "Error", code: raw.code, message: raw.message };
      }
      return null;
    default:
      return null;
  }
}

// --- client -> server builders -------------------------------------------

export function helloMessage(): string {
  return JSON.stringify({ type: "Hello", protocol_version: PROTOCOL_VERSION });
}

export function loadProfileMessage(profileId: string): string {
  return JSON.stringify({ type: "LoadProfile", profile_id: profileId });
}

export function uploadWavMessage(size: number): string {
  if (!Number.isInteger(size) || size <= 0) {
    throw new Error(`upload size must be a positive integer, got ${size}`);
  }
  return JSON.stringify({ type: "UploadWav", size });
}

export function startLiveMessage(sampleRate: number): string {
  if (!Number.isInteger(sampleRate) || sampleRate <= 0) {
    throw new Error(`sample_rate must be a positive integer, got ${sampleRate}`);
  }
  return JSON.stringify({ type: "StartLive", sample_rate: sampleRate });
}

export function audioChunkMessage(size: number): string {
  if (!Number.isInteger(size) || size <= 0 || size % 2 !== 0) {
    throw new Error(`chunk size must be a positive even integer, got ${size}`);
  }
  if (size > MAX_CHUNK_BYTES) {
    throw new Error(`chunk size ${size} exceeds the ${MAX_CHUNK_BYTES} byte limit`);
  }
  return JSON.stringify({ type: "AudioChunk", size });
}

export function endLiveMessage(): string {
  return JSON.stringify({ type: "EndLive" });
}

export function seekMessage(t: number): string {
  if (!Number.isFinite(t) || t < 0) {
    throw new Error(`seek time must be a nonnegative number, got ${t}`);
  }
  return JSON.stringify({ type: "Seek", t });
}
