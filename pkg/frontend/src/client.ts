/**
 * WebSocket session client. Owns the handshake, feeds every parsed server
 * message into a latest-value mailbox for the render loop, and reconnects
 * with a fixed delay when the socket drops. Nothing here touches the DOM,
 * so the whole state machine runs under plain unit tests with a fake
 * socket.
 */

import { Mailbox } from "./mailbox";
import {
  MAX_CHUNK_BYTES,
  ServerMessage,
  audioChunkMessage,
  endLiveMessage,
  helloMessage,
  loadProfileMessage,
  parseServerMessage,
  seekMessage,
  startLiveMessage,
  uploadWavMessage,
} from "./protocol";

/** The subset of the WebSocket surface the client needs (test seam). */
export interface SocketLike {
  send(data: string | ArrayBuffer): void;
  close(code?: number): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev: { code: number }) => void) | null;
}

export type ClientState = "connecting" | "ready" | "closed";

export interface ViewerClientOptions {
  url: string;
  socketFactory?: (url: string) => SocketLike;
  /** Delay before a reconnect attempt after an unexpected close. */
  reconnectDelayMs?: number;
  autoReconnect?: boolean;
}

function defaultFactory(url: string): SocketLike {
  const ws = new WebSocket(url);
  ws.binaryType = "arraybuffer";
  return ws as unknown as SocketLike;
}

export class ViewerClient {
  readonly mailbox = new Mailbox<ServerMessage>();
  state: ClientState = "closed";
  sessionId: string | null = null;
  labels: string[] = [];
  onStateChange: ((state: ClientState) => void) | null = null;

  private readonly url: string;
  private readonly factory: (url: string) => SocketLike;
  private readonly reconnectDelayMs: number;
  private readonly autoReconnect: boolean;
  private socket: SocketLike | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private closedByUs = false;

  constructor(options: ViewerClientOptions) {
    this.url = options.url;
    this.factory = options.socketFactory ?? defaultFactory;
    this.reconnectDelayMs = options.reconnectDelayMs ?? 1500;
    this.autoReconnect = options.autoReconnect ?? true;
  }

  connect(): void {
    if (this.socket !== null) return;
    this.closedByUs = false;
    this.setState("connecting");
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      socket.send(helloMessage());
    };
    socket.onmessage = (ev) => {
      if (typeof ev.data !== "string") return; // server never sends binary
      const message = parseServerMessage(ev.data);
      if (message === null) {
        console.warn("ignoring unreadable server frame", ev.data);
        return;
      }
      if (message.type === "Ready") {
        this.sessionId = message.session_id;
        this.labels = message.labels;
        if (this.state !== "ready") this.setState("ready");
      }
      this.mailbox.post(message);
    };
    socket.onclose = () => {
      this.socket = null;
      this.sessionId = null;
      this.setState("closed");
      if (!this.closedByUs && this.autoReconnect) {
        this.reconnectTimer = setTimeout(() => {
          this.reconnectTimer = null;
          this.connect();
        }, this.reconnectDelayMs);
      }
    };
  }

  close(): void {
    this.closedByUs = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    const socket = this.socket;
    this.socket = null;
    if (socket !== null) {
      socket.onclose = null;
      socket.close();
    }
    this.setState("closed");
  }

  // --- session commands --------------------------------------------------

  loadProfile(profileId: string): void {
    this.sendText(loadProfileMessage(profileId));
  }

  /** Announce then ship a whole WAV file for baked playback. */
  uploadWav(bytes: ArrayBuffer): void {
    this.sendText(uploadWavMessage(bytes.byteLength));
    this.sendBinary(bytes);
  }

  startLive(sampleRate: number): void {
    this.sendText(startLiveMessage(sampleRate));
  }

  /** One live PCM chunk: 16-bit little-endian mono, at most 64 KiB. */
  sendChunk(chunk: ArrayBuffer): void {
    if (chunk.byteLength === 0 || chunk.byteLength % 2 !== 0) {
      throw new Error(`chunk must be a nonempty even number of bytes, got ${chunk.byteLength}`);
    }
    if (chunk.byteLength > MAX_CHUNK_BYTES) {
      throw new Error(`chunk of ${chunk.byteLength} bytes exceeds the ${MAX_CHUNK_BYTES} limit`);
    }
    this.sendText(audioChunkMessage(chunk.byteLength));
    this.sendBinary(chunk);
  }

  endLive(): void {
    this.sendText(endLiveMessage());
  }

  seek(t: number): void {
    this.sendText(seekMessage(t));
  }

  // --- plumbing ----------------------------------------------------------

  private sendText(text: string): void {
    if (this.socket === null) {
      throw new Error("not connected");
    }
    this.socket.send(text);
  }

  private sendBinary(bytes: ArrayBuffer): void {
    if (this.socket === null) {
      throw new Error("not connected");
    }
    this.socket.send(bytes);
  }

  private setState(state: ClientState): void {
    this.state = state;
    this.onStateChange?.(state);
  }
}
