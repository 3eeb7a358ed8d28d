/**
 * Microphone capture for live mode. Browser-only: everything here leans
 * on getUserMedia and the Web Audio graph, so it stays out of the unit
 * test surface and is exercised manually.
 *
 * Flow: ask for the mic first; only once a stream is granted does the
 * session send StartLive. Each processing block is downmixed to mono,
 * converted to 16-bit little-endian PCM and shipped as one chunk. A
 * 1024-sample block is ~21-23 ms at typical device rates (44.1/48 kHz)
 * and 2 KiB on the wire, far inside the 64 KiB / 100 ms chunk budget.
 * Permission denial surfaces through onError and sends nothing.
 */

import { ViewerClient } from "./client";

const BLOCK_SIZE = 1024;

export interface MicSession {
  sampleRate: number;
  stop(): void;
}

function floatToInt16(block: Float32Array): ArrayBuffer {
  const out = new Int16Array(block.length);
  for (let i = 0; i < block.length; i++) {
    const s = Math.max(-1, Math.min(1, block[i]));
    out[i] = Math.round(s * 32767);
  }
  return out.buffer;
}

export async function startMicCapture(
  client: ViewerClient,
  onError: (message: string) => void,
): Promise<MicSession | null> {
  let stream: MediaStream;
  try {
    stream = await navigator.mediaDevices.getUserMedia({
      audio: { channelCount: 1, echoCancellation: true },
      video: false,
    });
  } catch (e) {
    const name = e instanceof DOMException ? e.name : "Error";
    onError(
      name === "NotAllowedError" || name === "SecurityError"
        ? "Microphone access was denied — live mode needs the mic."
        : `Could not open the microphone: ${e}`,
    );
    return null;
  }

  const context = new AudioContext();
  const source = context.createMediaStreamSource(stream);
  // ScriptProcessorNode is deprecated but still universal, and a hidden
  // muted gain keeps the node pulled by the graph without audible echo.
  const processor = context.createScriptProcessor(BLOCK_SIZE, 1, 1);
  const sink = context.createGain();
  sink.gain.value = 0;

  const sampleRate = Math.round(context.sampleRate);
  client.startLive(sampleRate);

  let running = true;
  processor.onaudioprocess = (event) => {
    if (!running) return;
    try {
      client.sendChunk(floatToInt16(event.inputBuffer.getChannelData(0)));
    } catch (e) {
      running = false;
      onError(`Live capture stopped: ${e}`);
    }
  };
  source.connect(processor);
  processor.connect(sink);
  sink.connect(context.destination);

  return {
    sampleRate,
    stop() {
      if (!running) {
        running = false;
      } else {
        running = false;
        try {
          client.endLive();
        } catch {
          // socket already gone; nothing to flush
        }
      }
      processor.disconnect();
      source.disconnect();
      sink.disconnect();
      for (const trackItem of stream.getTracks()) trackItem.stop();
      void context.close();
    },
  };
}
