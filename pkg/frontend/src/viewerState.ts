/**
 * Headless viewer core: everything the render loop decides, minus the DOM.
 *
 * One instance owns the current mouth weights and how they advance:
 *
 *  - track mode (pre-baked file played locally): weights are sampled from
 *    the track at the audio clock each frame. The clock is the master —
 *    pause the audio and the mouth freezes at the last sampled time.
 *  - stream mode (WAV uploaded over the socket): server-paced Viseme
 *    frames accumulate on their frame grid; rendering samples the grid at
 *    the audio clock, clamped to the newest received frame.
 *  - live mode: no clock to sync against, so the mouth eases toward the
 *    latest LiveViseme instead (server pacing is the fallback master).
 *
 * main.ts wires an instance to canvas/audio/socket; tests drive it with a
 * fake clock and read weights straight off `weights()` / `path()`.
 */

import { MouthRig, blendPath, dominantLabel } from "./rig";
import { ServerMessage } from "./protocol";
import { VisemeTrackData, sampleAt, trackDuration } from "./trackPlayer";

/** Time constant for easing toward paced frames (live mode only). */
const EASE_TAU = 0.05;

export type ViewerMode = "idle" | "track" | "stream" | "live";

export class ViewerState {
  readonly rig: MouthRig;
  mode: ViewerMode = "idle";
  connected = false;
  banner: string | null = "connecting…";
  /** Last Error message from the server, for the status line. */
  lastError: { code: string; message: string } | null = null;
  labels: string[] = [];

  private current: Float64Array;
  private target: Float64Array;
  private localTrack: VisemeTrackData | null = null;
  private streamInterval = 0;
  private streamFrames: (Float64Array | undefined)[] = [];
  private streamMax = -1;
  private streamDone = false;

  constructor(rig: MouthRig) {
    this.rig = rig;
    this.current = new Float64Array(rig.labels.length);
    this.target = new Float64Array(rig.labels.length);
  }

  // --- inputs ------------------------------------------------------------

  setConnection(up: boolean): void {
    this.connected = up;
    if (up) {
      this.banner = null;
    } else {
      // socket gone: neutral mouth + reconnect banner, drop session state
      this.banner = "connection lost — reconnecting…";
      this.reset();
    }
  }

  /** Begin local playback of a pre-baked track (the playTrack path). */
  playLocalTrack(track: VisemeTrackData): void {
    this.localTrack = track;
    this.mode = "track";
    this.clearStream();
  }

  applyMessage(msg: ServerMessage): void {
    switch (msg.type) {
      case "Ready":
        this.labels = msg.labels;
        break;
      case "TrackHeader":
        this.localTrack = null;
        this.mode = "stream";
        this.clearStream();
        this.streamInterval = msg.frame_interval;
        this.streamFrames = new Array(Math.max(msg.frame_count, 0));
        break;
      case "Viseme": {
        if (this.mode !== "stream" || this.streamInterval <= 0) break;
        const idx = Math.round(msg.t / this.streamInterval);
        if (idx >= 0) {
          if (idx >= this.streamFrames.length) this.streamFrames.length = idx + 1;
          this.streamFrames[idx] = this.alignWeights(msg.weights);
          if (idx > this.streamMax) this.streamMax = idx;
        }
        break;
      }
      case "LiveViseme":
        if (this.mode === "live") {
          this.target = this.alignWeights(msg.weights);
        }
        break;
      case "Done":
        if (this.mode === "stream") {
          this.streamDone = true; // keep sampling until the clock runs past
        } else if (this.mode === "live") {
          this.goIdle();
        }
        break;
      case "Error":
        this.lastError = { code: msg.code, message: msg.message };
        break;
    }
  }

  beginLive(): void {
    this.mode = "live";
    this.localTrack = null;
    this.clearStream();
  }

  stopPlayback(): void {
    this.goIdle();
  }

  /**
   * Advance one render frame. `clockSeconds` is the audio playback
   * position for clock-mastered modes (null when no audio is attached);
   * `dtSeconds` is wall time since the previous frame.
   */
  tick(clockSeconds: number | null, dtSeconds: number): void {
    switch (this.mode) {
      case "track": {
        const track = this.localTrack;
        if (track === null || clockSeconds === null) break;
        this.current = Float64Array.from(
          this.alignTrackWeights(track, sampleAt(track, clockSeconds)),
        );
        this.target = this.current;
        if (clockSeconds >= trackDuration(track)) this.goIdle();
        return;
      }
      case "stream": {
        if (clockSeconds !== null) {
          const sampled = this.sampleStream(clockSeconds);
          if (sampled !== null) {
            this.current = sampled;
            this.target = sampled;
          }
          if (this.streamDone && clockSeconds >= this.streamInterval * (this.streamMax + 1)) {
            this.goIdle();
          }
          return;
        }
        // no audio clock: fall back to easing toward the newest frame
        if (this.streamMax >= 0) {
          const latest = this.streamFrames[this.streamMax];
          if (latest !== undefined) this.target = latest;
        }
        break;
      }
      case "live":
        break; // target set by LiveViseme messages
      case "idle":
        this.target = new Float64Array(this.rig.labels.length);
        break;
    }
    // paced modes: exponential approach toward the latest target
    const k = 1 - Math.exp(-Math.max(dtSeconds, 0) / EASE_TAU);
    for (let i = 0; i < this.current.length; i++) {
      this.current[i] += (this.target[i] - this.current[i]) * k;
    }
  }

  // --- outputs -----------------------------------------------------------

  /** Current mouth weights in rig label order. */
  weights(): Float64Array {
    return this.current.slice();
  }

  /** The exact path the canvas draws: pure blend of rig and weights. */
  path(): Float64Array {
    return blendPath(this.rig, this.current);
  }

  dominant(): string | null {
    return dominantLabel(this.rig, this.current);
  }

  // --- internals ---------------------------------------------------------

  private goIdle(): void {
    this.mode = "idle";
    this.localTrack = null;
    this.clearStream();
    this.target = new Float64Array(this.rig.labels.length);
  }

  private reset(): void {
    this.goIdle();
    this.current = new Float64Array(this.rig.labels.length);
    this.lastError = null;
  }

  private clearStream(): void {
    this.streamInterval = 0;
    this.streamFrames = [];
    this.streamMax = -1;
    this.streamDone = false;
  }

  /** Map a {label: weight} message onto rig label order; missing -> 0. */
  private alignWeights(weights: Record<string, number>): Float64Array {
    const out = new Float64Array(this.rig.labels.length);
    this.rig.labels.forEach((label, i) => {
      const w = weights[label];
      if (typeof w === "number" && Number.isFinite(w)) out[i] = w;
    });
    return out;
  }

  private alignTrackWeights(track: VisemeTrackData, row: number[]): number[] {
    return this.rig.labels.map((label) => {
      const j = track.labels.indexOf(label);
      return j >= 0 ? row[j] : 0;
    });
  }

  /**
   * Sample the accumulated stream grid at time t: clamp to the newest
   * received frame, interpolate between neighbours when both exist.
   */
  private sampleStream(t: number): Float64Array | null {
    if (this.streamMax < 0) return null;
    const pos = Math.min(Math.max(t / this.streamInterval, 0), this.streamMax);
    let lo = Math.floor(pos);
    while (lo > 0 && this.streamFrames[lo] === undefined) lo--; // seek gaps
    const a = this.streamFrames[lo];
    if (a === undefined) return null;
    const b = this.streamFrames[lo + 1];
    if (b === undefined || pos <= lo) return a.slice();
    const frac = pos - lo;
    const out = new Float64Array(a.length);
    for (let i = 0; i < a.length; i++) {
      out[i] = a[i] + (b[i] - a[i]) * frac;
    }
    return out;
  }
}
