/**
 * Baked `.viseme.json` tracks on the client: parse + clamp/lerp sampling.
 *
 * A track stores one weight row per analysis hop on a uniform time grid;
 * timestamps are implicit (frame i lives at i * frame_interval). Sampling
 * between grid points interpolates linearly, and times outside the track
 * clamp to the first/last frame — the same contract the analysis service
 * uses, so a viewer driven by `audio.currentTime` lands on identical
 * weights no matter which side baked the file.
 */

export const TRACK_VERSION = 1;

export interface VisemeTrackData {
  labels: string[];
  frameInterval: number;
  /** frames[i][j] = weight of labels[j] at t = i * frameInterval. */
  frames: number[][];
  audioDigest: string;
  profileDigest: string;
}

export function parseTrack(source: string | unknown): VisemeTrackData {
  let doc: unknown = source;
  if (typeof source === "string") {
    try {
      doc = JSON.parse(source);
    } catch (e) {
      throw new Error(`track is not valid JSON: ${e}`);
    }
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new Error("track document must be a JSON object");
  }
  const d = doc as Record<string, unknown>;
  if (d.format_version !== TRACK_VERSION) {
    throw new Error(`unsupported track format_version ${JSON.stringify(d.format_version)}`);
  }
  const labels = d.labels;
  if (!Array.isArray(labels) || labels.length === 0 || !labels.every((l) => typeof l === "string")) {
    throw new Error("labels must be a non-empty array of strings");
  }
  const interval = d.frame_interval;
  if (typeof interval !== "number" || !Number.isFinite(interval) || interval <= 0) {
    throw new Error("frame_interval must be a positive number");
  }
  if (typeof d.audio_digest !== "string" || typeof d.profile_digest !== "string") {
    throw new Error("audio_digest and profile_digest must be strings");
  }
  const rows = d.frames;
  if (!Array.isArray(rows)) {
    throw new Error("frames must be an array");
  }
  const frames: number[][] = rows.map((row, i) => {
    if (!Array.isArray(row) || row.length !== labels.length) {
      throw new Error(`frames[${i}] must be an array of ${labels.length} weights`);
    }
    for (const w of row) {
      if (typeof w !== "number" || !(w >= 0 && w <= 1)) {
        throw new Error(`frames[${i}] weight ${JSON.stringify(w)} out of range`);
      }
    }
    return row.slice() as number[];
  });
  return {
    labels: labels.slice() as string[],
    frameInterval: interval,
    frames,
    audioDigest: d.audio_digest,
    profileDigest: d.profile_digest,
  };
}

/**
 * Weights at time t, aligned to track.labels. Clamps to the ends and
 * linearly interpolates between adjacent frames.
 */
export function sampleAt(track: VisemeTrackData, t: number): number[] {
  const { frames, frameInterval } = track;
  if (frames.length === 0) {
    throw new Error("cannot sample an empty track");
  }
  if (t <= 0) {
    return frames[0].slice();
  }
  const lastIndex = frames.length - 1;
  const position = t / frameInterval;
  const lo = Math.floor(position);
  if (lo >= lastIndex) {
    return frames[lastIndex].slice();
  }
  const frac = position - lo;
  const a = frames[lo];
  const b = frames[lo + 1];
  return a.map((w, j) => w + (b[j] - w) * frac);
}

export function trackDuration(track: VisemeTrackData): number {
  return track.frames.length * track.frameInterval;
}

/** Label with the highest weight at time t, or null when all are zero. */
export function dominantAt(track: VisemeTrackData, t: number): string | null {
  const weights = sampleAt(track, t);
  let best = 0;
  let bestIdx = -1;
  for (let j = 0; j < weights.length; j++) {
    if (weights[j] > best) {
      best = weights[j];
      bestIdx = j;
    }
  }
  return bestIdx >= 0 ? track.labels[bestIdx] : null;
}
