/**
 * Mouth rig: one polyline per viseme, all sharing the same vertex count and
 * ordering so that shapes can be blended vertex-by-vertex.
 *
 * The blended mouth is a convex-ish combination of the rest pose and the
 * individual viseme shapes:
 *
 *     blended = neutral * (1 - sum(w)) + sum_p shape_p * w_p
 *
 * With all weights zero this reproduces the neutral shape exactly (it is
 * multiplied by 1.0, every other term by 0.0), and with a single weight at
 * 1.0 it reproduces that viseme shape exactly.
 */

export interface MouthRig {
  /** Viseme labels, in the order weight vectors are expressed. */
  labels: string[];
  /** Rest pose, length 2 * vertexCount (x0, y0, x1, y1, ...). */
  neutral: Float64Array;
  /** One deformed path per label, each the same length as `neutral`. */
  shapes: Float64Array[];
  vertexCount: number;
}

export const VERTEX_COUNT = 12;

/** (radiusX, radiusY) of the mouth ellipse for each pose, in canvas units. */
const POSE_RADII: Record<string, [number, number]> = {
  neutral: [46, 6],
  a: [40, 34],
  e: [52, 16],
  i: [58, 7],
  o: [24, 26],
  u: [14, 16],
};

const LABELS = ["a", "e", "i", "o", "u"];

function ellipsePath(rx: number, ry: number, n: number): Float64Array {
  const out = new Float64Array(2 * n);
  for (let k = 0; k < n; k++) {
    const theta = (2 * Math.PI * k) / n;
    out[2 * k] = rx * Math.cos(theta);
    out[2 * k + 1] = ry * Math.sin(theta);
  }
  return out;
}

export function buildMouthRig(vertexCount: number = VERTEX_COUNT): MouthRig {
  if (!Number.isInteger(vertexCount) || vertexCount < 3) {
    throw new Error(`vertexCount must be an integer >= 3, got ${vertexCount}`);
  }
  const [nrx, nry] = POSE_RADII.neutral;
  const shapes = LABELS.map((label) => {
    const [rx, ry] = POSE_RADII[label];
    return ellipsePath(rx, ry, vertexCount);
  });
  return {
    labels: LABELS.slice(),
    neutral: ellipsePath(nrx, nry, vertexCount),
    shapes,
    vertexCount,
  };
}

/**
 * Blend the rig under a weight vector (one entry per rig label, same order).
 * Pure: allocates and returns a fresh path.
 */
export function blendPath(rig: MouthRig, weights: ArrayLike<number>): Float64Array {
  if (weights.length !== rig.labels.length) {
    throw new Error(
      `weight count ${weights.length} does not match rig labels ${rig.labels.length}`,
    );
  }
  let total = 0;
  for (let i = 0; i < weights.length; i++) {
    const w = weights[i];
    if (!Number.isFinite(w)) {
      throw new Error(`weight ${i} is not finite`);
    }
    total += w;
  }
  const out = new Float64Array(rig.neutral.length);
  const rest = 1 - total;
  for (let j = 0; j < out.length; j++) {
    out[j] = rig.neutral[j] * rest;
  }
  for (let i = 0; i < weights.length; i++) {
    const w = weights[i];
    if (w === 0) continue;
    const shape = rig.shapes[i];
    for (let j = 0; j < out.length; j++) {
      out[j] += shape[j] * w;
    }
  }
  return out;
}

/** Convenience for tests and renderers: which shape dominates a weight vector. */
export function dominantLabel(rig: MouthRig, weights: ArrayLike<number>): string | null {
  let best = -Infinity;
  let bestIdx = -1;
  for (let i = 0; i < weights.length; i++) {
    if (weights[i] > best) {
      best = weights[i];
      bestIdx = i;
    }
  }
  if (bestIdx < 0 || best <= 0) return null;
  return rig.labels[bestIdx];
}
