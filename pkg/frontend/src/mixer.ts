// Client-side latent mixing: the one piece of model math the explorer is
// allowed to do. Everything else (encoding, decoding, synthesis) goes
// through the service.

import { LatentSeries } from "./latentText.js";

export function clamp01(v: number): number {
  return Math.min(1, Math.max(0, v));
}

export function clampRange(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

/** Linear resampling along the time axis, mirroring the backend operator. */
export function resampleSeries(s: LatentSeries, newLen: number): LatentSeries {
  if (newLen < 1) throw new Error("newLen must be >= 1");
  const n = s.frames.length;
  if (newLen === n) return s;
  const frames: Float64Array[] = [];
  const gains = new Float64Array(newLen);
  for (let i = 0; i < newLen; i++) {
    const pos = newLen === 1 ? 0 : (i * (n - 1)) / (newLen - 1);
    const lo = Math.floor(pos);
    const hi = Math.min(lo + 1, n - 1);
    const t = pos - lo;
    const row = new Float64Array(s.dz);
    for (let d = 0; d < s.dz; d++) {
      row[d] = (1 - t) * s.frames[lo][d] + t * s.frames[hi][d];
    }
    frames.push(row);
    gains[i] = (1 - t) * s.gainDb[lo] + t * s.gainDb[hi];
  }
  return { ...s, frames, gainDb: gains };
}

export function bilinearWeights(u: number, v: number): [number, number, number, number] {
  return [(1 - u) * (1 - v), u * (1 - v), (1 - u) * v, u * v];
}

/**
 * Bilinear blend of 2 or 4 corner series at plane position (u, v), after
 * resampling all corners to a common frame count (the longest corner).
 * With two clips the bottom corners reuse them (C=A, D=B degenerate).
 */
export function bilinearMix(
  corners: (LatentSeries | null)[],
  u: number,
  v: number,
): LatentSeries {
  const [a, b] = [corners[0], corners[1]];
  if (!a || !b) throw new Error("need at least clips A and B");
  const c = corners[2] ?? a;
  const d = corners[3] ?? b;
  const all = [a, b, c, d];
  if (all.some((s) => s.dz !== a.dz)) throw new Error("latent dim mismatch");
  const common = Math.max(...all.map((s) => s.frames.length));
  const [ra, rb, rc, rd] = all.map((s) => resampleSeries(s, common));
  const w = bilinearWeights(clamp01(u), clamp01(v));
  const frames: Float64Array[] = [];
  const gains = new Float64Array(common);
  for (let i = 0; i < common; i++) {
    const row = new Float64Array(a.dz);
    for (let k = 0; k < a.dz; k++) {
      row[k] =
        w[0] * ra.frames[i][k] + w[1] * rb.frames[i][k] +
        w[2] * rc.frames[i][k] + w[3] * rd.frames[i][k];
    }
    frames.push(row);
    gains[i] =
      w[0] * ra.gainDb[i] + w[1] * rb.gainDb[i] +
      w[2] * rc.gainDb[i] + w[3] * rd.gainDb[i];
  }
  return { sr: a.sr, fftSize: a.fftSize, hop: a.hop, dz: a.dz, gainDb: gains, frames };
}

/** Resample drawn (x, y) points to n equally spaced values over [0, 1]. */
export function sampleDrawnCurve(
  points: { x: number; y: number }[],
  n: number,
): number[] {
  if (points.length === 0) throw new Error("empty curve");
  const sorted = [...points].sort((p, q) => p.x - q.x);
  const out: number[] = [];
  for (let i = 0; i < n; i++) {
    const x = n === 1 ? 0 : i / (n - 1);
    let j = 0;
    while (j < sorted.length - 1 && sorted[j + 1].x < x) j++;
    const p = sorted[j];
    const q = sorted[Math.min(j + 1, sorted.length - 1)];
    const span = q.x - p.x;
    const t = span > 1e-12 ? clamp01((x - p.x) / span) : 0;
    out.push((1 - t) * p.y + t * q.y);
  }
  return out;
}
