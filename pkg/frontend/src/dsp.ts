// Just enough spectral analysis to plot what came back from the service:
// radix-2 FFT, Hann window, per-frame spectral centroid. No synthesis.

export function fft(re: Float64Array, im: Float64Array): void {
  const n = re.length;
  if ((n & (n - 1)) !== 0) throw new Error("fft size must be a power of two");
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      [re[i], re[j]] = [re[j], re[i]];
      [im[i], im[j]] = [im[j], im[i]];
    }
  }
  for (let len = 2; len <= n; len <<= 1) {
    const ang = (-2 * Math.PI) / len;
    const wr = Math.cos(ang);
    const wi = Math.sin(ang);
    for (let i = 0; i < n; i += len) {
      let cr = 1;
      let ci = 0;
      for (let k = 0; k < len / 2; k++) {
        const ur = re[i + k];
        const ui = im[i + k];
        const vr = re[i + k + len / 2] * cr - im[i + k + len / 2] * ci;
        const vi = re[i + k + len / 2] * ci + im[i + k + len / 2] * cr;
        re[i + k] = ur + vr;
        im[i + k] = ui + vi;
        re[i + k + len / 2] = ur - vr;
        im[i + k + len / 2] = ui - vi;
        const ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

export function hann(n: number): Float64Array {
  const w = new Float64Array(n);
  for (let j = 0; j < n; j++) w[j] = 0.5 * (1 - Math.cos((2 * Math.PI * j) / n));
  return w;
}

export function frameMagnitudes(segment: Float64Array): Float64Array {
  const n = segment.length;
  const re = Float64Array.from(segment);
  const im = new Float64Array(n);
  fft(re, im);
  const mags = new Float64Array(n / 2 + 1);
  for (let b = 0; b <= n / 2; b++) mags[b] = Math.hypot(re[b], im[b]);
  return mags;
}

export function spectralCentroid(mags: Float64Array, sampleRate: number): number {
  const fftSize = (mags.length - 1) * 2;
  let num = 0;
  let den = 0;
  for (let b = 0; b < mags.length; b++) {
    num += ((b * sampleRate) / fftSize) * mags[b];
    den += mags[b];
  }
  return den < 1e-12 ? 0 : num / den;
}

/** Per-frame centroid track of a decoded clip (for overlay plots). */
export function centroidTrack(
  samples: Float64Array,
  sampleRate: number,
  fftSize: number,
  hop: number,
): number[] {
  const window = hann(fftSize);
  const out: number[] = [];
  for (let o = 0; o + fftSize <= samples.length; o += hop) {
    const seg = new Float64Array(fftSize);
    for (let j = 0; j < fftSize; j++) seg[j] = samples[o + j] * window[j];
    out.push(spectralCentroid(frameMagnitudes(seg), sampleRate));
  }
  return out;
}
