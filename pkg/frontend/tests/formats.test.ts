import { describe, expect, it } from "vitest";

import { descriptorRange, parseAtlasText } from "../src/atlasText.js";
import { centroidTrack, fft, frameMagnitudes, spectralCentroid } from "../src/dsp.js";
import { parseLatentText, serializeLatentText } from "../src/latentText.js";
import { base64ToBytes, bytesToBase64, parseWav } from "../src/wav.js";

const SERIES_TEXT = [
  "latent-series 1",
  "sr 16000",
  "fft_size 1024",
  "hop 256",
  "d_z 3",
  "frames 2",
  "gain_db -12.5 -14.25",
  "z 0.5 -1.25 2.0",
  "z 1.5 0.75 -0.5",
].join("\n") + "\n";

describe("latent series text", () => {
  it("parses the documented fields", () => {
    const s = parseLatentText(SERIES_TEXT);
    expect(s.sr).toBe(16000);
    expect(s.fftSize).toBe(1024);
    expect(s.hop).toBe(256);
    expect(s.dz).toBe(3);
    expect(s.frames.length).toBe(2);
    expect([...s.gainDb]).toEqual([-12.5, -14.25]);
    expect([...s.frames[1]]).toEqual([1.5, 0.75, -0.5]);
  });

  it("round trips through serialize", () => {
    const s = parseLatentText(SERIES_TEXT);
    const again = parseLatentText(serializeLatentText(s));
    expect(again).toEqual(s);
  });

  it("rejects malformed documents", () => {
    expect(() => parseLatentText("nope")).toThrow(/latent-series/);
    expect(() => parseLatentText(SERIES_TEXT.replace("frames 2", "frames 3")))
      .toThrow(/mismatch/);
  });
});

const ATLAS_TEXT = [
  "descriptor-atlas 1",
  "codes 3",
  "index 0",
  "centroid_hz 400.0",
  "bandwidth_hz 50.0",
  "f0_hz 220.0",
  "index 1",
  "centroid_hz 100.0",
  "bandwidth_hz 80.0",
  "f0_hz none",
  "index 2",
  "centroid_hz 900.0",
  "bandwidth_hz 20.0",
  "f0_hz 440.0",
  "order_centroid 1 0 2",
  "order_bandwidth 2 0 1",
  "order_f0 0 2 1",
].join("\n") + "\n";

describe("atlas text", () => {
  it("parses records and orders", () => {
    const atlas = parseAtlasText(ATLAS_TEXT);
    expect(atlas.entries.length).toBe(3);
    expect(atlas.entries[1].f0Hz).toBeNull();
    expect(atlas.orders["centroid"]).toEqual([1, 0, 2]);
  });

  it("computes descriptor ranges over defined values only", () => {
    const atlas = parseAtlasText(ATLAS_TEXT);
    expect(descriptorRange(atlas, "centroid")).toEqual([100, 900]);
    expect(descriptorRange(atlas, "f0")).toEqual([220, 440]);
  });

  it("rejects count mismatches", () => {
    expect(() => parseAtlasText(ATLAS_TEXT.replace("codes 3", "codes 4")))
      .toThrow(/declares 4/);
  });
});

function floatWav(samples: number[], rate = 16000): Uint8Array {
  const data = new Uint8Array(samples.length * 4);
  const dv = new DataView(data.buffer);
  samples.forEach((s, i) => dv.setFloat32(i * 4, s, true));
  const fmt = new Uint8Array(18);
  const fv = new DataView(fmt.buffer);
  fv.setUint16(0, 3, true);        // IEEE float
  fv.setUint16(2, 1, true);        // mono
  fv.setUint32(4, rate, true);
  fv.setUint32(8, rate * 4, true);
  fv.setUint16(12, 4, true);
  fv.setUint16(14, 32, true);
  const chunks: (string | Uint8Array)[] = [
    "WAVE", "fmt ", u32(fmt.length), fmt, "data", u32(data.length), data];
  const body = concat(chunks);
  return concat(["RIFF", u32(body.length), body]);

  function u32(v: number): Uint8Array {
    const b = new Uint8Array(4);
    new DataView(b.buffer).setUint32(0, v, true);
    return b;
  }
  function concat(parts: (string | Uint8Array)[]): Uint8Array {
    const enc = new TextEncoder();
    const arrays = parts.map((p) => (typeof p === "string" ? enc.encode(p) : p));
    const total = arrays.reduce((n, a) => n + a.length, 0);
    const out = new Uint8Array(total);
    let o = 0;
    for (const a of arrays) {
      out.set(a, o);
      o += a.length;
    }
    return out;
  }
}

describe("wav", () => {
  it("parses float32 mono", () => {
    const wav = floatWav([0.5, -0.25, 0.125]);
    const decoded = parseWav(wav);
    expect(decoded.sampleRate).toBe(16000);
    expect([...decoded.samples]).toEqual([0.5, -0.25, 0.125]);
  });

  it("rejects non-RIFF data", () => {
    expect(() => parseWav(new Uint8Array([1, 2, 3, 4]))).toThrow(/RIFF/);
  });

  it("base64 round trips", () => {
    const bytes = Uint8Array.from([0, 1, 2, 250, 251, 252, 77]);
    expect(base64ToBytes(bytesToBase64(bytes))).toEqual(bytes);
    expect(bytesToBase64(Uint8Array.from([77]))).toBe("TQ==");
  });
});

describe("dsp", () => {
  it("fft matches a naive dft on a small case", () => {
    const n = 16;
    const re = new Float64Array(n);
    for (let i = 0; i < n; i++) re[i] = Math.sin((2 * Math.PI * 3 * i) / n);
    const im = new Float64Array(n);
    const mags = frameMagnitudes(Float64Array.from(re));
    for (let b = 0; b <= n / 2; b++) {
      let sr = 0;
      let si = 0;
      for (let t = 0; t < n; t++) {
        sr += re[t] * Math.cos((-2 * Math.PI * b * t) / n);
        si += re[t] * Math.sin((-2 * Math.PI * b * t) / n);
      }
      expect(mags[b]).toBeCloseTo(Math.hypot(sr, si), 8);
    }
    void im;
    void fft;
  });

  it("centroid of a pure bin sits at that bin's frequency", () => {
    const mags = new Float64Array(513);
    mags[28] = 1;
    expect(spectralCentroid(mags, 16000)).toBeCloseTo(437.5, 9);
  });

  it("tracks centroids per frame", () => {
    const sr = 16000;
    const samples = new Float64Array(4096);
    for (let i = 0; i < samples.length; i++) {
      samples[i] = Math.sin((2 * Math.PI * 1000 * i) / sr);
    }
    const track = centroidTrack(samples, sr, 1024, 256);
    expect(track.length).toBe((4096 - 1024) / 256 + 1);
    for (const c of track) expect(Math.abs(c - 1000)).toBeLessThan(16000 / 1024);
  });
});
