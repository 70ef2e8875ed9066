// Minimal WAV reader (mono PCM16 / float32) for plotting measurements, plus
// environment-agnostic base64 helpers (browser and node).

export interface DecodedWav {
  samples: Float64Array;
  sampleRate: number;
}

export function parseWav(bytes: Uint8Array): DecodedWav {
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const tag = (o: number) => String.fromCharCode(...bytes.subarray(o, o + 4));
  if (bytes.length < 12 || tag(0) !== "RIFF" || tag(8) !== "WAVE") {
    throw new Error("not a RIFF/WAVE stream");
  }
  let pos = 12;
  let fmt: { code: number; channels: number; rate: number; bits: number } | null = null;
  let data: Uint8Array | null = null;
  while (pos + 8 <= bytes.length) {
    const id = tag(pos);
    const size = view.getUint32(pos + 4, true);
    const body = bytes.subarray(pos + 8, pos + 8 + size);
    if (id === "fmt ") {
      fmt = {
        code: view.getUint16(pos + 8, true),
        channels: view.getUint16(pos + 10, true),
        rate: view.getUint32(pos + 12, true),
        bits: view.getUint16(pos + 22, true),
      };
    } else if (id === "data") {
      data = body;
    }
    pos += 8 + size + (size % 2);
  }
  if (!fmt || !data) throw new Error("missing fmt or data chunk");
  if (fmt.channels !== 1) throw new Error("only mono supported");
  const dv = new DataView(data.buffer, data.byteOffset, data.byteLength);
  let samples: Float64Array;
  if (fmt.code === 3 && fmt.bits === 32) {
    samples = new Float64Array(data.byteLength >> 2);
    for (let i = 0; i < samples.length; i++) samples[i] = dv.getFloat32(i * 4, true);
  } else if (fmt.code === 1 && fmt.bits === 16) {
    samples = new Float64Array(data.byteLength >> 1);
    for (let i = 0; i < samples.length; i++) samples[i] = dv.getInt16(i * 2, true) / 32768;
  } else {
    throw new Error(`unsupported encoding ${fmt.code}/${fmt.bits}`);
  }
  return { samples, sampleRate: fmt.rate };
}

const B64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

export function bytesToBase64(bytes: Uint8Array): string {
  let out = "";
  for (let i = 0; i < bytes.length; i += 3) {
    const a = bytes[i];
    const b = i + 1 < bytes.length ? bytes[i + 1] : 0;
    const c = i + 2 < bytes.length ? bytes[i + 2] : 0;
    out += B64[a >> 2] + B64[((a & 3) << 4) | (b >> 4)];
    out += i + 1 < bytes.length ? B64[((b & 15) << 2) | (c >> 6)] : "=";
    out += i + 2 < bytes.length ? B64[c & 63] : "=";
  }
  return out;
}

export function base64ToBytes(text: string): Uint8Array {
  const clean = text.replace(/=+$/, "");
  const out: number[] = [];
  let buffer = 0;
  let bits = 0;
  for (const ch of clean) {
    const v = B64.indexOf(ch);
    if (v < 0) throw new Error(`bad base64 character ${ch}`);
    buffer = (buffer << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push((buffer >> bits) & 0xff);
    }
  }
  return Uint8Array.from(out);
}
