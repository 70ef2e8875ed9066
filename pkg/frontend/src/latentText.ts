// Latent series text format, mirroring the service wire contract:
//   latent-series 1
//   sr / fft_size / hop / d_z / frames headers
//   gain_db <one value per frame>
//   z <d_z values>            (one line per frame)

export interface LatentSeries {
  sr: number;
  fftSize: number;
  hop: number;
  dz: number;
  gainDb: Float64Array;
  frames: Float64Array[]; // one per frame, length dz
}

export function parseLatentText(text: string): LatentSeries {
  const lines = text.split("\n").filter((l) => l.trim().length > 0);
  if (lines.length === 0 || lines[0].trim() !== "latent-series 1") {
    throw new Error("not a latent-series document");
  }
  const header: Record<string, string> = {};
  const rows: Float64Array[] = [];
  for (const line of lines.slice(1)) {
    const sp = line.indexOf(" ");
    const key = sp < 0 ? line : line.slice(0, sp);
    const rest = sp < 0 ? "" : line.slice(sp + 1);
    if (key === "z") {
      rows.push(Float64Array.from(rest.trim().split(/\s+/).map(Number)));
    } else {
      header[key] = rest.trim();
    }
  }
  const need = (k: string): string => {
    if (!(k in header)) throw new Error(`latent series missing field ${k}`);
    return header[k];
  };
  const dz = parseInt(need("d_z"), 10);
  const n = parseInt(need("frames"), 10);
  const gains = Float64Array.from(need("gain_db").trim().split(/\s+/).map(Number));
  if (rows.length !== n || gains.length !== n) {
    throw new Error(`frame count mismatch: header ${n}, z rows ${rows.length}`);
  }
  for (const r of rows) {
    if (r.length !== dz || r.some((v) => !Number.isFinite(v))) {
      throw new Error("malformed z row");
    }
  }
  return {
    sr: parseInt(need("sr"), 10),
    fftSize: parseInt(need("fft_size"), 10),
    hop: parseInt(need("hop"), 10),
    dz,
    gainDb: gains,
    frames: rows,
  };
}

// Shortest round-trip float formatting; matches how the service prints
// floats (repr), so re-serializing an unmodified series is byte-stable.
function fmt(v: number): string {
  if (Number.isInteger(v) && Math.abs(v) < 1e16) return `${v}.0`;
  return String(v);
}

export function serializeLatentText(s: LatentSeries): string {
  const lines = [
    "latent-series 1",
    `sr ${s.sr}`,
    `fft_size ${s.fftSize}`,
    `hop ${s.hop}`,
    `d_z ${s.dz}`,
    `frames ${s.frames.length}`,
    "gain_db " + Array.from(s.gainDb, fmt).join(" "),
  ];
  for (const row of s.frames) {
    lines.push("z " + Array.from(row, fmt).join(" "));
  }
  return lines.join("\n") + "\n";
}
