// Parser for the descriptor atlas export format:
//   descriptor-atlas 1
//   codes <k>
//   per code: index / centroid_hz / bandwidth_hz / f0_hz (or "none")
//   order_centroid / order_bandwidth / order_f0 permutations

export interface AtlasEntry {
  index: number;
  centroidHz: number;
  bandwidthHz: number;
  f0Hz: number | null;
}

export interface Atlas {
  entries: AtlasEntry[];
  orders: Record<string, number[]>;
}

export const DESCRIPTORS = ["centroid", "bandwidth", "f0"] as const;
export type Descriptor = (typeof DESCRIPTORS)[number];

export function parseAtlasText(text: string): Atlas {
  const lines = text.split("\n").map((l) => l.trim()).filter((l) => l.length > 0);
  if (lines.length < 2 || lines[0] !== "descriptor-atlas 1") {
    throw new Error("not a descriptor-atlas document");
  }
  const k = parseInt(lines[1].split(/\s+/)[1], 10);
  const entries: AtlasEntry[] = [];
  const orders: Record<string, number[]> = {};
  let current: Partial<AtlasEntry> | null = null;
  const flush = () => {
    if (current !== null) {
      if (current.index === undefined || current.centroidHz === undefined ||
          current.bandwidthHz === undefined || current.f0Hz === undefined) {
        throw new Error("incomplete atlas record");
      }
      entries.push(current as AtlasEntry);
    }
  };
  for (const line of lines.slice(2)) {
    const sp = line.indexOf(" ");
    const key = line.slice(0, sp);
    const rest = line.slice(sp + 1).trim();
    if (key === "index") {
      flush();
      current = { index: parseInt(rest, 10) };
    } else if (key === "centroid_hz") {
      current!.centroidHz = Number(rest);
    } else if (key === "bandwidth_hz") {
      current!.bandwidthHz = Number(rest);
    } else if (key === "f0_hz") {
      current!.f0Hz = rest === "none" ? null : Number(rest);
    } else if (key.startsWith("order_")) {
      orders[key.slice("order_".length)] = rest.split(/\s+/).map((v) => parseInt(v, 10));
    } else {
      throw new Error(`unknown atlas field ${key}`);
    }
  }
  flush();
  if (entries.length !== k) {
    throw new Error(`atlas declares ${k} codes, found ${entries.length}`);
  }
  return { entries, orders };
}

export function descriptorValue(e: AtlasEntry, d: Descriptor): number | null {
  if (d === "centroid") return e.centroidHz;
  if (d === "bandwidth") return e.bandwidthHz;
  return e.f0Hz;
}

/** [min, max] over codes that have the descriptor; null if none do. */
export function descriptorRange(atlas: Atlas, d: Descriptor): [number, number] | null {
  const vals = atlas.entries
    .map((e) => descriptorValue(e, d))
    .filter((v): v is number => v !== null);
  if (vals.length === 0) return null;
  return [Math.min(...vals), Math.max(...vals)];
}
