// Session state and orchestration for the explorer. All synthesis goes
// through the service; the only client-side model math is bilinear latent
// mixing for the interpolation plane. Views subscribe to state changes and
// stay dumb.

import { ServiceClient, ServiceError, ServiceInfo, TargetResult } from "./api.js";
import { Atlas, Descriptor, descriptorRange, parseAtlasText } from "./atlasText.js";
import { LatentSeries, parseLatentText, serializeLatentText } from "./latentText.js";
import { bilinearMix, clamp01, clampRange, sampleDrawnCurve } from "./mixer.js";

export type CornerSlot = 0 | 1 | 2 | 3; // A, B, C, D

export interface Clip {
  name: string;
  wav: Uint8Array;
  rawLatentText: string; // verbatim /encode response; reused at exact corners
  series: LatentSeries;
}

export interface AudioSink {
  play(wav: Uint8Array): Promise<void>;
  stop(): void;
}

export interface SessionState {
  info: ServiceInfo | null;
  clips: (Clip | null)[];
  planeU: number;
  planeV: number;
  drawnDescriptor: Descriptor;
  drawnValues: number[] | null;
  lastCodes: number[] | null;
  lastAudio: Uint8Array | null;
  busy: boolean;
  error: string | null;
}

export class SessionController {
  state: SessionState = {
    info: null,
    clips: [null, null, null, null],
    planeU: 0,
    planeV: 0,
    drawnDescriptor: "centroid",
    drawnValues: null,
    lastCodes: null,
    lastAudio: null,
    busy: false,
    error: null,
  };
  atlas: Atlas | null = null;
  private listeners: (() => void)[] = [];
  private renderSeq = 0; // later renders cancel the effect of earlier ones

  constructor(
    private api: ServiceClient,
    private sink: AudioSink,
  ) {}

  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  private fail(err: unknown): void {
    // the session survives service failures: state is preserved, nothing plays
    this.state.error = err instanceof ServiceError ? err.message : String(err);
    this.state.busy = false;
    this.emit();
  }

  async start(): Promise<void> {
    this.state.info = await this.api.info();
    if (this.state.info.model_kind === "discrete") {
      this.atlas = parseAtlasText(await this.api.atlas());
    }
    this.emit();
  }

  async loadClip(slot: CornerSlot, name: string, wav: Uint8Array): Promise<void> {
    this.state.busy = true;
    this.state.error = null;
    this.emit();
    try {
      const rawLatentText = await this.api.encode(wav);
      this.state.clips[slot] = {
        name,
        wav,
        rawLatentText,
        series: parseLatentText(rawLatentText),
      };
      this.state.busy = false;
      this.emit();
    } catch (err) {
      this.fail(err);
    }
  }

  /** The latent text to decode for plane position (u, v), already clamped.
   * Exact corners return the corner clip's own encoded text verbatim so a
   * corner render is byte-identical to the service-side reconstruction. */
  planeLatentText(u: number, v: number): string {
    const clips = this.state.clips;
    const corner =
      u === 0 && v === 0 ? clips[0] :
      u === 1 && v === 0 ? clips[1] :
      u === 0 && v === 1 ? (clips[2] ?? clips[0]) :
      u === 1 && v === 1 ? (clips[3] ?? clips[1]) : null;
    if (corner) return corner.rawLatentText;
    const mixed = bilinearMix(clips.map((c) => c && c.series), u, v);
    return serializeLatentText(mixed);
  }

  async renderPlane(u: number, v: number): Promise<void> {
    u = clamp01(u);
    v = clamp01(v);
    this.state.planeU = u;
    this.state.planeV = v;
    if (!this.state.clips[0] || !this.state.clips[1]) {
      this.state.error = "load clips A and B first";
      this.emit();
      return;
    }
    const seq = ++this.renderSeq;
    this.state.busy = true;
    this.state.error = null;
    this.emit();
    try {
      const wav = await this.api.decode(this.planeLatentText(u, v));
      if (seq !== this.renderSeq) return; // superseded by a newer drag
      this.state.lastAudio = wav;
      this.state.busy = false;
      this.emit();
      await this.sink.play(wav);
    } catch (err) {
      if (seq === this.renderSeq) this.fail(err);
    }
  }

  /** Drawn curve -> N clamped target values -> /target -> playback. */
  async renderTarget(
    descriptor: Descriptor,
    points: { x: number; y: number }[],
    steps: number,
  ): Promise<void> {
    if (!this.atlas) {
      this.state.error = "no atlas: target synthesis needs a discrete service";
      this.emit();
      return;
    }
    const range = descriptorRange(this.atlas, descriptor);
    if (!range) {
      this.state.error = `no code has a ${descriptor} value`;
      this.emit();
      return;
    }
    const values = sampleDrawnCurve(points, steps)
      .map((v) => clampRange(v, range[0], range[1]));
    const seq = ++this.renderSeq;
    this.state.busy = true;
    this.state.error = null;
    this.state.drawnDescriptor = descriptor;
    this.state.drawnValues = values;
    this.emit();
    try {
      const result: TargetResult = await this.api.target(descriptor, values);
      if (seq !== this.renderSeq) return;
      this.state.lastCodes = result.codes;
      this.state.lastAudio = result.audioWav;
      this.state.busy = false;
      this.emit();
      await this.sink.play(result.audioWav);
    } catch (err) {
      if (seq === this.renderSeq) this.fail(err);
    }
  }

  private valueOf(index: number, descriptor: Descriptor): number | null {
    const e = this.atlas?.entries[index];
    if (!e) return null;
    return descriptor === "centroid" ? e.centroidHz
      : descriptor === "bandwidth" ? e.bandwidthHz
      : e.f0Hz;
  }

  /** Audition one code: a short constant target at that code's exact value. */
  async playCode(index: number, descriptor: Descriptor = "centroid",
                 frames = 16): Promise<void> {
    if (!this.atlas) return;
    const value = this.valueOf(index, descriptor);
    if (value === null) return;
    const seq = ++this.renderSeq;
    this.state.busy = true;
    this.state.error = null;
    this.emit();
    try {
      const result = await this.api.target(descriptor, new Array(frames).fill(value));
      if (seq !== this.renderSeq) return;
      this.state.lastCodes = result.codes;
      this.state.lastAudio = result.audioWav;
      this.state.busy = false;
      this.emit();
      await this.sink.play(result.audioWav);
    } catch (err) {
      if (seq === this.renderSeq) this.fail(err);
    }
  }

  /** Full ordered sweep: ascending descriptor values, several frames each. */
  async playTraversal(descriptor: Descriptor, framesPerCode = 8): Promise<void> {
    if (!this.atlas) return;
    const order = this.atlas.orders[descriptor];
    if (!order) {
      this.state.error = `no sort order for ${descriptor}`;
      this.emit();
      return;
    }
    const values: number[] = [];
    for (const idx of order) {
      const v = this.valueOf(idx, descriptor);
      if (v === null) continue; // unvoiced codes are not addressable by f0
      for (let i = 0; i < framesPerCode; i++) values.push(v);
    }
    const seq = ++this.renderSeq;
    this.state.busy = true;
    this.state.error = null;
    this.emit();
    try {
      const result = await this.api.target(descriptor, values);
      if (seq !== this.renderSeq) return;
      this.state.lastCodes = result.codes;
      this.state.lastAudio = result.audioWav;
      this.state.busy = false;
      this.emit();
      await this.sink.play(result.audioWav);
    } catch (err) {
      if (seq === this.renderSeq) this.fail(err);
    }
  }
}
