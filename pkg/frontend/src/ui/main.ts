import { ServiceClient } from "../api.js";
import { AudioSink, CornerSlot, SessionController } from "../session.js";
import { CodebookGrid, CurveEditor, PlanePad, drawCentroidPlot } from "./views.js";

class WebAudioSink implements AudioSink {
  private ctx: AudioContext | null = null;
  private source: AudioBufferSourceNode | null = null;

  async play(wav: Uint8Array): Promise<void> {
    if (!this.ctx) this.ctx = new AudioContext();
    this.stop();
    const buffer = await this.ctx.decodeAudioData(
      wav.buffer.slice(wav.byteOffset, wav.byteOffset + wav.byteLength) as ArrayBuffer);
    const source = this.ctx.createBufferSource();
    source.buffer = buffer;
    source.connect(this.ctx.destination);
    source.start();
    this.source = source;
  }

  stop(): void {
    if (this.source) {
      try { this.source.stop(); } catch { /* already stopped */ }
      this.source = null;
    }
  }
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function boot() {
  const base = (document.querySelector("meta[name=service-url]") as HTMLMetaElement)
    ?.content || "http://127.0.0.1:8765";
  const session = new SessionController(
    new ServiceClient(base, (url, init) => fetch(url, init as RequestInit)),
    new WebAudioSink());

  const banner = el<HTMLDivElement>("banner");
  session.onChange(() => {
    const s = session.state;
    banner.textContent = s.error ? `service error: ${s.error}`
      : s.busy ? "rendering..."
      : s.info ? `${s.info.model_kind} model @ ${base}` : "connecting...";
    banner.className = s.error ? "banner error" : "banner";
    drawCentroidPlot(el<HTMLCanvasElement>("plot"), s.lastAudio,
                     s.info?.fft_size ?? 1024, s.info?.hop ?? 256);
    if (s.lastCodes) {
      el<HTMLDivElement>("codes").textContent = `codes: ${s.lastCodes.join(" ")}`;
    }
  });

  for (const [slot, id] of [[0, "clip-a"], [1, "clip-b"], [2, "clip-c"], [3, "clip-d"]] as const) {
    el<HTMLInputElement>(id).addEventListener("change", async (ev) => {
      const input = ev.target as HTMLInputElement;
      const file = input.files?.[0];
      if (!file) return;
      const bytes = new Uint8Array(await file.arrayBuffer());
      await session.loadClip(slot as CornerSlot, file.name, bytes);
    });
  }

  new PlanePad(el<HTMLCanvasElement>("plane"), session);
  new CurveEditor(
    el<HTMLCanvasElement>("curve"), session,
    el<HTMLSelectElement>("descriptor"), el<HTMLButtonElement>("render-target"),
    () => {
      // one target value per latent frame of a 4 s render
      const info = session.state.info;
      if (!info) return 64;
      return Math.floor((4 * info.sample_rate - info.fft_size) / info.hop) + 1;
    });
  new CodebookGrid(el<HTMLDivElement>("grid"), session,
                   el<HTMLSelectElement>("sort-by"), el<HTMLButtonElement>("traverse"));

  try {
    await session.start();
  } catch (err) {
    banner.textContent = `service error: ${String(err)}`;
    banner.className = "banner error";
  }
}

void boot();
