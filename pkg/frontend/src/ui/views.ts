// DOM widgets. Deliberately thin: they read SessionController state, draw,
// and forward pointer events; no model math and no fetch calls live here.

import { Descriptor, descriptorRange, descriptorValue } from "../atlasText.js";
import { centroidTrack } from "../dsp.js";
import { SessionController } from "../session.js";
import { parseWav } from "../wav.js";

export function drawCentroidPlot(canvas: HTMLCanvasElement, wav: Uint8Array | null,
                                 fftSize: number, hop: number): void {
  const ctx = canvas.getContext("2d")!;
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!wav) return;
  const { samples, sampleRate } = parseWav(wav);
  const track = centroidTrack(samples, sampleRate, fftSize, hop);
  if (track.length === 0) return;
  const top = Math.max(...track, 1);
  ctx.strokeStyle = "#67d1a8";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  track.forEach((c, i) => {
    const x = (i / Math.max(track.length - 1, 1)) * canvas.width;
    const y = canvas.height - (c / top) * (canvas.height - 8) - 4;
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillStyle = "#9aa7bd";
  ctx.font = "11px monospace";
  ctx.fillText(`centroid, peak ${top.toFixed(0)} Hz`, 8, 14);
}

export class PlanePad {
  constructor(
    private canvas: HTMLCanvasElement,
    private session: SessionController,
  ) {
    let dragging = false;
    const move = (ev: PointerEvent) => {
      const rect = canvas.getBoundingClientRect();
      const u = (ev.clientX - rect.left) / rect.width;
      const v = 1 - (ev.clientY - rect.top) / rect.height;
      void session.renderPlane(u, v);
    };
    canvas.addEventListener("pointerdown", (ev) => {
      dragging = true;
      canvas.setPointerCapture(ev.pointerId);
      move(ev);
    });
    canvas.addEventListener("pointermove", (ev) => dragging && move(ev));
    canvas.addEventListener("pointerup", () => (dragging = false));
    session.onChange(() => this.draw());
    this.draw();
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d")!;
    const { width, height } = this.canvas;
    ctx.fillStyle = "#141a26";
    ctx.fillRect(0, 0, width, height);
    ctx.strokeStyle = "#2c3852";
    for (let i = 1; i < 4; i++) {
      ctx.beginPath();
      ctx.moveTo((i / 4) * width, 0);
      ctx.lineTo((i / 4) * width, height);
      ctx.moveTo(0, (i / 4) * height);
      ctx.lineTo(width, (i / 4) * height);
      ctx.stroke();
    }
    const names = ["A", "B", "C", "D"];
    const spots: [number, number][] = [[0, 1], [1, 1], [0, 0], [1, 0]];
    ctx.font = "12px monospace";
    names.forEach((n, i) => {
      const clip = this.session.state.clips[i];
      ctx.fillStyle = clip ? "#67d1a8" : "#47506a";
      const [x, y] = spots[i];
      ctx.fillText(clip ? `${n}: ${clip.name}` : `${n}: -`,
                   x * (width - 90) + 6, y * (height - 18) + 12);
    });
    const u = this.session.state.planeU;
    const v = this.session.state.planeV;
    ctx.fillStyle = "#e8b059";
    ctx.beginPath();
    ctx.arc(u * width, (1 - v) * height, 6, 0, 2 * Math.PI);
    ctx.fill();
  }
}

export class CurveEditor {
  points: { x: number; y: number }[] = [];

  constructor(
    private canvas: HTMLCanvasElement,
    private session: SessionController,
    private descriptorSelect: HTMLSelectElement,
    renderButton: HTMLButtonElement,
    private steps: () => number,
  ) {
    let drawing = false;
    const add = (ev: PointerEvent) => {
      const rect = canvas.getBoundingClientRect();
      const range = this.range();
      if (!range) return;
      const x = (ev.clientX - rect.left) / rect.width;
      const frac = 1 - (ev.clientY - rect.top) / rect.height;
      this.points.push({ x, y: range[0] + frac * (range[1] - range[0]) });
      this.draw();
    };
    canvas.addEventListener("pointerdown", (ev) => {
      drawing = true;
      this.points = [];
      canvas.setPointerCapture(ev.pointerId);
      add(ev);
    });
    canvas.addEventListener("pointermove", (ev) => drawing && add(ev));
    canvas.addEventListener("pointerup", () => (drawing = false));
    renderButton.addEventListener("click", () => {
      if (this.points.length > 0) {
        void session.renderTarget(this.descriptor(), this.points, this.steps());
      }
    });
    session.onChange(() => this.draw());
    this.draw();
  }

  descriptor(): Descriptor {
    return this.descriptorSelect.value as Descriptor;
  }

  range(): [number, number] | null {
    return this.session.atlas ? descriptorRange(this.session.atlas, this.descriptor()) : null;
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d")!;
    const { width, height } = this.canvas;
    ctx.fillStyle = "#141a26";
    ctx.fillRect(0, 0, width, height);
    const range = this.range();
    ctx.fillStyle = "#9aa7bd";
    ctx.font = "11px monospace";
    if (!range) {
      ctx.fillText("no atlas range for this descriptor", 8, 16);
      return;
    }
    ctx.fillText(`${this.descriptor()} ${range[0].toFixed(0)}..${range[1].toFixed(0)}`, 8, 14);
    const toY = (v: number) =>
      height - ((v - range[0]) / Math.max(range[1] - range[0], 1e-9)) * (height - 10) - 5;
    ctx.strokeStyle = "#e8b059";
    ctx.lineWidth = 2;
    ctx.beginPath();
    [...this.points].sort((p, q) => p.x - q.x).forEach((p, i) => {
      const x = p.x * width;
      const y = toY(p.y);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
}

export class CodebookGrid {
  sortBy: Descriptor = "centroid";

  constructor(
    private root: HTMLElement,
    private session: SessionController,
    sortSelect: HTMLSelectElement,
    traverseButton: HTMLButtonElement,
  ) {
    sortSelect.addEventListener("change", () => {
      this.sortBy = sortSelect.value as Descriptor;
      this.draw();
    });
    traverseButton.addEventListener("click", () => {
      void session.playTraversal(this.sortBy);
    });
    session.onChange(() => this.draw());
    this.draw();
  }

  draw(): void {
    const atlas = this.session.atlas;
    this.root.textContent = "";
    if (!atlas) {
      this.root.textContent = "continuous model: no codebook to browse";
      return;
    }
    const order = atlas.orders[this.sortBy] ?? atlas.entries.map((e) => e.index);
    for (const idx of order) {
      const e = atlas.entries[idx];
      const tile = document.createElement("button");
      tile.className = "tile";
      const v = descriptorValue(e, this.sortBy);
      tile.textContent = `#${e.index}\n${v === null ? "-" : v.toFixed(0)}`;
      tile.title = `centroid ${e.centroidHz.toFixed(1)} Hz, ` +
        `bandwidth ${e.bandwidthHz.toFixed(1)} Hz, ` +
        (e.f0Hz === null ? "unvoiced" : `f0 ${e.f0Hz.toFixed(1)} Hz`);
      if (this.sortBy === "f0" && e.f0Hz === null) {
        tile.disabled = true;
        tile.title += " (not addressable by f0 targets)";
      }
      tile.addEventListener("click", () => void this.session.playCode(e.index, this.sortBy));
      this.root.appendChild(tile);
    }
  }
}
