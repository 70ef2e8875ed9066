// Typed client for the inference service. The fetch function is injected so
// tests can run against a contract fake, and so failures surface as typed
// errors rather than scattered response handling.

import { base64ToBytes, bytesToBase64 } from "./wav.js";

export interface ServiceInfo {
  model_kind: "continuous" | "discrete";
  latent_dim: number;
  sample_rate: number;
  fft_size: number;
  hop: number;
  codebook_size?: number;
}

export interface TargetResult {
  codes: number[];
  audioWav: Uint8Array;
}

export type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string | Uint8Array;
}) => Promise<{
  status: number;
  text(): Promise<string>;
  arrayBuffer(): Promise<ArrayBuffer>;
  json(): Promise<unknown>;
}>;

export class ServiceError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ServiceClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike,
  ) {}

  private async request(path: string, init?: Parameters<FetchLike>[1]) {
    let response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ServiceError(0, `service unreachable: ${String(err)}`);
    }
    if (response.status !== 200) {
      let detail = `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { error?: string };
        if (body && body.error) detail = `${detail}: ${body.error}`;
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ServiceError(response.status, detail);
    }
    return response;
  }

  async info(): Promise<ServiceInfo> {
    const r = await this.request("/info");
    return (await r.json()) as ServiceInfo;
  }

  async encode(wav: Uint8Array): Promise<string> {
    const r = await this.request("/encode", {
      method: "POST",
      headers: { "content-type": "audio/wav" },
      body: wav,
    });
    return r.text();
  }

  async decode(latentText: string): Promise<Uint8Array> {
    const r = await this.request("/decode", {
      method: "POST",
      headers: { "content-type": "text/plain" },
      body: latentText,
    });
    return new Uint8Array(await r.arrayBuffer());
  }

  async reconstruct(wav: Uint8Array): Promise<Uint8Array> {
    const r = await this.request("/reconstruct", {
      method: "POST",
      headers: { "content-type": "audio/wav" },
      body: wav,
    });
    return new Uint8Array(await r.arrayBuffer());
  }

  async atlas(): Promise<string> {
    const r = await this.request("/atlas");
    return r.text();
  }

  async target(descriptor: string, values: number[],
               gainDb?: number[]): Promise<TargetResult> {
    const r = await this.request("/target", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ descriptor, values, gain_db: gainDb ?? null }),
    });
    const body = (await r.json()) as { codes: number[]; audio_wav_base64: string };
    return { codes: body.codes, audioWav: base64ToBytes(body.audio_wav_base64) };
  }

  async interpolate(a: Uint8Array, b: Uint8Array, curve: number[]): Promise<Uint8Array> {
    const r = await this.request("/interpolate", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        a: bytesToBase64(a),
        b: bytesToBase64(b),
        curve,
      }),
    });
    return new Uint8Array(await r.arrayBuffer());
  }
}
