/** HTTP client for the frame service: /meta and /frame. */

export interface Meta {
  count: number;
  bbox: { min: number[]; max: number[]; degenerate: boolean };
  suggested_pose: { position: number[]; target: number[]; yaw: number; pitch: number };
  strategies: string[];
  defaults: { strategy: string; tau: number; max_pixels: number };
}

export interface PoseRequest {
  position: [number, number, number];
  yaw: number;
  pitch: number;
  width: number;
  height: number;
  strategy: string;
  fov_y?: number;
}

/** Stats come verbatim from the X-Flash-* response headers. */
export interface FrameStats {
  frameMs: string;
  pairsEmitted: string;
  pairsContributing: string;
  gaussiansRetained: string;
  strategy: string;
}

export interface FrameResult {
  body: ArrayBuffer;
  stats: FrameStats;
}

export class FrameClient {
  constructor(private baseUrl: string) {}

  async getMeta(): Promise<Meta> {
    const resp = await fetch(`${this.baseUrl}/meta`);
    if (!resp.ok) {
      throw new Error(`meta failed: HTTP ${resp.status}`);
    }
    return (await resp.json()) as Meta;
  }

  async fetchFrame(pose: PoseRequest): Promise<FrameResult> {
    const resp = await fetch(`${this.baseUrl}/frame`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(pose),
    });
    if (!resp.ok) {
      let detail = `HTTP ${resp.status}`;
      try {
        const err = (await resp.json()) as { error?: string };
        if (err.error) detail = `${detail}: ${err.error}`;
      } catch {
        /* non-JSON error body */
      }
      throw new Error(`frame failed: ${detail}`);
    }
    const body = await resp.arrayBuffer();
    const h = resp.headers;
    return {
      body,
      stats: {
        frameMs: h.get("X-Flash-Frame-Ms") ?? "?",
        pairsEmitted: h.get("X-Flash-Pairs-Emitted") ?? "?",
        pairsContributing: h.get("X-Flash-Pairs-Contributing") ?? "?",
        gaussiansRetained: h.get("X-Flash-Gaussians-Retained") ?? "?",
        strategy: h.get("X-Flash-Strategy") ?? "?",
      },
    };
  }
}
