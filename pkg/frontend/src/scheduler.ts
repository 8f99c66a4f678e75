/** Render-on-demand frame loop: at most one request in flight, newer pose
 * updates coalesce to the latest, and the displayed frame always carries
 * the pose of the request that produced it. */

import type { FrameResult, PoseRequest } from "./api.js";

export type SendFn = (pose: PoseRequest) => Promise<FrameResult>;

export class FrameScheduler {
  private inFlight = false;
  private pending: PoseRequest | null = null;
  /** counts completed sends; tests use it to verify coalescing */
  sendCount = 0;

  constructor(
    private send: SendFn,
    private onFrame: (result: FrameResult, pose: PoseRequest) => void,
    private onError: (err: unknown) => void,
  ) {}

  get busy(): boolean {
    return this.inFlight;
  }

  /** Queue the latest pose; triggers a send unless one is in flight. */
  request(pose: PoseRequest): void {
    this.pending = pose;
    void this.pump();
  }

  /** Resolves once nothing is in flight and nothing is pending. */
  async idle(): Promise<void> {
    while (this.inFlight || this.pending !== null) {
      await new Promise((r) => setTimeout(r, 5));
    }
  }

  private async pump(): Promise<void> {
    if (this.inFlight || this.pending === null) return;
    const pose = this.pending;
    this.pending = null;
    this.inFlight = true;
    try {
      const result = await this.send(pose);
      this.sendCount += 1;
      this.onFrame(result, pose);
    } catch (err) {
      this.sendCount += 1;
      this.onError(err);
    } finally {
      this.inFlight = false;
      void this.pump(); // drain whatever coalesced while we were busy
    }
  }
}
