/** Stats overlay: renders the X-Flash-* header values verbatim. */

import type { FrameStats } from "./api.js";

export function overlayText(stats: FrameStats, width: number,
                            height: number): string {
  return [
    `strategy  ${stats.strategy}`,
    `frame     ${stats.frameMs} ms`,
    `pairs     ${stats.pairsEmitted} emitted / ${stats.pairsContributing} contributing`,
    `gaussians ${stats.gaussiansRetained}`,
    `size      ${width}x${height}`,
  ].join("\n");
}

export class Overlay {
  constructor(private statsEl: HTMLElement, private bannerEl: HTMLElement) {}

  showStats(stats: FrameStats, width: number, height: number): void {
    this.statsEl.textContent = overlayText(stats, width, height);
  }

  showError(message: string): void {
    this.bannerEl.textContent = message;
    this.bannerEl.classList.remove("hidden");
  }

  clearError(): void {
    this.bannerEl.classList.add("hidden");
  }
}
