/** Viewer wiring: meta load, controls, scheduler, image display, overlay. */

import { FrameClient, type FrameResult, type PoseRequest } from "./api.js";
import { Controls } from "./controls.js";
import { Overlay } from "./overlay.js";
import { FrameScheduler } from "./scheduler.js";
import type { Pose } from "./pose.js";

const RESOLUTIONS: Array<[number, number]> = [
  [320, 180], [480, 270], [640, 360], [854, 480],
];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function start(): Promise<void> {
  const image = el<HTMLImageElement>("frame");
  const overlay = new Overlay(el("stats"), el("banner"));
  const strategySelect = el<HTMLSelectElement>("strategy");
  const resolutionSelect = el<HTMLSelectElement>("resolution");
  const client = new FrameClient("");

  let meta;
  try {
    meta = await client.getMeta();
    overlay.clearError();
  } catch (err) {
    overlay.showError(`service unreachable: ${String(err)}. Retrying in 2s`);
    window.setTimeout(() => void start(), 2000);
    return;
  }

  for (const s of meta.strategies) {
    const opt = document.createElement("option");
    opt.value = s;
    opt.textContent = s;
    if (s === meta.defaults.strategy) opt.selected = true;
    strategySelect.appendChild(opt);
  }
  RESOLUTIONS.forEach(([w, h], i) => {
    const opt = document.createElement("option");
    opt.value = String(i);
    opt.textContent = `${w} x ${h}`;
    if (w === 480) opt.selected = true; // default low: CPU frames stay live
    resolutionSelect.appendChild(opt);
  });

  let blobUrl: string | null = null;
  const scheduler = new FrameScheduler(
    (p: PoseRequest) => client.fetchFrame(p),
    (result: FrameResult, pose: PoseRequest) => {
      if (blobUrl) URL.revokeObjectURL(blobUrl);
      blobUrl = URL.createObjectURL(new Blob([result.body], { type: "image/png" }));
      image.src = blobUrl;
      overlay.showStats(result.stats, pose.width, pose.height);
      overlay.clearError();
    },
    (err) => overlay.showError(String(err)),
  );

  const startPose: Pose = {
    position: meta.suggested_pose.position as [number, number, number],
    yaw: meta.suggested_pose.yaw,
    pitch: meta.suggested_pose.pitch,
  };

  const buildRequest = (pose: Pose): PoseRequest => {
    const [w, h] = RESOLUTIONS[Number(resolutionSelect.value)];
    return {
      position: pose.position,
      yaw: pose.yaw,
      pitch: pose.pitch,
      width: w,
      height: h,
      strategy: strategySelect.value,
    };
  };

  const controls = new Controls(startPose, (pose) =>
    scheduler.request(buildRequest(pose)));
  controls.attach(el("viewport"));
  // strategy/resolution changes re-request the same pose so the overlay
  // shows the pair-count delta at identical pixels
  strategySelect.addEventListener("change", () =>
    scheduler.request(buildRequest(controls.pose)));
  resolutionSelect.addEventListener("change", () =>
    scheduler.request(buildRequest(controls.pose)));

  scheduler.request(buildRequest(startPose));
}

void start();
