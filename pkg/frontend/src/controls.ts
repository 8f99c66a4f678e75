/** Keyboard and pointer bindings feeding the pose state.
 *
 * WASD/arrows move along the view axes, R/F move vertically, pointer drag
 * turns. Movement integrates on a timer only while keys are held, so no
 * input means no pose changes and therefore no frame requests.
 */

import { move, turn, type MoveKey, type Pose } from "./pose.js";

const KEY_MAP: Record<string, MoveKey> = {
  KeyW: "forward", ArrowUp: "forward",
  KeyS: "back", ArrowDown: "back",
  KeyA: "left", ArrowLeft: "left",
  KeyD: "right", ArrowRight: "right",
  KeyR: "up",
  KeyF: "down",
};

export class Controls {
  pose: Pose;
  speed = 2.0; // world units per second
  private held = new Set<MoveKey>();
  private dragging = false;
  private lastX = 0;
  private lastY = 0;
  private timer: number | undefined;
  private lastTick = 0;

  constructor(start: Pose, private onChange: (pose: Pose) => void) {
    this.pose = start;
  }

  attach(target: HTMLElement): void {
    window.addEventListener("keydown", (e) => {
      const key = KEY_MAP[e.code];
      if (key) {
        this.held.add(key);
        this.ensureTimer();
        e.preventDefault();
      }
    });
    window.addEventListener("keyup", (e) => {
      const key = KEY_MAP[e.code];
      if (key) this.held.delete(key);
    });
    target.addEventListener("pointerdown", (e) => {
      this.dragging = true;
      this.lastX = e.clientX;
      this.lastY = e.clientY;
      target.setPointerCapture(e.pointerId);
    });
    target.addEventListener("pointerup", () => {
      this.dragging = false;
    });
    target.addEventListener("pointermove", (e) => {
      if (!this.dragging) return;
      const dx = e.clientX - this.lastX;
      const dy = e.clientY - this.lastY;
      this.lastX = e.clientX;
      this.lastY = e.clientY;
      if (dx !== 0 || dy !== 0) {
        this.pose = turn(this.pose, dx, dy);
        this.onChange(this.pose);
      }
    });
  }

  /** Integrate held keys; runs only while something is pressed. */
  private ensureTimer(): void {
    if (this.timer !== undefined) return;
    this.lastTick = performance.now();
    this.timer = window.setInterval(() => {
      if (this.held.size === 0) {
        window.clearInterval(this.timer);
        this.timer = undefined;
        return;
      }
      const now = performance.now();
      const dt = (now - this.lastTick) / 1000;
      this.lastTick = now;
      this.pose = move(this.pose, this.held, this.speed * dt);
      this.onChange(this.pose);
    }, 33);
  }
}
