/** First-person pose state: position plus yaw/pitch, service convention
 * (yaw about world y, then pitch; yaw 0 / pitch 0 looks down +z, image y
 * points down). */

export interface Pose {
  position: [number, number, number];
  yaw: number;
  pitch: number;
}

const PITCH_LIMIT = Math.PI / 2 - 0.01;

/** Camera axes in world coordinates (rows of the world-to-camera matrix). */
export function cameraAxes(yaw: number, pitch: number): {
  right: [number, number, number];
  down: [number, number, number];
  forward: [number, number, number];
} {
  const cy = Math.cos(yaw), sy = Math.sin(yaw);
  const cp = Math.cos(pitch), sp = Math.sin(pitch);
  return {
    right: [cy, 0, -sy],
    down: [sp * sy, cp, sp * cy],
    forward: [cp * sy, -sp, cp * cy],
  };
}

export type MoveKey = "forward" | "back" | "left" | "right" | "up" | "down";

/** Advance the pose along the view axes; returns a new pose. */
export function move(pose: Pose, keys: Set<MoveKey>, distance: number): Pose {
  if (keys.size === 0) return pose;
  const ax = cameraAxes(pose.yaw, pose.pitch);
  const delta: [number, number, number] = [0, 0, 0];
  const add = (v: [number, number, number], s: number) => {
    delta[0] += s * v[0];
    delta[1] += s * v[1];
    delta[2] += s * v[2];
  };
  if (keys.has("forward")) add(ax.forward, 1);
  if (keys.has("back")) add(ax.forward, -1);
  if (keys.has("right")) add(ax.right, 1);
  if (keys.has("left")) add(ax.right, -1);
  if (keys.has("down")) add(ax.down, 1);
  if (keys.has("up")) add(ax.down, -1);
  return {
    position: [
      pose.position[0] + distance * delta[0],
      pose.position[1] + distance * delta[1],
      pose.position[2] + distance * delta[2],
    ],
    yaw: pose.yaw,
    pitch: pose.pitch,
  };
}

/** Pointer drag: dx to the right increases yaw, dy down looks down. */
export function turn(pose: Pose, dxPixels: number, dyPixels: number,
                     radiansPerPixel = 0.005): Pose {
  const pitch = Math.max(-PITCH_LIMIT,
    Math.min(PITCH_LIMIT, pose.pitch + dyPixels * radiansPerPixel));
  return {
    position: pose.position,
    yaw: pose.yaw + dxPixels * radiansPerPixel,
    pitch,
  };
}
