/** Orthographic stick-figure rendering and drift-free playback.
 *
 * Projection and cursor math are pure functions; the viewer class only owns
 * the canvas and the animation loop.
 */

import type { WorldFrames } from "./types.js";

export type ViewMode = "side" | "top";

/** The desk skeleton is a star: every non-root joint hangs off the root. */
export const BONES: ReadonlyArray<readonly [number, number]> = [
  [0, 1],
  [0, 2],
  [0, 3],
  [0, 4],
];

export function clampCursor(cursor: number, frameCount: number): number {
  if (frameCount <= 0) return 0;
  return Math.min(Math.max(Math.round(cursor), 0), frameCount - 1);
}

/** side view: screen u = world z, v = world y; top view: u = x, v = z. */
export function projectJoint(
  point: readonly number[],
  mode: ViewMode,
): [number, number] {
  return mode === "side" ? [point[2], point[1]] : [point[0], point[2]];
}

export interface Fit {
  scale: number;
  du: number;
  dv: number;
}

/** Fit every projected joint of every frame into the canvas with a margin. */
export function fitTransform(
  frames: WorldFrames,
  mode: ViewMode,
  width: number,
  height: number,
  margin = 24,
): Fit {
  let uMin = Infinity;
  let uMax = -Infinity;
  let vMin = Infinity;
  let vMax = -Infinity;
  for (const frame of frames) {
    for (const joint of frame) {
      const [u, v] = projectJoint(joint, mode);
      uMin = Math.min(uMin, u);
      uMax = Math.max(uMax, u);
      vMin = Math.min(vMin, v);
      vMax = Math.max(vMax, v);
    }
  }
  if (!Number.isFinite(uMin)) {
    return { scale: 1, du: width / 2, dv: height / 2 };
  }
  const spanU = Math.max(uMax - uMin, 1e-6);
  const spanV = Math.max(vMax - vMin, 1e-6);
  const scale = Math.min(
    (width - 2 * margin) / spanU,
    (height - 2 * margin) / spanV,
  );
  return {
    scale,
    du: width / 2 - scale * (uMin + uMax) / 2,
    dv: height / 2 + scale * (vMin + vMax) / 2,
  };
}

export function toScreen(
  point: readonly number[],
  mode: ViewMode,
  fit: Fit,
): [number, number] {
  const [u, v] = projectJoint(point, mode);
  // v grows upward in world space, downward on canvas
  return [fit.du + fit.scale * u, fit.dv - fit.scale * v];
}

/** Frame index after `elapsedMs` of looping playback; exact, so no drift. */
export function playbackFrame(
  elapsedMs: number,
  fps: number,
  frameCount: number,
): number {
  if (frameCount <= 0) return 0;
  return Math.floor((elapsedMs / 1000) * fps) % frameCount;
}

export class SkeletonViewer {
  frames: WorldFrames = [];
  cursor = 0;
  mode: ViewMode = "side";
  fps = 20;
  playing = false;
  private startedAt = 0;
  private rafHandle: number | null = null;

  constructor(private canvas: HTMLCanvasElement, private emptyText = "no motion loaded") {}

  /** Swapping payloads (A/B toggling) keeps the cursor position. */
  setFrames(frames: WorldFrames, fps?: number): void {
    this.frames = frames;
    if (fps !== undefined) this.fps = fps;
    this.cursor = clampCursor(this.cursor, frames.length);
    this.draw();
  }

  seek(cursor: number): void {
    this.cursor = clampCursor(cursor, this.frames.length);
    this.draw();
  }

  setMode(mode: ViewMode): void {
    this.mode = mode;
    this.draw();
  }

  play(): void {
    if (this.playing || this.frames.length === 0) return;
    this.playing = true;
    this.startedAt = performance.now() - (this.cursor / this.fps) * 1000;
    const step = (now: number) => {
      if (!this.playing) return;
      this.cursor = playbackFrame(now - this.startedAt, this.fps, this.frames.length);
      this.draw();
      this.rafHandle = requestAnimationFrame(step);
    };
    this.rafHandle = requestAnimationFrame(step);
  }

  pause(): void {
    this.playing = false;
    if (this.rafHandle !== null) {
      cancelAnimationFrame(this.rafHandle);
      this.rafHandle = null;
    }
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#10141a";
    ctx.fillRect(0, 0, width, height);
    if (this.frames.length === 0) {
      ctx.fillStyle = "#8b98ab";
      ctx.font = "14px sans-serif";
      ctx.textAlign = "center";
      ctx.fillText(this.emptyText, width / 2, height / 2);
      return;
    }
    const fit = fitTransform(this.frames, this.mode, width, height);
    const frame = this.frames[clampCursor(this.cursor, this.frames.length)];
    ctx.strokeStyle = "#5ac8fa";
    ctx.lineWidth = 2;
    for (const [a, b] of BONES) {
      if (a >= frame.length || b >= frame.length) continue;
      const [ax, ay] = toScreen(frame[a], this.mode, fit);
      const [bx, by] = toScreen(frame[b], this.mode, fit);
      ctx.beginPath();
      ctx.moveTo(ax, ay);
      ctx.lineTo(bx, by);
      ctx.stroke();
    }
    for (let j = 0; j < frame.length; j++) {
      const [x, y] = toScreen(frame[j], this.mode, fit);
      ctx.fillStyle = j === 0 ? "#ffd60a" : "#f2f4f8";
      ctx.beginPath();
      ctx.arc(x, y, j === 0 ? 5 : 4, 0, Math.PI * 2);
      ctx.fill();
    }
  }
}
