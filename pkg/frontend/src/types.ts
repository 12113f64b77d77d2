/** Payload shapes of the editing service API. */

export interface MotionInfo {
  id: string;
  label: string | null;
  frames: number;
  fps: number;
}

/** N frames x J joints x [x, y, z]. */
export type WorldFrames = number[][][];

export interface JobProgress {
  current: number;
  total: number;
}

export interface JobStatus {
  id: string;
  kind: string;
  stage: string;
  progress: JobProgress;
  smoothed_loss: number | null;
  error: string | null;
  trace_stage1: number[];
  trace_stage2: number[];
}

export interface EditFormState {
  baseId: string;
  inputId: string;
  scenario: "global" | "local";
  poseSteps: number[] | null;
  insertAt: number | null;
  mainStep: number | null;
  pad: number;
  v: number;
  rho: number;
  q: number;
  iters1: number;
  iters2: number;
  lr1: number;
  lr2: number;
  seed: number;
}

export const DEFAULT_FORM: EditFormState = {
  baseId: "",
  inputId: "",
  scenario: "local",
  poseSteps: [20],
  insertAt: null,
  mainStep: 20,
  pad: 2,
  v: 5,
  rho: 0.5,
  q: 0.5,
  iters1: 800,
  iters2: 800,
  lr1: 1e-3,
  lr2: 1e-6,
  seed: 0,
};
