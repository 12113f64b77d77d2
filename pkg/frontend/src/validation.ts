/** Client-side mirror of the server's edit-config invariants.
 *
 * The form is only submitted when this returns no errors, so invalid
 * hyper-parameters never reach the network.
 */

import type { EditFormState } from "./types.js";

export function validateEta(eta: number): string | null {
  if (!Number.isFinite(eta) || eta < 0 || eta > 1) {
    return "eta must lie in [0, 1]";
  }
  return null;
}

export function validateEditForm(
  form: EditFormState,
  baseFrames: number,
  inputFrames: number,
): string[] {
  const errors: string[] = [];
  if (!form.baseId) errors.push("select a base motion");
  if (!form.inputId) errors.push("select an input motion");
  if (!(form.v > 1)) errors.push("v must exceed 1");
  if (!(form.rho >= 0)) errors.push("rho must be non-negative");
  if (!(form.q >= 0 && form.q <= 1)) errors.push("base_train_prob must lie in [0, 1]");
  if (!(form.pad >= 0)) errors.push("pad must be non-negative");
  if (form.iters1 < 0 || form.iters2 < 0) {
    errors.push("iteration counts must be non-negative");
  }
  if (!(form.lr1 > 0) || !(form.lr2 > 0)) {
    errors.push("learning rates must be positive");
  }
  const isPose = inputFrames === 1;
  if (isPose && form.scenario === "local") {
    if (!form.poseSteps || form.poseSteps.length === 0) {
      errors.push("local static_pose edit requires pose_steps");
    } else {
      if (form.poseSteps.some((p) => p < 0 || p >= baseFrames)) {
        errors.push("pose_steps must lie within the base motion");
      }
      if (form.mainStep === null || !form.poseSteps.includes(form.mainStep)) {
        errors.push("main_step must be one of pose_steps");
      }
    }
  }
  if (!isPose && form.scenario === "local") {
    if (form.insertAt === null) {
      errors.push("local clip edit requires insert_at");
    } else if (form.insertAt < 0 || form.insertAt + inputFrames > baseFrames) {
      errors.push("clip overruns base: insert_at + clip frames must not exceed base frames");
    }
    if (form.mainStep === null || form.mainStep < 0 || form.mainStep >= baseFrames) {
      errors.push("main_step must lie within the base motion");
    }
  }
  if (!isPose && form.scenario === "global" && inputFrames !== baseFrames) {
    errors.push("global clip edit requires the clip length to equal the base length");
  }
  return errors;
}
