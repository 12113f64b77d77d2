import { describe, expect, it } from "vitest";

import { DEFAULT_FORM, type EditFormState } from "../src/types.js";
import { validateEditForm, validateEta } from "../src/validation.js";

const form = (patch: Partial<EditFormState> = {}): EditFormState => ({
  ...DEFAULT_FORM,
  baseId: "base:jump",
  inputId: "input:legs_spread_pose",
  ...patch,
});

describe("validateEditForm", () => {
  it("accepts the default local pose edit", () => {
    expect(validateEditForm(form(), 40, 1)).toEqual([]);
  });

  it("rejects v = 1", () => {
    const errors = validateEditForm(form({ v: 1 }), 40, 1);
    expect(errors).toContain("v must exceed 1");
  });

  it("rejects v below 1", () => {
    expect(validateEditForm(form({ v: 0.5 }), 40, 1)).toContain("v must exceed 1");
  });

  it("rejects negative rho and out-of-range q", () => {
    expect(validateEditForm(form({ rho: -0.1 }), 40, 1).length).toBe(1);
    expect(validateEditForm(form({ q: 1.5 }), 40, 1).length).toBe(1);
  });

  it("requires pose steps within the base motion", () => {
    const errors = validateEditForm(form({ poseSteps: [45], mainStep: 45 }), 40, 1);
    expect(errors.some((e) => e.includes("pose_steps"))).toBe(true);
  });

  it("requires the main step to be one of the pose steps", () => {
    const errors = validateEditForm(form({ poseSteps: [10], mainStep: 11 }), 40, 1);
    expect(errors.some((e) => e.includes("main_step"))).toBe(true);
  });

  it("rejects clip overruns", () => {
    const errors = validateEditForm(
      form({ poseSteps: null, insertAt: 35, mainStep: 36 }),
      40,
      20,
    );
    expect(errors.some((e) => e.includes("overrun"))).toBe(true);
  });

  it("requires global clip lengths to match", () => {
    const errors = validateEditForm(
      form({ scenario: "global", poseSteps: null }),
      40,
      20,
    );
    expect(errors.some((e) => e.includes("length"))).toBe(true);
  });
});

describe("validateEta", () => {
  it("accepts the closed unit interval", () => {
    expect(validateEta(0)).toBeNull();
    expect(validateEta(0.5)).toBeNull();
    expect(validateEta(1)).toBeNull();
  });

  it("rejects values outside [0, 1]", () => {
    expect(validateEta(-0.01)).toMatch(/eta/);
    expect(validateEta(1.01)).toMatch(/eta/);
    expect(validateEta(Number.NaN)).toMatch(/eta/);
  });
});
