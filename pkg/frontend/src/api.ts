/** Thin fetch client for the editing service; fetch is injectable for tests. */

import type { EditFormState, JobStatus, MotionInfo, WorldFrames } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    detail: string,
  ) {
    super(detail);
  }
}

export interface ApiClient {
  listMotions(): Promise<MotionInfo[]>;
  world(motionId: string): Promise<WorldFrames>;
  submitEdit(form: EditFormState): Promise<string>;
  jobStatus(jobId: string): Promise<JobStatus>;
  generate(jobId: string, eta: number, seed: number): Promise<string>;
}

function editBody(form: EditFormState): Record<string, unknown> {
  return {
    base_id: form.baseId,
    input_id: form.inputId,
    scenario: form.scenario,
    pose_steps: form.poseSteps,
    insert_at: form.insertAt,
    main_step: form.mainStep,
    pad: form.pad,
    v: form.v,
    rho: form.rho,
    q: form.q,
    iters1: form.iters1,
    iters2: form.iters2,
    lr1: form.lr1,
    lr2: form.lr2,
    seed: form.seed,
  };
}

export function createApi(baseUrl = "", fetchFn: typeof fetch = fetch): ApiClient {
  async function call<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetchFn(baseUrl + path, init);
    const text = await resp.text();
    let body: unknown = null;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      body = text;
    }
    if (!resp.ok) {
      const detail =
        body && typeof body === "object" && "detail" in body
          ? String((body as { detail: unknown }).detail)
          : `request failed with status ${resp.status}`;
      throw new ApiError(resp.status, detail);
    }
    return body as T;
  }

  return {
    listMotions: () => call<MotionInfo[]>("/api/motions"),
    world: (motionId) =>
      call<WorldFrames>(`/api/motions/${encodeURIComponent(motionId)}/world`),
    submitEdit: async (form) => {
      const body = await call<{ job_id: string }>("/api/edits", {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(editBody(form)),
      });
      return body.job_id;
    },
    jobStatus: (jobId) => call<JobStatus>(`/api/edits/${encodeURIComponent(jobId)}`),
    generate: async (jobId, eta, seed) => {
      const body = await call<{ motion_id: string }>(
        `/api/edits/${encodeURIComponent(jobId)}/generate?eta=${eta}&seed=${seed}`,
        { method: "POST" },
      );
      return body.motion_id;
    },
  };
}
