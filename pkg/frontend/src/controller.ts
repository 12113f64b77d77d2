/** Edit-session workflow detached from the DOM so it can be unit-tested. */

import type { ApiClient } from "./api.js";
import { GenerateCache } from "./cache.js";
import type { EditFormState, WorldFrames } from "./types.js";
import { validateEditForm, validateEta } from "./validation.js";

export class ValidationFailed extends Error {
  constructor(public errors: string[]) {
    super(errors.join("; "));
  }
}

/** Validates locally first; an invalid form never reaches the network. */
export async function launchEdit(
  api: ApiClient,
  form: EditFormState,
  baseFrames: number,
  inputFrames: number,
): Promise<string> {
  const errors = validateEditForm(form, baseFrames, inputFrames);
  if (errors.length > 0) {
    throw new ValidationFailed(errors);
  }
  return api.submitEdit(form);
}

/** Fetches generated motions for eta values, memoized per (job, eta, seed). */
export class EtaSweeper {
  readonly cache = new GenerateCache();
  private inflight = new Map<string, Promise<WorldFrames>>();

  constructor(
    private api: ApiClient,
    private jobId: string,
  ) {}

  async fetch(eta: number, seed: number): Promise<WorldFrames> {
    const etaError = validateEta(eta);
    if (etaError) {
      throw new ValidationFailed([etaError]);
    }
    const hit = this.cache.get(this.jobId, eta, seed);
    if (hit !== undefined) {
      return hit;
    }
    const key = GenerateCache.key(this.jobId, eta, seed);
    const pending = this.inflight.get(key);
    if (pending) {
      return pending;
    }
    const promise = (async () => {
      const motionId = await this.api.generate(this.jobId, eta, seed);
      const frames = await this.api.world(motionId);
      this.cache.put(this.jobId, eta, seed, frames);
      return frames;
    })();
    this.inflight.set(key, promise);
    try {
      return await promise;
    } finally {
      this.inflight.delete(key);
    }
  }
}
