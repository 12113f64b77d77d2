/** Client-side cache of generated payloads, keyed by (job, eta, seed).
 *
 * The workflow is comparative inspection across eta values, so revisiting a
 * slider position must swap the viewer instantly without refetching.
 */

import type { WorldFrames } from "./types.js";

export class GenerateCache {
  private entries = new Map<string, WorldFrames>();

  static key(jobId: string, eta: number, seed: number): string {
    return `${jobId}|${eta}|${seed}`;
  }

  has(jobId: string, eta: number, seed: number): boolean {
    return this.entries.has(GenerateCache.key(jobId, eta, seed));
  }

  get(jobId: string, eta: number, seed: number): WorldFrames | undefined {
    return this.entries.get(GenerateCache.key(jobId, eta, seed));
  }

  put(jobId: string, eta: number, seed: number, frames: WorldFrames): void {
    this.entries.set(GenerateCache.key(jobId, eta, seed), frames);
  }

  get size(): number {
    return this.entries.size;
  }

  clear(): void {
    this.entries.clear();
  }
}
