/** DOM wiring for the studio page. */

import { createApi, ApiError } from "./api.js";
import { drawLossChart } from "./chart.js";
import { EtaSweeper, launchEdit, ValidationFailed } from "./controller.js";
import type { EditFormState, JobStatus, MotionInfo } from "./types.js";
import { DEFAULT_FORM } from "./types.js";
import { SkeletonViewer } from "./viewer.js";

const api = createApi("");
const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

type Slot = "base" | "combined" | "generated";

const state = {
  motions: [] as MotionInfo[],
  jobId: null as string | null,
  sweeper: null as EtaSweeper | null,
  payloads: new Map<Slot, { frames: number[][][]; fps: number }>(),
  activeSlot: "base" as Slot,
  pollTimer: null as number | null,
};

const viewer = new SkeletonViewer($("viewer") as HTMLCanvasElement);

function motionInfo(id: string): MotionInfo | undefined {
  return state.motions.find((m) => m.id === id);
}

function setBanner(text: string | null): void {
  const banner = $("banner");
  banner.textContent = text ?? "";
  banner.style.display = text ? "block" : "none";
}

function setErrors(errors: string[]): void {
  $("errors").textContent = errors.join(" | ");
}

function showSlot(slot: Slot): void {
  const payload = state.payloads.get(slot);
  if (!payload) return;
  state.activeSlot = slot;
  for (const name of ["base", "combined", "generated"] as Slot[]) {
    $(`show-${name}`).classList.toggle("active", name === slot);
  }
  viewer.setFrames(payload.frames, payload.fps);
  const scrubber = $("scrubber") as HTMLInputElement;
  scrubber.max = String(Math.max(payload.frames.length - 1, 0));
}

async function loadSlot(slot: Slot, motionId: string, fps: number): Promise<void> {
  const frames = await api.world(motionId);
  state.payloads.set(slot, { frames, fps });
  if (state.activeSlot === slot) showSlot(slot);
}

function formFromInputs(): EditFormState {
  const value = (id: string) => ($(id) as HTMLInputElement).value;
  const num = (id: string) => Number(value(id));
  const poseSteps = value("pose-steps").trim();
  return {
    ...DEFAULT_FORM,
    baseId: value("base-select"),
    inputId: value("input-select"),
    scenario: value("scenario") as "global" | "local",
    poseSteps: poseSteps
      ? poseSteps.split(",").map((s) => Number(s.trim()))
      : null,
    insertAt: value("insert-at") === "" ? null : num("insert-at"),
    mainStep: value("main-step") === "" ? null : num("main-step"),
    pad: num("pad"),
    v: num("v"),
    rho: num("rho"),
    q: num("q"),
    iters1: num("iters1"),
    iters2: num("iters2"),
    seed: num("seed"),
  };
}

function renderStatus(status: JobStatus): void {
  $("stage").textContent = status.error
    ? `${status.stage}: ${status.error}`
    : status.stage;
  const pct = status.progress.total
    ? Math.round((100 * status.progress.current) / status.progress.total)
    : 0;
  ($("progress") as HTMLProgressElement).value = pct;
  $("loss").textContent =
    status.smoothed_loss === null ? "-" : status.smoothed_loss.toExponential(3);
  drawLossChart(
    $("chart") as HTMLCanvasElement,
    status.trace_stage1,
    status.trace_stage2,
  );
}

function stopPolling(): void {
  if (state.pollTimer !== null) {
    window.clearInterval(state.pollTimer);
    state.pollTimer = null;
  }
}

function startPolling(jobId: string): void {
  stopPolling();
  state.pollTimer = window.setInterval(async () => {
    try {
      const status = await api.jobStatus(jobId);
      setBanner(null);
      renderStatus(status);
      if (status.stage === "ready" || status.stage === "failed") {
        stopPolling();
        if (status.stage === "ready") {
          ($("eta") as HTMLInputElement).disabled = false;
          await sweep();
        }
      }
    } catch (err) {
      setBanner(`connection lost, retrying: ${String(err)}`);
    }
  }, 500);
}

async function onLaunch(): Promise<void> {
  setErrors([]);
  const form = formFromInputs();
  const base = motionInfo(form.baseId);
  const input = motionInfo(form.inputId);
  if (!base || !input) {
    setErrors(["select base and input motions"]);
    return;
  }
  try {
    const jobId = await launchEdit(api, form, base.frames, input.frames);
    state.jobId = jobId;
    state.sweeper = new EtaSweeper(api, jobId);
    $("job-id").textContent = jobId;
    ($("eta") as HTMLInputElement).disabled = true;
    await loadSlot("combined", `combined:${jobId}`, base.fps);
    startPolling(jobId);
  } catch (err) {
    if (err instanceof ValidationFailed) {
      setErrors(err.errors);
    } else if (err instanceof ApiError) {
      setErrors([err.message]);
    } else {
      setBanner(`request failed, check the server: ${String(err)}`);
    }
  }
}

async function sweep(): Promise<void> {
  if (!state.sweeper) return;
  const eta = Number(($("eta") as HTMLInputElement).value);
  const seed = Number(($("gen-seed") as HTMLInputElement).value || "0");
  $("eta-value").textContent = eta.toFixed(2);
  try {
    const frames = await state.sweeper.fetch(eta, seed);
    const base = motionInfo(($("base-select") as HTMLInputElement).value);
    state.payloads.set("generated", { frames, fps: base ? base.fps : 20 });
    showSlot("generated");
    setBanner(null);
  } catch (err) {
    if (err instanceof ValidationFailed) setErrors(err.errors);
    else setBanner(`generate failed: ${String(err)}`);
  }
}

async function boot(): Promise<void> {
  try {
    state.motions = await api.listMotions();
  } catch (err) {
    setBanner(`cannot reach the service: ${String(err)}`);
    return;
  }
  const baseSelect = $("base-select") as HTMLSelectElement;
  const inputSelect = $("input-select") as HTMLSelectElement;
  for (const motion of state.motions) {
    const option = document.createElement("option");
    option.value = motion.id;
    option.textContent = `${motion.id} (${motion.frames} frames)`;
    if (motion.id.startsWith("base:")) baseSelect.appendChild(option);
    else if (motion.id.startsWith("input:")) inputSelect.appendChild(option);
  }
  const loadBase = async () => {
    const info = motionInfo(baseSelect.value);
    if (info) await loadSlot("base", info.id, info.fps);
  };
  baseSelect.addEventListener("change", loadBase);
  await loadBase();
  showSlot("base");

  $("launch").addEventListener("click", () => void onLaunch());
  $("eta").addEventListener("change", () => void sweep());
  $("eta").addEventListener("input", () => {
    $("eta-value").textContent = Number(
      ($("eta") as HTMLInputElement).value,
    ).toFixed(2);
  });
  ($("scrubber") as HTMLInputElement).addEventListener("input", (ev) => {
    viewer.pause();
    viewer.seek(Number((ev.target as HTMLInputElement).value));
  });
  $("play").addEventListener("click", () => {
    if (viewer.playing) viewer.pause();
    else viewer.play();
  });
  $("view-mode").addEventListener("click", () => {
    viewer.setMode(viewer.mode === "side" ? "top" : "side");
    $("view-mode").textContent = viewer.mode === "side" ? "side view" : "top view";
  });
  for (const slot of ["base", "combined", "generated"] as Slot[]) {
    $(`show-${slot}`).addEventListener("click", () => showSlot(slot));
  }
}

void boot();
