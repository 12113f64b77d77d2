"""HTTP service: bundled motions, background edit jobs, and generation.

Mutation runs through a single worker thread consuming a job queue; status
polls only copy small snapshots under a lock, so they never wait on training.
Generated motions are cached per (job, eta, seed), which also makes repeated
generate calls byte-stable.
"""

from __future__ import annotations

import math
import queue
import threading
import uuid
from collections import deque
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import __version__
from .checkpoint import load_model
from .denoiser import DenoiserModel, EmbeddingTable
from .editing import (
    ConfigError,
    EditConfig,
    EditSession,
    create_session,
    finetune_model,
    generate,
    optimize_embedding,
)
from .motion import Motion, MotionError, to_world_positions
from .synth import EDIT_KINDS, LABELS, CorpusSpec, gen_edit_inputs, gen_motion

PROGRESS_EVERY = 10
SMOOTH_WINDOW = 50
TRACE_LIMIT = 500


def decimate(values, limit: int = TRACE_LIMIT) -> list[float]:
    """Thin a trace to at most `limit` points, keeping the last one."""
    n = len(values)
    if n <= limit:
        return [float(v) for v in values]
    stride = math.ceil(n / limit)
    picked = list(values[::stride])
    if (n - 1) % stride != 0:
        picked[-1] = values[-1]
    return [float(v) for v in picked]


@dataclass
class JobRecord:
    id: str
    kind: str
    stage: str = "created"
    current: int = 0
    total: int = 0
    smoothed_loss: float | None = None
    error: str | None = None

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "stage": self.stage,
            "progress": {"current": self.current, "total": self.total},
            "smoothed_loss": self.smoothed_loss,
            "error": self.error,
        }


class EditRequest(BaseModel):
    base_id: str
    input_id: str
    scenario: str
    pose_steps: list[int] | None = None
    insert_at: int | None = None
    main_step: int | None = None
    pad: int = 2
    v: float = 5.0
    rho: float = 0.5
    q: float = 0.5
    iters1: int = 800
    iters2: int = 800
    lr1: float = 1e-3
    lr2: float = 1e-6
    seed: int = 0


class Studio:
    """All mutable service state plus the single background worker."""

    def __init__(self, model: DenoiserModel, embeddings: EmbeddingTable,
                 diffusion_steps: int):
        self.model = model
        self.embeddings = embeddings
        self.diffusion_steps = diffusion_steps
        self.lock = threading.Lock()
        self.motions: dict[str, Motion] = {}
        self.jobs: dict[str, JobRecord] = {}
        self.sessions: dict[str, EditSession] = {}
        self.generated: dict[tuple[str, float, int], str] = {}
        self.queue: queue.Queue = queue.Queue()
        self.worker: threading.Thread | None = None
        self._bundle_motions()

    def _bundle_motions(self) -> None:
        spec = CorpusSpec()
        for label in LABELS:
            self.motions[f"base:{label}"] = gen_motion(label, 0, spec)
        for kind in EDIT_KINDS:
            self.motions[f"input:{kind}"] = gen_edit_inputs(kind, spec)

    def start_worker(self) -> None:
        if self.worker is None:
            self.worker = threading.Thread(target=self._run, daemon=True)
            self.worker.start()

    def shutdown(self) -> None:
        if self.worker is not None:
            self.queue.put(None)
            self.worker.join(timeout=5.0)
            self.worker = None

    def submit_edit(self, session: EditSession) -> str:
        job_id = uuid.uuid4().hex[:12]
        cfg = session.config
        record = JobRecord(id=job_id, kind="edit", stage=session.stage,
                           total=cfg.iters_stage1 + cfg.iters_stage2)
        with self.lock:
            self.jobs[job_id] = record
            self.sessions[job_id] = session
            # expose the spliced target so the viewer can A/B against it
            self.motions[f"combined:{job_id}"] = session.combined
        self.queue.put(job_id)
        return job_id

    def _run(self) -> None:
        while True:
            job_id = self.queue.get()
            if job_id is None:
                return
            session = self.sessions[job_id]
            record = self.jobs[job_id]
            window: deque[float] = deque(maxlen=SMOOTH_WINDOW)
            offsets = {"stage1": 0, "stage2": session.config.iters_stage1}

            def progress(stage: str, iteration: int, total: int, loss: float):
                window.append(loss)
                if iteration % PROGRESS_EVERY == 0 or iteration == total:
                    with self.lock:
                        record.stage = session.stage
                        record.current = offsets[stage] + iteration
                        record.smoothed_loss = float(np.mean(window))

            try:
                optimize_embedding(session, progress=progress)
                window.clear()
                finetune_model(session, progress=progress)
                with self.lock:
                    record.stage = session.stage
                    record.current = record.total
            except Exception as exc:  # noqa: BLE001 - job errors become status
                with self.lock:
                    record.stage = "failed"
                    record.error = str(exc)


def _build_config(req: EditRequest, input_motion: Motion) -> EditConfig:
    input_kind = "static_pose" if input_motion.n_frames == 1 else "clip"
    return EditConfig(
        scenario=req.scenario,
        input_kind=input_kind,
        insert_at=req.insert_at,
        pose_steps=tuple(req.pose_steps) if req.pose_steps else None,
        main_step=req.main_step,
        pad=req.pad,
        v=req.v,
        rho=req.rho,
        base_train_prob=req.q,
        iters_stage1=req.iters1,
        iters_stage2=req.iters2,
        lr_stage1=req.lr1,
        lr_stage2=req.lr2,
        seed=req.seed,
    )


def create_app(
    model_path=None,
    model: DenoiserModel | None = None,
    embeddings: EmbeddingTable | None = None,
    diffusion_steps: int | None = None,
    frontend_dir: Path | None = None,
    start_worker: bool = True,
) -> FastAPI:
    if model is None:
        if model_path is None:
            raise ValueError("create_app needs a model or a model_path")
        model, embeddings, diffusion_steps = load_model(model_path)
    studio = Studio(model, embeddings, diffusion_steps)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        if start_worker:
            studio.start_worker()
        yield
        studio.shutdown()

    app = FastAPI(title="mograft", version=__version__, lifespan=lifespan)
    app.state.studio = studio

    @app.get("/api/health")
    def health():
        return {"version": __version__}

    @app.get("/api/motions")
    def motions():
        with studio.lock:
            items = list(studio.motions.items())
        return [
            {"id": mid, "label": motion.label, "frames": motion.n_frames,
             "fps": motion.fps}
            for mid, motion in items
        ]

    @app.get("/api/motions/{motion_id}/world")
    def world(motion_id: str):
        with studio.lock:
            motion = studio.motions.get(motion_id)
        if motion is None:
            raise HTTPException(status_code=404, detail=f"unknown motion {motion_id!r}")
        return [pose.positions.tolist() for pose in to_world_positions(motion)]

    @app.post("/api/edits", status_code=202)
    def submit(req: EditRequest):
        with studio.lock:
            base = studio.motions.get(req.base_id)
            inp = studio.motions.get(req.input_id)
        if base is None:
            raise HTTPException(status_code=404, detail=f"unknown motion {req.base_id!r}")
        if inp is None:
            raise HTTPException(status_code=404, detail=f"unknown motion {req.input_id!r}")
        config = _build_config(req, inp)
        try:
            session = create_session(studio.model, studio.embeddings, base, inp,
                                     config, diffusion_steps=studio.diffusion_steps)
        except (ConfigError, MotionError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"job_id": studio.submit_edit(session)}

    @app.get("/api/edits/{job_id}")
    def job_status(job_id: str):
        with studio.lock:
            record = studio.jobs.get(job_id)
            if record is None:
                raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
            body = record.snapshot()
            session = studio.sessions[job_id]
            body["trace_stage1"] = decimate(list(session.stage1_losses))
            body["trace_stage2"] = decimate(list(session.stage2_losses))
        return body

    @app.post("/api/edits/{job_id}/generate")
    def job_generate(job_id: str, eta: float, seed: int = 0):
        with studio.lock:
            record = studio.jobs.get(job_id)
            session = studio.sessions.get(job_id)
        if record is None or session is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        if not 0.0 <= eta <= 1.0:
            raise HTTPException(status_code=400, detail="eta must lie in [0, 1]")
        if session.stage != "ready":
            raise HTTPException(
                status_code=409,
                detail=f"session is in stage {session.stage!r}; generate needs 'ready'",
            )
        key = (job_id, float(eta), int(seed))
        with studio.lock:
            cached = studio.generated.get(key)
        if cached is not None:
            return {"motion_id": cached}
        motion = generate(session, eta, seed)
        motion_id = f"gen:{job_id}:eta={eta:g}:seed={seed}"
        with studio.lock:
            studio.motions[motion_id] = motion
            studio.generated[key] = motion_id
        return {"motion_id": motion_id}

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
