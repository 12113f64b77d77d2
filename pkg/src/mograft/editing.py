"""Pose/clip grafting pipeline: combine, weight, optimize, fine-tune, blend.

An edit runs in three stages on top of a pretrained denoiser:

1. splice the input into the base motion and optimize a label embedding so
   the frozen denoiser reconstructs the spliced motion under a weighted loss;
2. fine-tune the denoiser weights on the same objective, optionally mixing in
   an unweighted base-reconstruction term that protects the original mapping;
3. sample new motions from an embedding blended between the optimized and the
   base embedding, where the blend factor sets the edit strength.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .diffusion import (
    DEFAULT_BETA_END,
    DEFAULT_BETA_START,
    DEFAULT_T,
    NoiseSchedule,
    make_schedule,
    sample_loop,
)
from .denoiser import (
    AdamState,
    DenoiserModel,
    EmbeddingTable,
    forward,
    loss_and_grads_fixed,
    optimizer_step,
)
from .motion import FeatureLayout, MaskMatrix, Motion, MotionError, rotation_indices

SCENARIOS = ("global", "local")
INPUT_KINDS = ("static_pose", "clip")
STAGES = ("created", "stage1_running", "stage1_done", "stage2_running", "ready",
          "failed")


class ConfigError(ValueError):
    """An edit configuration violates one of its invariants."""


class EditError(RuntimeError):
    """A stage was invoked out of order or failed."""


@dataclass
class EditConfig:
    """Hyper-parameters of one edit.

    `pose_steps` locates a static pose, `insert_at` a clip.  `main_step` is
    the frame the edit is judged by; its rotation columns get weight `v`.
    `pad` frames around the insertion get zero weight so transitions stay
    free.  `rho` weighs the base-preservation term and `base_train_prob` is
    the per-iteration probability of including it.
    """

    scenario: str
    input_kind: str
    insert_at: int | None = None
    pose_steps: tuple[int, ...] | None = None
    main_step: int | None = None
    pad: int = 2
    v: float = 5.0
    rho: float = 0.5
    base_train_prob: float = 0.5
    eta: float = 1.0
    iters_stage1: int = 800
    iters_stage2: int = 800
    lr_stage1: float = 1e-3
    lr_stage2: float = 1e-6
    seed: int = 0

    def validate(self, n_base: int, n_input: int) -> None:
        """Check every invariant against the motions; raises ConfigError."""
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}")
        if self.input_kind not in INPUT_KINDS:
            raise ConfigError(f"input_kind must be one of {INPUT_KINDS}")
        if not self.v > 1.0:
            raise ConfigError("v must exceed 1")
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigError("eta must lie in [0, 1]")
        if self.rho < 0.0:
            raise ConfigError("rho must be non-negative")
        if not 0.0 <= self.base_train_prob <= 1.0:
            raise ConfigError("base_train_prob must lie in [0, 1]")
        if self.pad < 0:
            raise ConfigError("pad must be non-negative")
        if self.iters_stage1 < 0 or self.iters_stage2 < 0:
            raise ConfigError("iteration counts must be non-negative")
        if self.lr_stage1 <= 0 or self.lr_stage2 <= 0:
            raise ConfigError("learning rates must be positive")
        if self.input_kind == "static_pose":
            if n_input != 1:
                raise ConfigError("static_pose input must have exactly one frame")
            if self.scenario == "local":
                if not self.pose_steps:
                    raise ConfigError("local static_pose edit requires pose_steps")
                if any(not 0 <= p < n_base for p in self.pose_steps):
                    raise ConfigError("pose_steps must lie within the base motion")
                if self.main_step is None or self.main_step not in self.pose_steps:
                    raise ConfigError("main_step must be one of pose_steps")
        else:
            if self.scenario == "local":
                if self.insert_at is None:
                    raise ConfigError("local clip edit requires insert_at")
                if self.insert_at < 0 or self.insert_at + n_input > n_base:
                    raise ConfigError(
                        "clip overruns base: insert_at + clip frames must not "
                        "exceed base frames"
                    )
                if self.main_step is None or not 0 <= self.main_step < n_base:
                    raise ConfigError("main_step must lie within the base motion")
            else:
                if n_input != n_base:
                    raise ConfigError(
                        "global clip edit requires the clip length to equal the "
                        "base length"
                    )


@dataclass(frozen=True)
class WeightMatrix:
    """Per-entry loss weights; values are 0, 1, or the main-step boost v."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2:
            raise MotionError(f"weights must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise MotionError("weights must be finite and non-negative")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)


def combine_static_pose(base: Motion, pose: Motion, steps) -> tuple[Motion, MaskMatrix]:
    """Tile the pose over the selected frames of the base motion."""
    if pose.layout != base.layout:
        raise MotionError("pose layout does not match base layout")
    if pose.n_frames != 1:
        raise MotionError(f"pose must have one frame, got {pose.n_frames}")
    steps = sorted(set(int(s) for s in steps))
    if any(not 0 <= s < base.n_frames for s in steps):
        raise MotionError("pose_steps must lie within the base motion")
    mask = np.zeros_like(base.frames)
    mask[steps, :] = 1.0
    combined = np.where(mask == 1.0, pose.frames[0], base.frames)
    return base.with_frames(combined), MaskMatrix(mask)


def combine_clip(
    base: Motion, clip: Motion, insert_at: int | None, scenario: str
) -> tuple[Motion, MaskMatrix]:
    """Insert the clip at a frame offset, or adopt it outright when global."""
    if clip.layout != base.layout:
        raise MotionError("clip layout does not match base layout")
    if scenario == "global":
        mask = np.ones_like(clip.frames)
        return base.with_frames(clip.frames), MaskMatrix(mask)
    if insert_at is None or insert_at < 0 or insert_at + clip.n_frames > base.n_frames:
        raise MotionError(
            "clip overruns base: insert_at + clip frames must not exceed base frames"
        )
    combined = base.frames.copy()
    combined[insert_at:insert_at + clip.n_frames] = clip.frames
    mask = np.zeros_like(base.frames)
    mask[insert_at:insert_at + clip.n_frames, :] = 1.0
    return base.with_frames(combined), MaskMatrix(mask)


def pad_set(config: EditConfig, n_base: int, n_input: int) -> frozenset[int]:
    """Frames released from the loss so transitions can be synthesized freely.

    Clip edits free a band of `pad` frames around each splice boundary
    (boundaries included); pose edits free `pad` frames on each side of the
    main step, never the main step itself.  Everything is clamped to the base.
    """
    p = config.pad
    if config.input_kind == "clip":
        start = config.insert_at
        out = set(range(start - p, start + p + 1))
        out |= set(range(start + n_input - p, start + n_input + p + 1))
    else:
        pm = config.main_step
        out = set(range(pm - p, pm)) | set(range(pm + 1, pm + p + 1))
        out.discard(pm)
    return frozenset(i for i in out if 0 <= i < n_base)


def build_weights(
    config: EditConfig, layout: FeatureLayout, n_base: int, n_input: int
) -> WeightMatrix:
    """Loss weights for the combined motion.

    Global edits supervise only the rotation columns (weight 1).  Local edits
    supervise everything, boost the main step's rotation columns by v, and
    zero the pad frames; zeroing wins when the main step falls inside the pad.
    """
    rot = rotation_indices(layout)
    if config.scenario == "global":
        w = np.zeros((n_base, layout.frame_dim))
        w[:, rot] = 1.0
        return WeightMatrix(w)
    w = np.ones((n_base, layout.frame_dim))
    w[config.main_step, rot] = config.v
    freed = pad_set(config, n_base, n_input)
    if freed:
        w[sorted(freed), :] = 0.0
    return WeightMatrix(w)


def interpolate_embedding(e_opt: np.ndarray, e_base: np.ndarray, eta: float) -> np.ndarray:
    """Blend eta * e_opt + (1 - eta) * e_base."""
    e_opt = np.asarray(e_opt, dtype=np.float64)
    e_base = np.asarray(e_base, dtype=np.float64)
    if e_opt.shape != e_base.shape:
        raise ConfigError(
            f"embedding shapes differ: {e_opt.shape} vs {e_base.shape}"
        )
    if not 0.0 <= eta <= 1.0:
        raise ConfigError("eta must lie in [0, 1]")
    return eta * e_opt + (1.0 - eta) * e_base


@dataclass
class EditSession:
    """All state of one edit: inputs, spliced target, embeddings, model."""

    combined: Motion
    weights: WeightMatrix
    e_base: np.ndarray
    model: DenoiserModel
    embeddings: EmbeddingTable
    config: EditConfig
    diffusion_steps: int = DEFAULT_T
    base: Motion | None = None
    input_motion: Motion | None = None
    e_opt: np.ndarray | None = None
    stage: str = "created"
    stage1_losses: list[float] = field(default_factory=list)
    stage2_losses: list[float] = field(default_factory=list)
    stage2_base_losses: list[float] = field(default_factory=list)

    def schedule(self) -> NoiseSchedule:
        return make_schedule(self.diffusion_steps, DEFAULT_BETA_START, DEFAULT_BETA_END)


def create_session(
    model: DenoiserModel,
    embeddings: EmbeddingTable,
    base: Motion,
    input_motion: Motion,
    config: EditConfig,
    diffusion_steps: int = DEFAULT_T,
) -> EditSession:
    """Validate the config, splice the motions, and build the weight matrix."""
    config.validate(base.n_frames, input_motion.n_frames)
    if base.label is None:
        raise ConfigError("base motion must carry a label")
    embeddings.index(base.label)
    if base.frames.shape != (model.frame_count, model.frame_dim):
        raise ConfigError(
            f"base motion shape {base.frames.shape} does not match the model "
            f"({model.frame_count}, {model.frame_dim})"
        )
    if config.input_kind == "static_pose":
        steps = config.pose_steps
        if config.scenario == "global":
            steps = tuple(range(base.n_frames))
        combined, _ = combine_static_pose(base, input_motion, steps)
    else:
        combined, _ = combine_clip(base, input_motion, config.insert_at, config.scenario)
    weights = build_weights(config, base.layout, base.n_frames, input_motion.n_frames)
    return EditSession(
        combined=combined,
        weights=weights,
        e_base=embeddings.vector(base.label).copy(),
        model=model.copy(),
        embeddings=embeddings.copy(),
        config=config,
        diffusion_steps=diffusion_steps,
        base=base,
        input_motion=input_motion,
    )


def _require_stage(session: EditSession, expected: str) -> None:
    if session.stage != expected:
        raise EditError(f"session is in stage {session.stage!r}, expected {expected!r}")


def optimize_embedding(session: EditSession, progress=None) -> np.ndarray:
    """Stage 1: fit the embedding against the frozen denoiser.

    Starts from the base embedding and never touches the model weights.
    Stores the loss trace on the session and returns the optimized embedding.
    """
    _require_stage(session, "created")
    session.stage = "stage1_running"
    cfg = session.config
    schedule = session.schedule()
    e = session.e_base.copy()
    opt = AdamState(lr=cfg.lr_stage1)
    rng = np.random.default_rng([cfg.seed, 1])
    x0 = session.combined.frames
    w = session.weights.entries
    for it in range(cfg.iters_stage1):
        t = int(rng.integers(1, schedule.steps + 1))
        eps = rng.standard_normal(x0.shape)
        loss, _, egrads = loss_and_grads_fixed(
            session.model, [x0], [e], [t], [eps], schedule,
            weight=w, want_theta=False,
        )
        if not np.isfinite(loss):
            session.stage = "failed"
            raise EditError(f"embedding optimization diverged at iteration {it}")
        optimizer_step(opt, {"e": e}, {"e": egrads[0]})
        session.stage1_losses.append(loss)
        if progress is not None:
            progress("stage1", it + 1, cfg.iters_stage1, loss)
    session.e_opt = e
    session.stage = "stage1_done"
    return e


def finetune_model(session: EditSession, progress=None) -> DenoiserModel:
    """Stage 2: fine-tune the denoiser weights with the embedding frozen.

    Each iteration always takes the weighted combined-motion term; with
    probability `base_train_prob` it adds `rho` times an unweighted
    base-reconstruction term at independently drawn (t, eps).
    """
    _require_stage(session, "stage1_done")
    if session.base is None and session.config.iters_stage2 > 0:
        raise EditError("session has no base motion; cannot fine-tune")
    session.stage = "stage2_running"
    cfg = session.config
    schedule = session.schedule()
    opt = AdamState(lr=cfg.lr_stage2)
    rng = np.random.default_rng([cfg.seed, 2])
    x0c = session.combined.frames
    w = session.weights.entries
    e_opt = session.e_opt
    for it in range(cfg.iters_stage2):
        t = int(rng.integers(1, schedule.steps + 1))
        eps = rng.standard_normal(x0c.shape)
        loss_c, grads, _ = loss_and_grads_fixed(
            session.model, [x0c], [e_opt], [t], [eps], schedule,
            weight=w, want_embed=False,
        )
        total = loss_c
        if rng.random() < cfg.base_train_prob:
            tb = int(rng.integers(1, schedule.steps + 1))
            epsb = rng.standard_normal(x0c.shape)
            loss_b, grads_b, _ = loss_and_grads_fixed(
                session.model, [session.base.frames], [session.e_base],
                [tb], [epsb], schedule, want_embed=False,
            )
            total = loss_c + cfg.rho * loss_b
            for key in grads:
                grads[key] = grads[key] + cfg.rho * grads_b[key]
            session.stage2_base_losses.append(loss_b)
        if not np.isfinite(total):
            session.stage = "failed"
            raise EditError(f"fine-tuning diverged at iteration {it}")
        optimizer_step(opt, session.model.params(), grads)
        session.stage2_losses.append(loss_c)
        if progress is not None:
            progress("stage2", it + 1, cfg.iters_stage2, loss_c)
    session.stage = "ready"
    return session.model


def generate(session: EditSession, eta: float, seed: int) -> Motion:
    """Stage 3: sample a motion from the blended embedding."""
    if session.stage != "ready":
        raise EditError(f"session is in stage {session.stage!r}, expected 'ready'")
    e_bar = interpolate_embedding(session.e_opt, session.e_base, eta)
    rng = np.random.default_rng(seed)
    model = session.model
    frames = sample_loop(
        lambda x_t, t, e: forward(model, x_t, t, e),
        e_bar,
        session.combined.n_frames,
        session.combined.layout.frame_dim,
        session.schedule(),
        rng,
    )
    return Motion(
        fps=session.combined.fps,
        layout=session.combined.layout,
        frames=frames,
        label=f"edit(eta={eta:g})",
    )


def run_edit(session: EditSession, progress=None) -> EditSession:
    """Run stages 1 and 2 back to back."""
    optimize_embedding(session, progress=progress)
    finetune_model(session, progress=progress)
    return session


def config_to_dict(config: EditConfig) -> dict:
    out = asdict(config)
    if out["pose_steps"] is not None:
        out["pose_steps"] = list(out["pose_steps"])
    return out


def config_from_dict(data: dict) -> EditConfig:
    data = dict(data)
    if data.get("pose_steps") is not None:
        data["pose_steps"] = tuple(int(p) for p in data["pose_steps"])
    return EditConfig(**data)
