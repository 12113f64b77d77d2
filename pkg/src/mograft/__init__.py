"""Desk-scale motion-diffusion editing toolkit."""

from .motion import (
    FeatureLayout,
    MaskMatrix,
    Motion,
    MotionError,
    WorldPose,
    layout_dims,
    load_motion,
    rotation_indices,
    save_motion,
    to_world_positions,
)
from .diffusion import (
    NoiseSchedule,
    ScheduleError,
    make_schedule,
    p_sample_step,
    posterior_mean,
    q_sample,
    sample_loop,
)
from .denoiser import (
    AdamState,
    DenoiserModel,
    EmbeddingTable,
    TrainingDiverged,
    forward,
    init_embeddings,
    init_model,
    loss_and_grads,
    optimizer_step,
    pretrain,
    time_embedding,
)
from .editing import (
    ConfigError,
    EditConfig,
    EditError,
    EditSession,
    WeightMatrix,
    build_weights,
    combine_clip,
    combine_static_pose,
    create_session,
    finetune_model,
    generate,
    interpolate_embedding,
    optimize_embedding,
    pad_set,
    run_edit,
)
from .synth import CorpusSpec, SynthError, build_corpus, gen_edit_inputs, gen_motion
from .checkpoint import load_model, load_session, save_model, save_session

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
