"""Procedural toy corpus: four labeled motion classes plus edit inputs.

All generators target the default 5-joint desk skeleton (root, two arm ends,
two leg ends).  Kinematic constants live in the tables below; per-sample
variation comes only from seeded phase/amplitude/speed jitter and a small
bounded noise floor, so every class stays tightly clustered and linearly
separable on its rotation columns.  Velocity channels are finite differences
of the position channels by construction.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .motion import FeatureLayout, Motion, save_motion, load_motion

LABELS = ("walk", "jump", "kick", "squat")
EDIT_KINDS = ("legs_spread_pose", "march_clip", "lunge_pose", "high_kick_pose")

# Rotation columns = shared resting pattern + class event pulse x strike
# pattern.  Sharing the resting pattern keeps classes near each other except
# where their event fires, so embedding arithmetic between classes produces
# time-localized rotation changes; the class identity lives in the distinct
# (pulse profile, strike pattern) pairs.
_ROT_BASE = (0.45, 1.3, 0.7)  # amp * cos(freq * c + phase), all classes
_STRIKES = {
    "walk": (0.55, 3.1, 0.9),
    "jump": (0.45, 2.2, 1.7),
    "kick": (0.95, 4.4, 1.4),
    "squat": (0.50, 5.0, 0.4),
    "march_clip": (0.50, 5.3, 0.7),
    "lunge_pose": (0.55, 3.1, 0.9),
    "high_kick_pose": (0.95, 4.4, 1.4),
    "legs_spread_pose": (0.95, 4.4, 1.4),
    "spread_residual": (0.70, 7.1, 0.2),
    "lunge_residual": (0.60, 6.2, 2.2),
    "high_kick_residual": (0.65, 8.3, 1.1),
}
_NOISE = 0.02

# Gait constants: forward speed, rest height, stride cycles per clip.
_GAIT = {
    "walk": {"speed": 0.06, "height": 0.90, "cycles": 2.0},
    "jump": {"speed": 0.005, "height": 0.90, "cycles": 1.0},
    "kick": {"speed": 0.0, "height": 0.92, "cycles": 1.0},
    "squat": {"speed": 0.0, "height": 0.90, "cycles": 1.0},
}


class SynthError(ValueError):
    """Unknown label/kind or unsupported skeleton."""


@dataclass(frozen=True)
class CorpusSpec:
    labels: tuple[str, ...] = LABELS
    samples_per_label: int = 64
    frames: int = 40
    fps: float = 20.0
    joints: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.labels or len(set(self.labels)) != len(self.labels):
            raise SynthError("labels must be unique and non-empty")


def _require_desk_skeleton(spec: CorpusSpec) -> None:
    if spec.joints != 5:
        raise SynthError("generators are defined for the 5-joint desk skeleton")


def _gauss(t: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    return np.exp(-0.5 * ((t - mu) / sigma) ** 2)


def _pattern(spec_triplet: tuple[float, float, float], count: int) -> np.ndarray:
    amp, freq, phase = spec_triplet
    return amp * np.cos(freq * np.arange(count) + phase)


def _rotation_track(key: str, profile: np.ndarray, count: int) -> np.ndarray:
    """Resting pattern plus the class strike scaled by its time profile.

    The profile phase is a class constant, never per-sample jitter: rotation
    columns carry the class identity, so they must stay predictable from the
    label alone.
    """
    base = _pattern(_ROT_BASE, count)
    strike = _pattern(_STRIKES[key], count)
    return base[None, :] + profile[:, None] * strike[None, :]


def _smooth_contact(x: np.ndarray) -> np.ndarray:
    # Bounded slope so contact flips never violate the frame-delta cap.
    return 0.5 + 0.5 * np.tanh(2.0 * x)


def _assemble(spec: CorpusSpec, label: str | None, rot_vel, lin_vel, height,
              local_pos, rot, contacts) -> Motion:
    layout = FeatureLayout(spec.joints)
    n = len(height)
    j = spec.joints
    frames = np.zeros((n, layout.frame_dim))
    frames[:, 0] = rot_vel
    frames[:, 1:3] = lin_vel
    frames[:, 3] = height
    frames[:, layout.block_slice("joint_positions")] = local_pos.reshape(n, 3 * (j - 1))
    frames[:, layout.block_slice("joint_rotations")] = rot
    # Root world track, then velocities as finite differences of positions.
    yaw = np.zeros(n)
    yaw[1:] = np.cumsum(rot_vel[:-1])
    step_x = np.cos(yaw) * lin_vel[:, 0] + np.sin(yaw) * lin_vel[:, 1]
    step_z = -np.sin(yaw) * lin_vel[:, 0] + np.cos(yaw) * lin_vel[:, 1]
    root_world = np.zeros((n, 3))
    root_world[1:, 0] = np.cumsum(step_x[:-1])
    root_world[1:, 2] = np.cumsum(step_z[:-1])
    root_world[:, 1] = height
    vel = np.zeros((n, 3 * j))
    if n > 1:
        vel[:-1, 0:3] = np.diff(root_world, axis=0)
        vel[:-1, 3:] = np.diff(local_pos.reshape(n, 3 * (j - 1)), axis=0)
    frames[:, layout.block_slice("joint_velocities")] = vel
    frames[:, layout.block_slice("foot_contacts")] = contacts
    return Motion(fps=spec.fps, layout=layout, frames=frames, label=label)


def gen_motion(label: str, variant_seed: int, spec: CorpusSpec = CorpusSpec()) -> Motion:
    """Deterministic sample of one motion class; pure in (label, seed, spec)."""
    _require_desk_skeleton(spec)
    if label not in _GAIT:
        raise SynthError(f"unknown label {label!r}")
    rng = np.random.default_rng([spec.seed, LABELS.index(label), variant_seed])
    n = spec.frames
    t = np.arange(n, dtype=np.float64)
    phase = rng.uniform(0.0, 2 * np.pi)
    amp = rng.uniform(0.92, 1.08)
    speed = _GAIT[label]["speed"] * rng.uniform(0.9, 1.1)
    base_h = _GAIT[label]["height"]
    cycles = _GAIT[label]["cycles"]
    stride = 2 * np.pi * cycles * t / n + phase

    rot_vel = np.zeros(n)
    lin_vel = np.zeros((n, 2))
    height = np.full(n, base_h)
    local = np.zeros((n, 4, 3))
    contacts = np.ones((n, 4))
    local[:, 0, 0] = -0.25  # left arm
    local[:, 1, 0] = 0.25   # right arm
    local[:, 0:2, 1] = 0.40
    local[:, 2, 0] = -0.12  # left leg
    local[:, 3, 0] = 0.12   # right leg
    local[:, 2:4, 1] = -0.80

    if label == "walk":
        rot_vel[:] = 0.015 * np.sin(2 * np.pi * t / n + phase)
        lin_vel[:, 0] = speed
        lin_vel[:, 1] = 0.01 * np.sin(2 * np.pi * t / n + phase)
        height += 0.02 * np.sin(2.0 * stride)
        swing = 0.20 * amp
        local[:, 2, 2] = swing * np.sin(stride)
        local[:, 3, 2] = swing * np.sin(stride + np.pi)
        local[:, 2, 1] += 0.05 * np.clip(np.sin(stride), 0.0, None)
        local[:, 3, 1] += 0.05 * np.clip(np.sin(stride + np.pi), 0.0, None)
        local[:, 0, 2] = 0.15 * amp * np.sin(stride + np.pi)
        local[:, 1, 2] = 0.15 * amp * np.sin(stride)
        contacts[:, 0] = contacts[:, 1] = _smooth_contact(np.sin(stride + np.pi))
        contacts[:, 2] = contacts[:, 3] = _smooth_contact(np.sin(stride))
    elif label == "jump":
        lin_vel[:, 0] = speed
        launch = _gauss(t, n / 2, n / 8)
        crouch = _gauss(t, n / 4, n / 10)
        settle = _gauss(t, 3 * n / 4, n / 10)
        height += amp * (0.45 * launch - 0.12 * crouch - 0.10 * settle)
        tuck = 0.35 * amp * _gauss(t, n / 2, n / 9)
        local[:, 2, 1] += tuck
        local[:, 3, 1] += tuck
        local[:, 0:2, 1] += (0.25 * _gauss(t, n / 2, n / 7))[:, None]
        local[:, 0:2, 2] += (0.10 * _gauss(t, n / 2 - 3, n / 8))[:, None]
        airborne = _gauss(t, n / 2, n / 7)
        contacts[:] = np.clip(1.0 - airborne, 0.0, 1.0)[:, None]
    elif label == "kick":
        rot_vel[:] = 0.05 * _gauss(t, n / 2, n / 8)
        height += 0.01 * np.sin(stride)
        strike = _gauss(t, n / 2, n / 13)
        local[:, 3, 2] = 0.55 * amp * strike
        local[:, 3, 1] += 0.45 * strike
        local[:, 2, 2] = -0.05 * strike
        local[:, 0, 2] = 0.15 * strike
        local[:, 1, 2] = -0.15 * strike
        contacts[:, 2] = contacts[:, 3] = np.clip(1.0 - strike, 0.0, 1.0)
    else:  # squat
        dip = 0.28 * amp * np.sin(np.pi * t / (n - 1)) ** 2
        height -= dip
        # Feet stay planted: local leg height tracks the sinking root.
        local[:, 2:4, 1] = (0.06 - height)[:, None]
        local[:, 0:2, 1] = 0.35
        local[:, 0:2, 2] = (0.22 * np.sin(np.pi * t / (n - 1)) ** 2)[:, None]

    if label == "walk":
        profile = amp * np.sin(2 * np.pi * cycles * t / n + 0.9)
    elif label == "jump":
        profile = amp * _gauss(t, n / 2, n / 7)
    elif label == "kick":
        profile = amp * _gauss(t, n / 2, n / 13)
    else:
        profile = amp * np.sin(np.pi * t / (n - 1)) ** 2
    rot = _rotation_track(label, profile, 6 * (spec.joints - 1))
    local += rng.uniform(-_NOISE, _NOISE, size=local.shape)
    rot += rng.uniform(-_NOISE, _NOISE, size=rot.shape)
    return _assemble(spec, label, rot_vel, lin_vel, height, local, rot, contacts)


def gen_edit_inputs(kind: str, spec: CorpusSpec = CorpusSpec()) -> Motion:
    """Fixed pose or clip used as edit input; fully deterministic."""
    _require_desk_skeleton(spec)
    if kind not in EDIT_KINDS:
        raise SynthError(f"unknown edit input kind {kind!r}")
    rot_dim = 6 * (spec.joints - 1)
    if kind == "march_clip":
        n = 20
        t = np.arange(n, dtype=np.float64)
        beat_l = 2 * np.pi * t / 10.0
        beat_r = beat_l + np.pi
        rot_vel = np.zeros(n)
        lin_vel = np.zeros((n, 2))
        lin_vel[:, 0] = 0.05
        height = 0.92 + 0.015 * np.sin(2 * np.pi * t / 10.0)
        local = np.zeros((n, 4, 3))
        local[:, 0, 0], local[:, 1, 0] = -0.25, 0.25
        local[:, 0:2, 1] = 0.42
        local[:, 0, 2] = 0.25 * np.sin(beat_r)
        local[:, 1, 2] = 0.25 * np.sin(beat_l)
        local[:, 2, 0], local[:, 3, 0] = -0.12, 0.12
        local[:, 2, 1] = -0.80 + 0.35 * np.clip(np.sin(beat_l), 0.0, None)
        local[:, 3, 1] = -0.80 + 0.35 * np.clip(np.sin(beat_r), 0.0, None)
        local[:, 2, 2] = 0.15 * np.sin(beat_l)
        local[:, 3, 2] = 0.15 * np.sin(beat_r)
        rot = _rotation_track(kind, np.sin(beat_l + 0.7), rot_dim)
        contacts = np.ones((n, 4))
        contacts[:, 0] = contacts[:, 1] = _smooth_contact(np.sin(beat_r))
        contacts[:, 2] = contacts[:, 3] = _smooth_contact(np.sin(beat_l))
        return _assemble(spec, kind, rot_vel, lin_vel, height, local, rot, contacts)

    local = np.zeros((1, 4, 3))
    contacts = np.zeros((1, 4))
    # Pose rotations = resting pattern + a strong component along a strike the
    # pretrained classes know, plus a small unique residual.  The former is
    # what embedding optimization can reach; the latter is what fine-tuning
    # still has to absorb.
    base = _pattern(_ROT_BASE, rot_dim)
    if kind == "legs_spread_pose":
        height = np.array([1.0])
        local[0, 0] = (-0.45, 0.30, 0.0)
        local[0, 1] = (0.45, 0.30, 0.0)
        local[0, 2] = (-0.55, -0.50, 0.0)
        local[0, 3] = (0.55, -0.50, 0.0)
        rot = base + 0.92 * _pattern(_STRIKES[kind], rot_dim) \
            + 0.10 * _pattern(_STRIKES["spread_residual"], rot_dim)
    elif kind == "lunge_pose":
        height = np.array([0.70])
        local[0, 0] = (-0.30, 0.35, 0.05)
        local[0, 1] = (0.30, 0.35, 0.05)
        local[0, 2] = (-0.12, -0.45, 0.40)
        local[0, 3] = (0.12, -0.68, -0.30)
        contacts[:] = 1.0
        rot = base + 0.80 * _pattern(_STRIKES[kind], rot_dim) \
            + 0.15 * _pattern(_STRIKES["lunge_residual"], rot_dim)
    else:  # high_kick_pose
        height = np.array([0.95])
        local[0, 0] = (-0.40, 0.45, -0.10)
        local[0, 1] = (0.40, 0.45, 0.10)
        local[0, 2] = (-0.10, -0.85, 0.0)
        local[0, 3] = (0.10, 0.30, 0.45)
        contacts[0, 0:2] = 1.0
        rot = base + 0.90 * _pattern(_STRIKES[kind], rot_dim) \
            + 0.12 * _pattern(_STRIKES["high_kick_residual"], rot_dim)
    return _assemble(spec, kind, np.zeros(1), np.zeros((1, 2)), height, local,
                     rot[None, :], contacts)


def build_corpus(spec: CorpusSpec, out_dir) -> list[Motion]:
    """Write one file per sample plus a manifest; byte-identical per spec."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    motions: list[Motion] = []
    entries = []
    for label in spec.labels:
        for k in range(spec.samples_per_label):
            motion = gen_motion(label, k, spec)
            fname = f"{label}_{k:03d}.mjson"
            save_motion(motion, out / fname)
            motions.append(motion)
            entries.append({"file": fname, "label": label, "seed": k})
    manifest = {"spec": _spec_to_dict(spec), "files": entries}
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return motions


def _spec_to_dict(spec: CorpusSpec) -> dict:
    out = asdict(spec)
    out["labels"] = list(out["labels"])
    return out


def spec_from_dict(data: dict) -> CorpusSpec:
    data = dict(data)
    data["labels"] = tuple(data["labels"])
    return CorpusSpec(**data)


def load_corpus(directory) -> tuple[CorpusSpec, list[Motion]]:
    """Read a corpus directory back via its manifest."""
    root = Path(directory)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise SynthError(f"no manifest.json under {root}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    spec = spec_from_dict(manifest["spec"])
    motions = [load_motion(root / entry["file"]) for entry in manifest["files"]]
    return spec, motions
