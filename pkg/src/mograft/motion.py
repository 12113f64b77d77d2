"""Motion sequences over a reduced HumanML3D-style per-frame feature layout.

A frame packs, in order: root yaw velocity (1), root linear velocity on the
ground plane (2), root height (1), root-relative positions of the non-root
joints (3 each), 6D continuous rotations of the non-root joints (6 each),
per-joint velocities including the root (3 each), and four foot-contact
channels.  For J joints the frame width is D = 4 + 3(J-1) + 6(J-1) + 3J + 4;
the canonical 22-joint skeleton gives D = 263.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

LAYOUT_NAME = "hml-reduced-v1"
FILE_VERSION = 1
FOOT_CONTACT_DIM = 4

BLOCK_ORDER = (
    "root_rot_vel",
    "root_lin_vel",
    "root_height",
    "joint_positions",
    "joint_rotations",
    "joint_velocities",
    "foot_contacts",
)


class MotionError(ValueError):
    """Malformed layout, frame data, or motion file."""


def layout_dims(joints: int) -> int:
    """Per-frame feature width for a skeleton with `joints` joints."""
    if joints < 2:
        raise MotionError(f"layout requires at least 2 joints, got {joints}")
    return 4 + 3 * (joints - 1) + 6 * (joints - 1) + 3 * joints + 4


@dataclass(frozen=True)
class FeatureLayout:
    """Block arithmetic for one frame of a J-joint skeleton."""

    joints: int

    def __post_init__(self) -> None:
        if self.joints < 2:
            raise MotionError(f"layout requires at least 2 joints, got {self.joints}")

    @property
    def frame_dim(self) -> int:
        return layout_dims(self.joints)

    @property
    def blocks(self) -> tuple[tuple[str, int, int], ...]:
        """Ordered (name, offset, length) covering [0, frame_dim)."""
        j = self.joints
        lengths = {
            "root_rot_vel": 1,
            "root_lin_vel": 2,
            "root_height": 1,
            "joint_positions": 3 * (j - 1),
            "joint_rotations": 6 * (j - 1),
            "joint_velocities": 3 * j,
            "foot_contacts": FOOT_CONTACT_DIM,
        }
        out = []
        offset = 0
        for name in BLOCK_ORDER:
            out.append((name, offset, lengths[name]))
            offset += lengths[name]
        return tuple(out)

    def block(self, name: str) -> tuple[int, int]:
        """(offset, length) of a named block."""
        for bname, offset, length in self.blocks:
            if bname == name:
                return offset, length
        raise KeyError(name)

    def block_slice(self, name: str) -> slice:
        offset, length = self.block(name)
        return slice(offset, offset + length)


def rotation_indices(layout: FeatureLayout) -> np.ndarray:
    """Feature columns carrying rotational information.

    The root yaw-velocity channel plus the whole 6D joint-rotation block;
    sorted and duplicate-free.
    """
    rot_off, rot_len = layout.block("joint_rotations")
    yaw_off, _ = layout.block("root_rot_vel")
    return np.array([yaw_off] + list(range(rot_off, rot_off + rot_len)), dtype=np.intp)


def _as_frames(frames, frame_dim: int) -> np.ndarray:
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim != 2:
        raise MotionError(f"frames must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise MotionError("motion needs at least one frame")
    if arr.shape[1] != frame_dim:
        raise MotionError(
            f"frame width {arr.shape[1]} does not match layout width {frame_dim}"
        )
    if not np.all(np.isfinite(arr)):
        raise MotionError("frames contain non-finite values")
    return arr


@dataclass(frozen=True)
class Motion:
    """An N x D sequence of pose feature vectors; immutable once built."""

    fps: float
    layout: FeatureLayout
    frames: np.ndarray
    label: str | None = None

    def __post_init__(self) -> None:
        if not (self.fps > 0 and math.isfinite(self.fps)):
            raise MotionError(f"fps must be positive, got {self.fps}")
        arr = _as_frames(self.frames, self.layout.frame_dim).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    def with_frames(self, frames: np.ndarray, label: str | None = None) -> "Motion":
        return Motion(
            fps=self.fps,
            layout=self.layout,
            frames=frames,
            label=self.label if label is None else label,
        )


@dataclass(frozen=True)
class MaskMatrix:
    """N x D selector with entries exactly 0 or 1."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.entries, dtype=np.float64)
        if arr.ndim != 2:
            raise MotionError(f"mask must be 2-D, got shape {arr.shape}")
        if not np.all((arr == 0.0) | (arr == 1.0)):
            raise MotionError("mask entries must be exactly 0 or 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)


@dataclass(frozen=True)
class WorldPose:
    """World-space XYZ per joint for one frame; the root is joint 0."""

    positions: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.positions, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise MotionError(f"world pose must be J x 3, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise MotionError("world pose contains non-finite values")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "positions", arr)


def _fmt(x: float) -> str:
    # 17 significant digits: enough for exact binary64 round trips.
    return format(float(x), ".17g")


def save_motion(motion: Motion, path) -> None:
    """Write a motion file (JSON text, floats at 17 significant digits)."""
    header = [
        f'  "version": {FILE_VERSION}',
        f'  "fps": {_fmt(motion.fps)}',
        f'  "joints": {motion.layout.joints}',
        f'  "layout": {json.dumps(LAYOUT_NAME)}',
    ]
    if motion.label is not None:
        header.append(f'  "label": {json.dumps(motion.label)}')
    rows = ",\n".join(
        "    [" + ", ".join(_fmt(v) for v in row) + "]" for row in motion.frames
    )
    doc = "{\n" + ",\n".join(header) + ',\n  "frames": [\n' + rows + "\n  ]\n}\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(doc)


def load_motion(path) -> Motion:
    """Read a motion file; validates layout consistency and finiteness."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MotionError(f"malformed motion file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise MotionError(f"malformed motion file {path}: top level must be an object")
    for key in ("version", "fps", "joints", "layout", "frames"):
        if key not in doc:
            raise MotionError(f"malformed motion file {path}: missing field {key!r}")
    if doc["version"] != FILE_VERSION:
        raise MotionError(f"unsupported motion file version {doc['version']!r}")
    if doc["layout"] != LAYOUT_NAME:
        raise MotionError(f"unsupported layout {doc['layout']!r}")
    joints = doc["joints"]
    if not isinstance(joints, int):
        raise MotionError("joints must be an integer")
    layout = FeatureLayout(joints=joints)
    frames = doc["frames"]
    if not isinstance(frames, list) or not frames:
        raise MotionError("frames must be a non-empty array")
    if not all(isinstance(row, list) for row in frames):
        raise MotionError("frames must be an array of arrays")
    widths = {len(row) for row in frames}
    if widths != {layout.frame_dim}:
        raise MotionError(
            f"frame width {sorted(widths)} does not match layout width "
            f"{layout.frame_dim} for joints={joints}"
        )
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise MotionError("label must be a string when present")
    try:
        return Motion(fps=float(doc["fps"]), layout=layout, frames=frames, label=label)
    except MotionError as exc:
        raise MotionError(f"invalid motion file {path}: {exc}") from exc


def _root_track(frames: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Accumulated yaw plus integrated world x/z of the root.

    yaw(n) sums the yaw velocities of frames before n; the linear velocity of
    frame k is rotated into world by yaw(k) and then summed, so frame 0 sits
    at the origin facing +z rotation zero.
    """
    rot_vel = frames[:, 0]
    lin_vel = frames[:, 1:3]
    n = frames.shape[0]
    yaw = np.zeros(n)
    yaw[1:] = np.cumsum(rot_vel[:-1])
    cos, sin = np.cos(yaw), np.sin(yaw)
    step_x = cos * lin_vel[:, 0] + sin * lin_vel[:, 1]
    step_z = -sin * lin_vel[:, 0] + cos * lin_vel[:, 1]
    pos_x = np.zeros(n)
    pos_z = np.zeros(n)
    pos_x[1:] = np.cumsum(step_x[:-1])
    pos_z[1:] = np.cumsum(step_z[:-1])
    return yaw, pos_x, pos_z


def to_world_positions(motion: Motion) -> list[WorldPose]:
    """Recover world-space joint positions for every frame.

    The root yaw-velocity channel is integrated as yaw in radians per frame;
    rotating a local (x, z) by yaw a maps it to
    (x cos a + z sin a, -x sin a + z cos a).
    """
    layout = motion.layout
    frames = motion.frames
    j = layout.joints
    yaw, pos_x, pos_z = _root_track(frames)
    height = frames[:, 3]
    jpos = frames[:, layout.block_slice("joint_positions")].reshape(-1, j - 1, 3)
    cos, sin = np.cos(yaw), np.sin(yaw)
    poses = []
    for n in range(motion.n_frames):
        pts = np.empty((j, 3))
        pts[0] = (pos_x[n], height[n], pos_z[n])
        local = jpos[n]
        pts[1:, 0] = pts[0, 0] + cos[n] * local[:, 0] + sin[n] * local[:, 2]
        pts[1:, 1] = pts[0, 1] + local[:, 1]
        pts[1:, 2] = pts[0, 2] - sin[n] * local[:, 0] + cos[n] * local[:, 2]
        poses.append(WorldPose(pts))
    return poses
