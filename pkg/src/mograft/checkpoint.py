"""Binary checkpoints for trained models and ready edit sessions.

Model file: magic "MEDT", u32 format version, then N, D, E, H1, H2, T as u32,
the six parameter arrays as little-endian f64 in layer order, and the
embedding table (u32 count; per entry u16 label length, UTF-8 label, E f64).

Session file: a model checkpoint followed by e_base and e_opt (E f64 each)
and a length-prefixed JSON block holding the combined motion, the weight
matrix, the config, and the stage.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .denoiser import DenoiserModel, EmbeddingTable
from .editing import (
    EditSession,
    WeightMatrix,
    config_from_dict,
    config_to_dict,
)
from .motion import FeatureLayout, Motion

MAGIC = b"MEDT"
FORMAT_VERSION = 1
_PARAM_ORDER = ("w1", "b1", "w2", "b2", "w3", "b3")


class CheckpointError(ValueError):
    """Corrupt or incompatible checkpoint file."""


def _array_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError("truncated checkpoint")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def f64_array(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        raw = self.take(8 * count)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)


def model_to_bytes(
    model: DenoiserModel, embeddings: EmbeddingTable, diffusion_steps: int
) -> bytes:
    parts = [MAGIC, struct.pack("<6I", FORMAT_VERSION, model.frame_count,
                                model.frame_dim, model.embed_dim,
                                model.hidden1, model.hidden2)]
    parts.append(struct.pack("<I", diffusion_steps))
    params = model.params()
    for name in _PARAM_ORDER:
        parts.append(_array_bytes(params[name]))
    parts.append(struct.pack("<I", len(embeddings.labels)))
    for label, vec in zip(embeddings.labels, embeddings.vectors):
        encoded = label.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(_array_bytes(vec))
    return b"".join(parts)


def _model_from_reader(reader: _Reader):
    if reader.take(4) != MAGIC:
        raise CheckpointError("bad magic; not a model checkpoint")
    version = reader.u32()
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    n, d, e, h1, h2 = (reader.u32() for _ in range(5))
    t_steps = reader.u32()
    in_dim = n * d + 32 + e
    out_dim = n * d
    shapes = {"w1": (in_dim, h1), "b1": (h1,), "w2": (h1, h2), "b2": (h2,),
              "w3": (h2, out_dim), "b3": (out_dim,)}
    params = {name: reader.f64_array(shapes[name]) for name in _PARAM_ORDER}
    model = DenoiserModel(frame_count=n, frame_dim=d, embed_dim=e,
                          hidden1=h1, hidden2=h2, **params)
    count = reader.u32()
    labels, vectors = [], []
    for _ in range(count):
        length = reader.u16()
        labels.append(reader.take(length).decode("utf-8"))
        vectors.append(reader.f64_array((e,)))
    table = EmbeddingTable(labels=tuple(labels),
                           vectors=np.stack(vectors) if vectors
                           else np.zeros((0, e)))
    return model, table, t_steps


def save_model(path, model: DenoiserModel, embeddings: EmbeddingTable,
               diffusion_steps: int) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model, embeddings, diffusion_steps))


def load_model(path):
    """Returns (model, embeddings, diffusion_steps)."""
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    model, table, t_steps = _model_from_reader(reader)
    if reader.pos != len(reader.buf):
        raise CheckpointError("trailing bytes after model checkpoint")
    return model, table, t_steps


def save_session(path, session: EditSession) -> None:
    if session.e_opt is None:
        raise CheckpointError("session has no optimized embedding to save")
    blob = model_to_bytes(session.model, session.embeddings, session.diffusion_steps)
    tail = {
        "combined": {
            "fps": session.combined.fps,
            "joints": session.combined.layout.joints,
            "label": session.combined.label,
            "frames": session.combined.frames.tolist(),
        },
        "weights": session.weights.entries.tolist(),
        "config": config_to_dict(session.config),
        "stage": session.stage,
    }
    text = json.dumps(tail, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(blob)
        fh.write(_array_bytes(session.e_base))
        fh.write(_array_bytes(session.e_opt))
        fh.write(struct.pack("<I", len(text)))
        fh.write(text)


def load_session(path) -> EditSession:
    with open(path, "rb") as fh:
        reader = _Reader(fh.read())
    model, table, t_steps = _model_from_reader(reader)
    e_base = reader.f64_array((model.embed_dim,))
    e_opt = reader.f64_array((model.embed_dim,))
    length = reader.u32()
    try:
        tail = json.loads(reader.take(length).decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"corrupt session tail: {exc}") from exc
    combined = Motion(
        fps=float(tail["combined"]["fps"]),
        layout=FeatureLayout(joints=int(tail["combined"]["joints"])),
        frames=tail["combined"]["frames"],
        label=tail["combined"]["label"],
    )
    return EditSession(
        combined=combined,
        weights=WeightMatrix(np.asarray(tail["weights"], dtype=np.float64)),
        e_base=e_base,
        model=model,
        embeddings=table,
        config=config_from_dict(tail["config"]),
        diffusion_steps=t_steps,
        e_opt=e_opt,
        stage=tail["stage"],
    )
