"""Clean-sequence predictor: a flat MLP over the whole motion, trained by hand.

The network sees the flattened noisy sequence, a sinusoidal encoding of the
time step, and a label embedding, and regresses the clean sequence.  Forward,
backward, and the adaptive-moment optimizer are written out explicitly so the
gradients can be checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffusion import NoiseSchedule, q_sample

TIME_EMBED_DIM = 32
DEFAULT_EMBED_DIM = 32
DEFAULT_HIDDEN = (512, 512)


class DenoiserError(ValueError):
    """Shape mismatch or invalid training input."""


class TrainingDiverged(RuntimeError):
    """Loss became non-finite during an optimization loop."""


def time_embedding(t: int, dim: int = TIME_EMBED_DIM) -> np.ndarray:
    """Interleaved sin/cos features of the integer time step."""
    half = dim // 2
    freqs = 10000.0 ** (-np.arange(half) / half)
    ang = t * freqs
    emb = np.empty(dim)
    emb[0::2] = np.sin(ang)
    emb[1::2] = np.cos(ang)
    return emb


@dataclass
class DenoiserModel:
    """Two tanh hidden layers over [flatten(x_t), time(t), e]; affine output."""

    frame_count: int
    frame_dim: int
    embed_dim: int
    hidden1: int
    hidden2: int
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.frame_count * self.frame_dim + TIME_EMBED_DIM + self.embed_dim

    @property
    def output_dim(self) -> int:
        return self.frame_count * self.frame_dim

    @property
    def param_count(self) -> int:
        return sum(p.size for p in self.params().values())

    def params(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2,
                "w3": self.w3, "b3": self.b3}

    def copy(self) -> "DenoiserModel":
        return DenoiserModel(
            frame_count=self.frame_count,
            frame_dim=self.frame_dim,
            embed_dim=self.embed_dim,
            hidden1=self.hidden1,
            hidden2=self.hidden2,
            **{k: v.copy() for k, v in self.params().items()},
        )


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_model(
    frame_count: int,
    frame_dim: int,
    embed_dim: int = DEFAULT_EMBED_DIM,
    hidden: tuple[int, int] = DEFAULT_HIDDEN,
    seed: int = 0,
) -> DenoiserModel:
    """Seeded uniform-Glorot weights, zero biases."""
    rng = np.random.default_rng(seed)
    in_dim = frame_count * frame_dim + TIME_EMBED_DIM + embed_dim
    out_dim = frame_count * frame_dim
    h1, h2 = hidden
    return DenoiserModel(
        frame_count=frame_count,
        frame_dim=frame_dim,
        embed_dim=embed_dim,
        hidden1=h1,
        hidden2=h2,
        w1=_glorot(rng, in_dim, h1),
        b1=np.zeros(h1),
        w2=_glorot(rng, h1, h2),
        b2=np.zeros(h2),
        w3=_glorot(rng, h2, out_dim),
        b3=np.zeros(out_dim),
    )


@dataclass
class EmbeddingTable:
    """Label -> embedding vector; the stand-in for a text encoder."""

    labels: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise DenoiserError("embedding labels must be unique")
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.shape[0] != len(self.labels):
            raise DenoiserError("one embedding vector per label required")

    @property
    def embed_dim(self) -> int:
        return self.vectors.shape[1]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DenoiserError(f"unknown label {label!r}") from None

    def vector(self, label: str) -> np.ndarray:
        return self.vectors[self.index(label)]

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(labels=self.labels, vectors=self.vectors.copy())


def init_embeddings(
    labels, embed_dim: int = DEFAULT_EMBED_DIM, seed: int = 0
) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    vectors = 0.1 * rng.standard_normal((len(labels), embed_dim))
    return EmbeddingTable(labels=tuple(labels), vectors=vectors)


def _forward_cached(model: DenoiserModel, z: np.ndarray):
    a1 = z @ model.w1 + model.b1
    h1 = np.tanh(a1)
    a2 = h1 @ model.w2 + model.b2
    h2 = np.tanh(a2)
    out = h2 @ model.w3 + model.b3
    return out, (z, h1, h2)


def _backward(model: DenoiserModel, cache, dout: np.ndarray):
    """Grads of a scalar loss given d(loss)/d(out); also returns d(loss)/d(z)."""
    z, h1, h2 = cache
    gw3 = h2.T @ dout
    gb3 = dout.sum(axis=0)
    dh2 = dout @ model.w3.T
    da2 = dh2 * (1.0 - h2 * h2)
    gw2 = h1.T @ da2
    gb2 = da2.sum(axis=0)
    dh1 = da2 @ model.w2.T
    da1 = dh1 * (1.0 - h1 * h1)
    gw1 = z.T @ da1
    gb1 = da1.sum(axis=0)
    dz = da1 @ model.w1.T
    grads = {"w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2, "w3": gw3, "b3": gb3}
    return grads, dz


def forward(model: DenoiserModel, x_t: np.ndarray, t: int, e: np.ndarray) -> np.ndarray:
    """Predict the clean sequence for one noisy sequence."""
    x_t = np.asarray(x_t, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    if x_t.shape != (model.frame_count, model.frame_dim):
        raise DenoiserError(
            f"x_t shape {x_t.shape} != ({model.frame_count}, {model.frame_dim})"
        )
    if e.shape != (model.embed_dim,):
        raise DenoiserError(f"embedding shape {e.shape} != ({model.embed_dim},)")
    if t < 1:
        raise DenoiserError(f"time step must be >= 1, got {t}")
    z = np.concatenate([x_t.reshape(-1), time_embedding(t), e])[None, :]
    out, _ = _forward_cached(model, z)
    return out.reshape(model.frame_count, model.frame_dim)


def loss_and_grads_fixed(
    model: DenoiserModel,
    x0s,
    evecs,
    ts,
    epss,
    schedule: NoiseSchedule,
    weight: np.ndarray | None = None,
    want_theta: bool = True,
    want_embed: bool = True,
):
    """Weighted x0-reconstruction loss at fixed (t, eps) draws.

    Returns (loss, theta_grads | None, per-sample embedding grads | None).
    The loss is the weighted squared error summed over entries and divided by
    batch * frame_count * frame_dim, so the gradient scale is independent of
    how sparse the weight matrix is.
    """
    batch = len(x0s)
    if batch == 0:
        raise DenoiserError("empty batch")
    nd = model.output_dim
    z = np.empty((batch, model.input_dim))
    targets = np.empty((batch, nd))
    for i in range(batch):
        x0 = np.asarray(x0s[i], dtype=np.float64)
        if x0.shape != (model.frame_count, model.frame_dim):
            raise DenoiserError(
                f"sample {i} shape {x0.shape} != "
                f"({model.frame_count}, {model.frame_dim})"
            )
        x_t = q_sample(x0, int(ts[i]), epss[i], schedule)
        z[i] = np.concatenate([x_t.reshape(-1), time_embedding(int(ts[i])), evecs[i]])
        targets[i] = x0.reshape(-1)
    out, cache = _forward_cached(model, z)
    resid = targets - out
    if weight is None:
        loss = float((resid * resid).sum() / (batch * nd))
        dout = (-2.0 / (batch * nd)) * resid
    else:
        wflat = np.asarray(weight, dtype=np.float64).reshape(-1)
        if wflat.shape != (nd,):
            raise DenoiserError(
                f"weight shape {np.shape(weight)} does not match frames"
            )
        loss = float((wflat * resid * resid).sum() / (batch * nd))
        dout = (-2.0 / (batch * nd)) * wflat * resid
    if not (want_theta or want_embed):
        return loss, None, None
    grads, dz = _backward(model, cache, dout)
    theta_grads = grads if want_theta else None
    embed_grads = dz[:, -model.embed_dim:] if want_embed else None
    return loss, theta_grads, embed_grads


def loss_and_grads(
    model: DenoiserModel,
    batch,
    embeddings: EmbeddingTable,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    weight: np.ndarray | None = None,
    want_theta: bool = True,
    want_embed: bool = True,
):
    """Draw fresh (t, eps) per sample and evaluate the reconstruction loss.

    `batch` is a sequence of (frames, label).  Embedding gradients come back
    as a full table-shaped array with zero rows for labels not in the batch.
    """
    if not batch:
        raise DenoiserError("empty batch")
    ts, epss, evecs, rows = [], [], [], []
    for frames, label in batch:
        ts.append(int(rng.integers(1, schedule.steps + 1)))
        epss.append(rng.standard_normal((model.frame_count, model.frame_dim)))
        rows.append(embeddings.index(label))
        evecs.append(embeddings.vectors[rows[-1]])
    loss, theta_grads, embed_rows = loss_and_grads_fixed(
        model,
        [frames for frames, _ in batch],
        evecs,
        ts,
        epss,
        schedule,
        weight=weight,
        want_theta=want_theta,
        want_embed=want_embed,
    )
    table_grads = None
    if want_embed:
        table_grads = np.zeros_like(embeddings.vectors)
        for i, row in enumerate(rows):
            table_grads[row] += embed_rows[i]
    return loss, theta_grads, table_grads


@dataclass
class AdamState:
    """Adaptive-moment optimizer state; moments are allocated lazily per key."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def optimizer_step(state: AdamState, params: dict, grads: dict) -> dict:
    """One bias-corrected update applied in place to every key in `grads`."""
    state.step += 1
    c1 = 1.0 - state.beta1 ** state.step
    c2 = 1.0 - state.beta2 ** state.step
    for key, grad in grads.items():
        param = params[key]
        if grad.shape != param.shape:
            raise DenoiserError(
                f"gradient shape {grad.shape} != parameter shape {param.shape} "
                f"for {key!r}"
            )
        m = state.m.setdefault(key, np.zeros_like(param))
        v = state.v.setdefault(key, np.zeros_like(param))
        m += (1.0 - state.beta1) * (grad - m)
        v += (1.0 - state.beta2) * (grad * grad - v)
        param -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params


def pretrain(
    dataset,
    model: DenoiserModel,
    embeddings: EmbeddingTable,
    schedule: NoiseSchedule,
    steps: int,
    lr: float = 1e-3,
    batch_size: int = 8,
    seed: int = 0,
    progress=None,
):
    """Train the predictor and the embedding table on a labeled motion corpus.

    Minibatch order is a seeded shuffle per epoch.  Returns fresh
    (model, embeddings, losses); the inputs are left untouched.  Raises
    TrainingDiverged if the loss goes non-finite.
    """
    if not dataset:
        raise DenoiserError("empty dataset")
    for motion in dataset:
        if motion.frames.shape != (model.frame_count, model.frame_dim):
            raise DenoiserError(
                f"corpus sample shape {motion.frames.shape} does not match the "
                f"model ({model.frame_count}, {model.frame_dim})"
            )
        embeddings.index(motion.label)
    model = model.copy()
    embeddings = embeddings.copy()
    rng = np.random.default_rng(seed)
    opt_theta = AdamState(lr=lr)
    opt_embed = AdamState(lr=lr)
    losses: list[float] = []
    order = np.empty(0, dtype=np.intp)
    cursor = 0
    for step in range(steps):
        if cursor + batch_size > len(order):
            order = rng.permutation(len(dataset))
            cursor = 0
        idx = order[cursor:cursor + batch_size]
        cursor += batch_size
        batch = [(dataset[i].frames, dataset[i].label) for i in idx]
        loss, theta_grads, table_grads = loss_and_grads(
            model, batch, embeddings, schedule, rng
        )
        if not np.isfinite(loss):
            raise TrainingDiverged(f"loss became {loss} at step {step}")
        optimizer_step(opt_theta, model.params(), theta_grads)
        optimizer_step(opt_embed, {"vectors": embeddings.vectors},
                       {"vectors": table_grads})
        losses.append(loss)
        if progress is not None:
            progress(step + 1, loss)
    return model, embeddings, losses
