"""Two-half stream model: attention banks, six channel heads and fusion.

Parameters live in one flat ``name -> array`` dict so that gradients,
SGD updates, snapshots and serialisation all share the same keys::

    spatial.W{j}  spatial.u{j}  spatial.P{j}  spatial.Q{j}     j = 1, 2, 3
    temporal.W{j} temporal.u{j} temporal.P{j} temporal.Q{j}
    fusion.M

The batched forward/backward pair works on stacked inputs of shape
``(B, s, G)`` and ``(B, t, G-1)`` and returns per-sample gradients so the
caller controls the reduction order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import CHANNEL_ACTIVATIONS, AttentionChannelParams, FeatureSample, attention_bank
from .errors import DimensionError
from .numeric import LEAKY_SLOPE, activate, activate_grad, as_matrix, softmax, softmax_backward

HALVES = ("spatial", "temporal")
CHANNELS = (1, 2, 3)
LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    s: int
    t: int
    G: int = 16
    k: int = 2
    a: int = 64
    b: int = 64
    alpha: float = LEAKY_SLOPE

    def __post_init__(self):
        for name in ("s", "t", "G", "k", "a", "b"):
            if getattr(self, name) < 1:
                raise DimensionError(f"{name} must be positive")
        if self.G < 2:
            raise DimensionError("G must be at least 2")
        if self.k < 2:
            raise DimensionError("k must be at least 2")

    def half_dims(self, half: str) -> tuple[int, int, int]:
        """(feature rows, hidden size, frame count) for one half."""
        if half == "spatial":
            return self.s, self.a, self.G
        return self.t, self.b, self.G - 1

    def shapes(self) -> dict[str, tuple[int, int]]:
        out = {}
        for half in HALVES:
            d, hidden, n = self.half_dims(half)
            for j in CHANNELS:
                out[f"{half}.W{j}"] = (hidden, d)
                out[f"{half}.u{j}"] = (1, hidden)
                out[f"{half}.P{j}"] = (1, d)
                out[f"{half}.Q{j}"] = (self.k, n)
        out["fusion.M"] = (1, 6)
        return out

    def to_dict(self) -> dict:
        return {"s": self.s, "t": self.t, "G": self.G, "k": self.k,
                "a": self.a, "b": self.b, "alpha": self.alpha}


@dataclass
class ChannelHeadParams:
    P: np.ndarray  # 1 x d
    Q: np.ndarray  # k x n


@dataclass
class StreamModel:
    config: ModelConfig
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        shapes = self.config.shapes()
        self.params = dict(self.params)  # never write into the caller's mapping
        if set(self.params) != set(shapes):
            missing = sorted(set(shapes) ^ set(self.params))
            raise DimensionError(f"parameter set mismatch: {missing}")
        for name, shape in shapes.items():
            p = as_matrix(self.params[name], name)
            if p.shape != shape:
                raise DimensionError(f"{name} has shape {p.shape}, expected {shape}")
            self.params[name] = p

    @classmethod
    def zeros(cls, config: ModelConfig) -> "StreamModel":
        return cls(config, {n: np.zeros(s) for n, s in config.shapes().items()})

    @classmethod
    def init(cls, config: ModelConfig, rng: np.random.Generator) -> "StreamModel":
        """Glorot-uniform initialisation, drawn in sorted name order."""
        params = {}
        for name, (rows, cols) in sorted(config.shapes().items()):
            limit = np.sqrt(6.0 / (rows + cols))
            params[name] = rng.uniform(-limit, limit, size=(rows, cols))
        return cls(config, params)

    def copy(self) -> "StreamModel":
        return StreamModel(self.config, {n: p.copy() for n, p in self.params.items()})

    def channels(self, half: str) -> list[AttentionChannelParams]:
        return [AttentionChannelParams(self.params[f"{half}.W{j}"], self.params[f"{half}.u{j}"],
                                       CHANNEL_ACTIVATIONS[j - 1], self.config.alpha)
                for j in CHANNELS]

    def heads(self, half: str) -> list[ChannelHeadParams]:
        return [ChannelHeadParams(self.params[f"{half}.P{j}"], self.params[f"{half}.Q{j}"])
                for j in CHANNELS]

    @property
    def spatial_channels(self):
        return self.channels("spatial")

    @property
    def temporal_channels(self):
        return self.channels("temporal")

    @property
    def spatial_heads(self):
        return self.heads("spatial")

    @property
    def temporal_heads(self):
        return self.heads("temporal")

    @property
    def fusion_M(self) -> np.ndarray:
        return self.params["fusion.M"]


def channel_distribution(head: ChannelHeadParams, attended) -> np.ndarray:
    """``softmax(Q (P attended)^T)`` over the k classes."""
    attended = as_matrix(attended, "attended")
    P, Q = as_matrix(head.P, "P"), as_matrix(head.Q, "Q")
    if P.shape[1] != attended.shape[0] or Q.shape[1] != attended.shape[1]:
        raise DimensionError(
            f"head P{P.shape}/Q{Q.shape} does not fit attended matrix {attended.shape}")
    return softmax(Q @ (P @ attended)[0])


def fuse(M, D) -> np.ndarray:
    """Mix the k x 6 matrix of channel distributions with weights ``M`` (1 x 6)."""
    M = as_matrix(M, "M")
    D = as_matrix(D, "D")
    if M.shape != (1, 6) or D.shape[1] != 6:
        raise DimensionError(f"fusion expects M 1x6 and D kx6, got {M.shape} and {D.shape}")
    return softmax(D @ M[0])


def forward(model: StreamModel, sample: FeatureSample) -> tuple[np.ndarray, list[np.ndarray]]:
    """Class distribution and the six attention vectors (spatial 1..3, temporal 1..3)."""
    _check_sample(model.config, sample)
    columns, vectors = [], []
    for half, F in (("spatial", sample.spatial), ("temporal", sample.temporal)):
        vs, attended = attention_bank(model.channels(half), F)
        vectors.extend(vs)
        columns.extend(channel_distribution(h, m) for h, m in zip(model.heads(half), attended))
    return fuse(model.fusion_M, np.stack(columns, axis=1)), vectors


def cross_entropy(pred, label: int) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    if not 0 <= label < pred.shape[-1]:
        raise IndexError(f"label {label} out of range for {pred.shape[-1]} classes")
    return float(-np.log(max(pred[label], LOG_FLOOR)))


def predict(model: StreamModel, sample: FeatureSample) -> int:
    """Arg-max class; ties go to the lowest index."""
    return int(np.argmax(forward(model, sample)[0]))


def _check_sample(config: ModelConfig, sample: FeatureSample) -> None:
    if sample.dims != (config.s, config.t, config.G):
        raise DimensionError(
            f"sample dims (s,t,G)={sample.dims} do not match model "
            f"({config.s},{config.t},{config.G})")


def stack_samples(samples) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack samples into ``(B,s,G)``, ``(B,t,G-1)`` and label arrays."""
    S = np.stack([x.spatial for x in samples])
    T = np.stack([x.temporal for x in samples])
    y = np.array([x.label for x in samples], dtype=np.int64)
    return S, T, y


# ---------------------------------------------------------------------------
# Batched forward / backward
# ---------------------------------------------------------------------------


@dataclass
class _ChannelCache:
    Z: np.ndarray   # (B, hidden, n) pre-activation
    A: np.ndarray   # (B, hidden, n)
    V: np.ndarray   # (B, n) attention
    pf: np.ndarray  # (B, n) P @ F
    r: np.ndarray   # (B, n) P @ attended
    d: np.ndarray   # (B, k) channel distribution


@dataclass
class BatchCache:
    inputs: dict[str, np.ndarray]
    channels: dict[tuple[str, int], _ChannelCache]
    D: np.ndarray   # (B, k, 6)
    y: np.ndarray   # (B, k) fused prediction

    def attention(self, half: str) -> list[np.ndarray]:
        return [self.channels[(half, j)].V for j in CHANNELS]


def forward_batch(model: StreamModel, S: np.ndarray, T: np.ndarray) -> BatchCache:
    p, cfg = model.params, model.config
    inputs = {"spatial": S, "temporal": T}
    channels = {}
    columns = []
    for half in HALVES:
        F = inputs[half]
        for j in CHANNELS:
            kind = CHANNEL_ACTIVATIONS[j - 1]
            Z = p[f"{half}.W{j}"] @ F
            A = activate(kind, Z, cfg.alpha)
            V = softmax((p[f"{half}.u{j}"] @ A)[:, 0, :])
            pf = (p[f"{half}.P{j}"] @ F)[:, 0, :]
            r = pf * V
            # stacked (per-sample) products keep each row independent of batch size
            d = softmax((r[:, None, :] @ p[f"{half}.Q{j}"].T)[:, 0, :])
            channels[(half, j)] = _ChannelCache(Z, A, V, pf, r, d)
            columns.append(d)
    D = np.stack(columns, axis=2)
    y = softmax(D @ p["fusion.M"][0])
    return BatchCache(inputs, channels, D, y)


def cross_entropy_batch(cache: BatchCache, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample losses and their gradient with respect to the fusion logits."""
    B = cache.y.shape[0]
    picked = cache.y[np.arange(B), labels]
    losses = -np.log(np.maximum(picked, LOG_FLOOR))
    dz = cache.y.copy()
    dz[np.arange(B), labels] -= 1.0
    dz[picked <= LOG_FLOOR] = 0.0  # clamped region is flat
    return losses, dz


def backward_batch(model: StreamModel, cache: BatchCache, dz: np.ndarray | None = None,
                   dV: dict[str, list[np.ndarray]] | None = None) -> dict[str, np.ndarray]:
    """Per-sample gradients (leading batch axis) of ``sum(dz * z) + sum(dV * V)``.

    ``dz`` is the upstream gradient on the fused logits, ``dV`` maps each half
    to three upstream gradients on its attention vectors. Either may be None.
    """
    p, cfg = model.params, model.config
    B = cache.y.shape[0]
    grads: dict[str, np.ndarray] = {}
    if dz is not None:
        grads["fusion.M"] = np.einsum("bk,bkc->bc", dz, cache.D)[:, None, :]
        dD = dz[:, :, None] * p["fusion.M"][0][None, None, :]
    else:
        grads["fusion.M"] = np.zeros((B, 1, 6))
        dD = None
    col = 0
    for half in HALVES:
        F = cache.inputs[half]
        Ft = F.transpose(0, 2, 1)
        for j in CHANNELS:
            c = cache.channels[(half, j)]
            Q = p[f"{half}.Q{j}"]
            dVj = np.zeros_like(c.V)
            if dD is not None:
                dlog = softmax_backward(c.d, dD[:, :, col])
                grads[f"{half}.Q{j}"] = dlog[:, :, None] * c.r[:, None, :]
                dr = (dlog[:, None, :] @ Q)[:, 0, :]
                grads[f"{half}.P{j}"] = (dr * c.V)[:, None, :] @ Ft
                dVj = dVj + dr * c.pf
            else:
                grads[f"{half}.Q{j}"] = np.zeros((B,) + Q.shape)
                grads[f"{half}.P{j}"] = np.zeros((B,) + p[f"{half}.P{j}"].shape)
            if dV is not None:
                dVj = dVj + dV[half][j - 1]
            dl = softmax_backward(c.V, dVj)
            grads[f"{half}.u{j}"] = dl[:, None, :] @ c.A.transpose(0, 2, 1)
            dA = p[f"{half}.u{j}"][0][None, :, None] * dl[:, None, :]
            dZ = dA * activate_grad(CHANNEL_ACTIVATIONS[j - 1], c.Z, c.A, cfg.alpha)
            grads[f"{half}.W{j}"] = dZ @ Ft
            col += 1
    return grads


def reduce_mean(per_sample: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Average per-sample gradients, summing in fixed sample order."""
    out = {}
    for name, g in per_sample.items():
        acc = g[0].copy()
        for b in range(1, g.shape[0]):
            acc += g[b]
        out[name] = acc / g.shape[0]
    return out
