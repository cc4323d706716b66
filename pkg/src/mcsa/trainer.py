"""Two-phase SGD training.

Phase 1 fits the lower stream on trimmed videos with cross-entropy.
Phase 2 freezes it into a transfer snapshot and fits a fresh upper stream
on untrimmed videos with

    CE + lambda_mmd * MMD(upper classifier, snapshot) + lambda_reg * attention penalty
"""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .attention import FeatureSample
from .errors import ConfigError, NumericError
from .regularizer import loss4, loss4_grad
from .stream import (ModelConfig, StreamModel, backward_batch, cross_entropy_batch, forward_batch,
                     stack_samples)
from .transfer import KernelSpec, TransferSnapshot, group_members, group_vectors, loss3_and_grad

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    weight_decay: float = 5e-4
    lr_decay_every: int = 1000
    lr_decay_factor: float = 1.0
    lambda_mmd: float = 1.0
    lambda_reg: float = 0.1
    lambda_ce: float = 1.0  # only lowered to freeze the data term in tests
    batch_size: int = 8
    max_iterations: int = 5000
    seed: int = 0
    a: int = 64
    b: int = 64
    init_from_snapshot: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if min(self.lambda_mmd, self.lambda_reg, self.lambda_ce, self.weight_decay) < 0:
            raise ConfigError("loss weights and weight_decay must be non-negative")
        if self.batch_size < 1 or self.max_iterations < 0 or self.jobs < 1:
            raise ConfigError("batch_size and jobs must be >= 1, max_iterations >= 0")
        if self.lr_decay_every < 1 or self.lr_decay_factor <= 0:
            raise ConfigError("lr_decay_every must be >= 1 and lr_decay_factor positive")


@dataclass
class TrainReport:
    loss_total: list[float] = field(default_factory=list)
    loss_ce: list[float] = field(default_factory=list)
    loss_mmd: list[float] = field(default_factory=list)
    loss_reg: list[float] = field(default_factory=list)
    final_train_acc: float | None = None
    final_val_acc: float | None = None
    signal_attention: float | None = None
    uniform_attention: float | None = None
    seed: int = 0
    wall_seconds: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def sgd_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float,
             weight_decay: float) -> dict[str, np.ndarray]:
    """``θ <- θ - lr * (g + weight_decay * θ)`` for every named parameter."""
    out = {}
    for name in sorted(params):
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {name}")
        out[name] = params[name] - lr * (g + weight_decay * params[name])
    return out


def evaluate(model: StreamModel, data: Sequence[FeatureSample]) -> float:
    if len(data) == 0:
        raise ConfigError("cannot evaluate on an empty dataset")
    S, T, y = stack_samples(data)
    pred = np.argmax(forward_batch(model, S, T).y, axis=1)
    return float(np.mean(pred == y))


def signal_attention(model: StreamModel, data: Sequence[FeatureSample]) -> float | None:
    """Mean spatial attention weight per annotated signal frame (compare with 1/G)."""
    annotated = [x for x in data if x.signal_segment is not None]
    if not annotated:
        return None
    S, T, _ = stack_samples(annotated)
    cache = forward_batch(model, S, T)
    total = 0.0
    for V in cache.attention("spatial"):
        for row, x in zip(V, annotated):
            start, length = x.signal_segment
            total += row[start:start + length].mean()
    return total / (3 * len(annotated))


def model_config_for(data: Sequence[FeatureSample], config: TrainConfig, k: int | None = None) -> ModelConfig:
    s, t, G = data[0].dims
    if any(x.dims != (s, t, G) for x in data):
        raise ConfigError("samples have inconsistent dimensions")
    k = k if k is not None else max(x.label for x in data) + 1
    return ModelConfig(s=s, t=t, G=G, k=max(k, 2), a=config.a, b=config.b)


def _per_sample_grads(model, S, T, y, lambda_ce, lambda_reg):
    cache = forward_batch(model, S, T)
    ce, dz = cross_entropy_batch(cache, y)
    spatial, temporal = cache.attention("spatial"), cache.attention("temporal")
    reg = loss4(spatial, temporal, model.config.G) if lambda_reg else np.zeros_like(ce)
    dV = None
    if lambda_reg:
        dV = loss4_grad(spatial, temporal, model.config.G)
        dV = {h: [lambda_reg * g for g in vs] for h, vs in dV.items()}
    if lambda_ce != 1.0:
        dz = lambda_ce * dz
    return ce, reg, backward_batch(model, cache, dz, dV)


def objective(model: StreamModel, S: np.ndarray, T: np.ndarray, y: np.ndarray, *,
              snap: TransferSnapshot | None = None, kernel=None, lambda_ce: float = 1.0,
              lambda_mmd: float = 0.0, lambda_reg: float = 0.0, pool=None, jobs: int = 1
              ) -> tuple[dict[str, float], dict[str, np.ndarray]]:
    """Batch objective ``ce + mmd + reg`` (each already weighted) and its gradient.

    CE and the attention penalty are batch means; per-sample gradients are
    reduced in sample order so the result does not depend on ``jobs``.
    """
    if pool is None or len(y) == 1:
        ce, reg, per = _per_sample_grads(model, S, T, y, lambda_ce, lambda_reg)
    else:
        chunks = np.array_split(np.arange(len(y)), min(jobs, len(y)))
        parts = list(pool.map(lambda ix: _per_sample_grads(model, S[ix], T[ix], y[ix],
                                                           lambda_ce, lambda_reg), chunks))
        ce = np.concatenate([p[0] for p in parts])
        reg = np.concatenate([p[1] for p in parts])
        per = {n: np.concatenate([p[2][n] for p in parts]) for n in parts[0][2]}
    grads = {}
    for name, g in per.items():
        acc = g[0].copy()
        for i in range(1, len(g)):
            acc += g[i]
        grads[name] = acc / len(g)
    mmd = 0.0
    if snap is not None and lambda_mmd:
        mmd, g3 = loss3_and_grad(model, snap, kernel)
        for name, g in g3.items():
            grads[name] = grads[name] + lambda_mmd * g
    parts = {"ce": float(ce.mean()), "mmd": float(mmd), "reg": float(np.mean(reg))}
    parts["total"] = lambda_ce * parts["ce"] + lambda_mmd * parts["mmd"] + lambda_reg * parts["reg"]
    return parts, grads


def _run(data, config: TrainConfig, snap: TransferSnapshot | None, kernel: KernelSpec | None,
         val, k: int | None, lambda_mmd: float, lambda_reg: float) -> tuple[StreamModel, TrainReport]:
    if len(data) == 0:
        raise ConfigError("training set is empty")
    started = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    model = StreamModel.init(model_config_for(data, config, k), rng)
    if snap is not None and config.init_from_snapshot:
        _load_snapshot_into(model, snap)
    S_all, T_all, y_all = stack_samples(data)
    report = TrainReport(seed=config.seed)
    order = np.empty(0, dtype=np.int64)
    pool = ThreadPoolExecutor(config.jobs) if config.jobs > 1 else None
    try:
        for it in range(config.max_iterations):
            if len(order) == 0:
                order = rng.permutation(len(data))
            idx, order = order[:config.batch_size], order[config.batch_size:]
            parts, grads = objective(model, S_all[idx], T_all[idx], y_all[idx], snap=snap,
                                     kernel=kernel, lambda_ce=config.lambda_ce,
                                     lambda_mmd=lambda_mmd, lambda_reg=lambda_reg,
                                     pool=pool, jobs=config.jobs)
            total = parts["total"]
            if not np.isfinite(total):
                raise NumericError(f"non-finite loss at iteration {it}")
            lr = config.learning_rate * config.lr_decay_factor ** (it // config.lr_decay_every)
            model.params = sgd_step(model.params, grads, lr, config.weight_decay)
            report.loss_total.append(total)
            report.loss_ce.append(parts["ce"])
            report.loss_mmd.append(parts["mmd"])
            report.loss_reg.append(parts["reg"])
            if it % 500 == 0:
                log.debug("iter %d loss %.5f (ce %.5f mmd %.5f reg %.5f)", it, total,
                          parts["ce"], parts["mmd"], parts["reg"])
    finally:
        if pool is not None:
            pool.shutdown()
    report.final_train_acc = evaluate(model, data)
    if val:
        report.final_val_acc = evaluate(model, val)
        report.signal_attention = signal_attention(model, val)
        if report.signal_attention is not None:
            report.uniform_attention = 1.0 / model.config.G
    report.wall_seconds = time.perf_counter() - started
    return model, report


def _load_snapshot_into(model: StreamModel, snap: TransferSnapshot) -> None:
    for g in snap.groups:
        for row, name in enumerate(group_members(g)):
            model.params[name] = np.array(snap[g][row]).reshape(model.params[name].shape)


def train_lower(data: Sequence[FeatureSample], config: TrainConfig = TrainConfig(),
                val: Sequence[FeatureSample] | None = None, k: int | None = None
                ) -> tuple[StreamModel, TrainReport]:
    """Phase 1: cross-entropy on trimmed samples."""
    if any(not x.trimmed for x in data):
        raise ConfigError("train_lower expects trimmed samples only")
    return _run(data, config, None, None, val, k, 0.0, 0.0)


def train_upper(data: Sequence[FeatureSample], snap: TransferSnapshot,
                config: TrainConfig = TrainConfig(), val: Sequence[FeatureSample] | None = None,
                k: int | None = None, kernel: KernelSpec | None = None
                ) -> tuple[StreamModel, TrainReport]:
    """Phase 2: CE + MMD transfer + attention penalty on untrimmed samples."""
    probe = StreamModel.zeros(model_config_for(data, config, k)) if data else None
    if probe is not None:
        shapes = {g: v.shape for g, v in group_vectors(probe).items()}
        if shapes != {g: snap[g].shape for g in snap.groups}:
            raise ConfigError("snapshot is not dimension-compatible with the untrimmed data")
    return _run(data, config, snap, kernel, val, k, config.lambda_mmd, config.lambda_reg)
