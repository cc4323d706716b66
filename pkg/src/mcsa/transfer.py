"""Classifier-parameter transfer via multi-kernel MMD.

The frozen lower stream's P/Q/M parameters are grouped by role into small
sets of vectors; the upper stream is penalised by the biased MMD^2 between
each of its groups and the matching frozen group.
"""
from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import DimensionError
from .stream import CHANNELS, StreamModel

GROUPS = ("spatial_P", "spatial_Q", "temporal_P", "temporal_Q", "fusion")
DEFAULT_MULTIPLIERS = (0.25, 0.5, 1.0, 2.0, 4.0)


def group_members(group: str) -> list[str]:
    if group == "fusion":
        return ["fusion.M"]
    half, kind = group.split("_")
    return [f"{half}.{kind}{j}" for j in CHANNELS]


def group_vectors(model: StreamModel) -> dict[str, np.ndarray]:
    """Classifier parameters as ``group -> (members, dim)`` arrays (Q flattened row-major)."""
    return {g: np.stack([model.params[n].reshape(-1) for n in group_members(g)])
            for g in GROUPS}


@dataclass(frozen=True)
class TransferSnapshot:
    groups: Mapping[str, np.ndarray]

    def __getitem__(self, group: str) -> np.ndarray:
        return self.groups[group]


def snapshot(lower: StreamModel) -> TransferSnapshot:
    """Deep, read-only copy of the lower stream's classifier parameters."""
    groups = {}
    for g, arr in group_vectors(lower).items():
        arr = arr.copy()
        arr.setflags(write=False)
        groups[g] = arr
    return TransferSnapshot(MappingProxyType(groups))


@dataclass(frozen=True)
class KernelSpec:
    """Equal-weight mixture of Gaussian kernels with bandwidths ``sigma0 * m``.

    ``bandwidth=None`` picks ``sigma0`` by the median heuristic on each call.
    """

    multipliers: tuple[float, ...] = DEFAULT_MULTIPLIERS
    bandwidth: float | None = None

    def __post_init__(self):
        if not self.multipliers or any(m <= 0 for m in self.multipliers):
            raise ValueError("kernel multipliers must be positive")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")

    def sigmas(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        base = self.bandwidth if self.bandwidth is not None else median_bandwidth(X, Y)
        return base * np.asarray(self.multipliers, dtype=np.float64)


def median_bandwidth(X: np.ndarray, Y: np.ndarray) -> float:
    """Median of the positive pairwise distances in the pooled set; 1.0 if none."""
    Z = np.concatenate([X, Y])
    i, j = np.triu_indices(len(Z), k=1)
    dist = np.sqrt(((Z[i] - Z[j]) ** 2).sum(axis=1))
    dist = dist[dist > 0]
    return float(np.median(dist)) if dist.size else 1.0


def _sqdist(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - Y[None, :, :]
    return (diff * diff).sum(axis=2)


def _as_set(X, name) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty set of vectors")
    return X


def mmd2(X, Y, kernel: KernelSpec | None = None) -> float:
    """Biased (V-statistic) MMD^2 between the rows of ``X`` and ``Y``."""
    return mmd2_and_grad(X, Y, kernel)[0]


def mmd2_and_grad(X, Y, kernel: KernelSpec | None = None) -> tuple[float, np.ndarray]:
    """MMD^2 and its gradient with respect to ``X`` (bandwidths held fixed)."""
    kernel = kernel or KernelSpec()
    X, Y = _as_set(X, "X"), _as_set(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(f"vector lengths differ: {X.shape[1]} vs {Y.shape[1]}")
    n, m = len(X), len(Y)
    sigmas = kernel.sigmas(X, Y)
    w = 1.0 / len(sigmas)
    dxx, dyy, dxy = _sqdist(X, X), _sqdist(Y, Y), _sqdist(X, Y)
    value = 0.0
    grad = np.zeros_like(X)
    for sigma in sigmas:
        s2 = 2.0 * sigma * sigma
        kxx, kyy, kxy = np.exp(-dxx / s2), np.exp(-dyy / s2), np.exp(-dxy / s2)
        value += w * (kxx.mean() + kyy.mean() - 2.0 * kxy.mean())
        # d k(x, z) / dx = -2 k(x, z) (x - z) / s2
        within = (kxx[:, :, None] * (X[:, None, :] - X[None, :, :])).sum(axis=1)
        cross = (kxy[:, :, None] * (X[:, None, :] - Y[None, :, :])).sum(axis=1)
        grad += w * (-4.0 / (s2 * n * n) * within + 4.0 / (s2 * n * m) * cross)
    return float(value), grad


def frozen_kernels(upper: StreamModel, snap: TransferSnapshot,
                   kernel: KernelSpec | None = None) -> dict[str, KernelSpec]:
    """Per-group kernels with the median-heuristic bandwidth fixed at ``upper``'s current value."""
    kernel = kernel or KernelSpec()
    current = group_vectors(upper)
    return {g: KernelSpec(kernel.multipliers,
                          kernel.bandwidth if kernel.bandwidth is not None
                          else median_bandwidth(current[g], snap[g]))
            for g in GROUPS}


def loss3(upper: StreamModel, snap: TransferSnapshot,
          kernel: KernelSpec | Mapping[str, KernelSpec] | None = None) -> float:
    return loss3_and_grad(upper, snap, kernel)[0]


def loss3_and_grad(upper: StreamModel, snap: TransferSnapshot,
                   kernel: KernelSpec | Mapping[str, KernelSpec] | None = None,
                   ) -> tuple[float, dict[str, np.ndarray]]:
    """Sum of per-group MMD^2 and its gradient on the upper classifier parameters.

    ``kernel`` may be a single spec used for every group or a ``group -> spec``
    mapping. The snapshot is a constant: no gradient is produced for it.
    """
    current = group_vectors(upper)
    total = 0.0
    grads = {}
    for g in GROUPS:
        spec = kernel.get(g) if isinstance(kernel, Mapping) else kernel
        if current[g].shape != snap[g].shape:
            raise DimensionError(
                f"group {g}: upper {current[g].shape} vs snapshot {snap[g].shape}")
        value, gX = mmd2_and_grad(current[g], snap[g], spec)
        total += value
        for row, name in enumerate(group_members(g)):
            grads[name] = gX[row].reshape(upper.params[name].shape)
    return total, grads
