"""Attention smoothness penalty.

For each of the six attention vectors: the sum of fourth powers of
adjacent-frame differences, plus the vector's L1 norm. Vectors may carry a
leading batch axis; the sums run over the last axis.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionError


def tv4(v: np.ndarray) -> np.ndarray:
    diff = v[..., :-1] - v[..., 1:]
    return (diff ** 4).sum(axis=-1)


def tv4_grad(v: np.ndarray) -> np.ndarray:
    g = np.zeros_like(v)
    cube = 4.0 * (v[..., :-1] - v[..., 1:]) ** 3
    g[..., :-1] += cube
    g[..., 1:] -= cube
    return g


def _check(spatial_V, temporal_V, G: int | None):
    if len(spatial_V) != 3 or len(temporal_V) != 3:
        raise DimensionError("expected three spatial and three temporal attention vectors")
    spatial_V = [np.asarray(v, dtype=np.float64) for v in spatial_V]
    temporal_V = [np.asarray(v, dtype=np.float64) for v in temporal_V]
    n_s = spatial_V[0].shape[-1]
    if G is not None and n_s != G:
        raise DimensionError(f"spatial attention has length {n_s}, expected G={G}")
    if any(v.shape[-1] != n_s for v in spatial_V) or any(
            v.shape[-1] != n_s - 1 for v in temporal_V):
        raise DimensionError("attention vectors must have lengths G (spatial) and G-1 (temporal)")
    return spatial_V, temporal_V


def loss4(spatial_V, temporal_V, G: int | None = None, parts=("tv", "l1")):
    """Penalty value (per batch row if the vectors are batched)."""
    spatial_V, temporal_V = _check(spatial_V, temporal_V, G)
    total = 0.0
    for v in spatial_V + temporal_V:
        if "tv" in parts:
            total = total + tv4(v)
        if "l1" in parts:
            total = total + np.abs(v).sum(axis=-1)
    return total


def loss4_grad(spatial_V, temporal_V, G: int | None = None, parts=("tv", "l1")):
    """Gradient with respect to each vector, as ``{"spatial": [...], "temporal": [...]}``."""
    spatial_V, temporal_V = _check(spatial_V, temporal_V, G)
    out = {}
    for half, vs in (("spatial", spatial_V), ("temporal", temporal_V)):
        grads = []
        for v in vs:
            g = np.zeros_like(v)
            if "tv" in parts:
                g += tv4_grad(v)
            if "l1" in parts:
                g += np.sign(v)
            grads.append(g)
        out[half] = grads
    return out
