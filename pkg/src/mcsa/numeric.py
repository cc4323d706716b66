"""Dense double-precision helpers: activations, softmax, gradient checking.

Matrices are plain 2-D ``float64`` numpy arrays. They are never mutated in
place once handed to a model, so they can be shared between threads.
"""
from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .errors import DimensionError, NumericError

ACTIVATIONS = ("sigmoid", "tanh", "leaky_relu")
LEAKY_SLOPE = 0.01


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite, non-empty 2-D float64 array."""
    m = np.array(x, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2 or m.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    check_finite(m, name)
    return m


def check_finite(x: np.ndarray, name: str = "value") -> None:
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite entries in {name}")


def softmax(v, axis: int = -1) -> np.ndarray:
    """Max-subtracted softmax along ``axis``."""
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0 or v.shape[axis] == 0:
        raise DimensionError("softmax of an empty vector")
    check_finite(v, "softmax input")
    e = np.exp(v - v.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def softmax_backward(p: np.ndarray, grad_p: np.ndarray, axis: int = -1) -> np.ndarray:
    """Vector-Jacobian product of softmax given its output ``p``."""
    return p * (grad_p - (p * grad_p).sum(axis=axis, keepdims=True))


def activate(kind: str, x, alpha: float = LEAKY_SLOPE) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    check_finite(x, f"{kind} input")
    if kind == "sigmoid":
        # split by sign so exp never overflows
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out
    if kind == "tanh":
        return np.tanh(x)
    if kind == "leaky_relu":
        return np.where(x > 0, x, alpha * x)
    raise ValueError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def activate_grad(kind: str, x: np.ndarray, y: np.ndarray, alpha: float = LEAKY_SLOPE) -> np.ndarray:
    """Elementwise derivative at ``x`` where ``y = activate(kind, x)``."""
    if kind == "sigmoid":
        return y * (1.0 - y)
    if kind == "tanh":
        return 1.0 - y * y
    if kind == "leaky_relu":
        return np.where(x > 0, 1.0, alpha)
    raise ValueError(f"unknown activation {kind!r}")


def matmul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def scale_columns(a, w) -> np.ndarray:
    """Multiply column ``g`` of ``a`` by ``w[g]``."""
    a = np.asarray(a, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if a.ndim != 2 or a.shape[1] != w.shape[0]:
        raise DimensionError(f"cannot scale columns of {a.shape} by {w.shape[0]} weights")
    return a * w[None, :]


def l1_norm(v) -> float:
    return float(np.abs(np.asarray(v, dtype=np.float64)).sum())


def finite_diff_check(
    f: Callable[[Mapping[str, np.ndarray]], float],
    params: Mapping[str, np.ndarray],
    analytic: Mapping[str, np.ndarray],
    h: float | None = None,
) -> float:
    """Max relative error between ``analytic`` and central differences of ``f``.

    The step for coordinate ``θ`` is ``1e-5 * (1 + |θ|)`` unless ``h`` is given.
    Relative error is ``|analytic - numeric| / max(1e-8, |numeric|)``.
    """
    work = {k: np.array(v, dtype=np.float64, copy=True) for k, v in params.items()}
    worst = 0.0
    for name in sorted(work):
        theta = work[name]
        grad = np.asarray(analytic[name], dtype=np.float64)
        if grad.shape != theta.shape:
            raise DimensionError(f"gradient for {name} has shape {grad.shape}, parameter {theta.shape}")
        flat = theta.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            step = h if h is not None else 1e-5 * (1.0 + abs(orig))
            hi, lo = orig + step, orig - step
            flat[i] = hi
            fp = f(work)
            flat[i] = lo
            fm = f(work)
            flat[i] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise NumericError(f"non-finite objective while probing {name}[{i}]")
            numeric = (fp - fm) / (hi - lo)
            err = abs(gflat[i] - numeric) / max(1e-8, abs(numeric))
            worst = max(worst, err)
    return worst
