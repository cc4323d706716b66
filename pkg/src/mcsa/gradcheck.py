"""Finite-difference verification of every training objective on a tiny random model."""
from __future__ import annotations

import numpy as np

from .numeric import finite_diff_check
from .stream import ModelConfig, StreamModel
from .trainer import objective
from .transfer import frozen_kernels, snapshot

TINY = ModelConfig(s=3, t=3, G=4, k=3, a=2, b=2)


def tiny_problem(seed: int, config: ModelConfig = TINY, batch: int = 4):
    """Random upper model, random frozen lower snapshot and a random batch.

    Parameters are standard normal rather than the training initialisation:
    near-uniform attention at small init makes the quartic penalty's
    gradients too small for central differences to resolve.
    """
    rng = np.random.default_rng(seed)
    shapes = sorted(config.shapes().items())
    upper = StreamModel(config, {n: rng.standard_normal(s) for n, s in shapes})
    lower = StreamModel(config, {n: rng.standard_normal(s) for n, s in shapes})
    S = rng.standard_normal((batch, config.s, config.G))
    T = rng.standard_normal((batch, config.t, config.G - 1))
    y = rng.integers(0, config.k, size=batch)
    return upper, snapshot(lower), S, T, y


OBJECTIVES = {
    "loss1": dict(lambda_ce=1.0),
    "loss2": dict(lambda_ce=1.0),
    "loss3": dict(lambda_ce=0.0, lambda_mmd=1.0),
    "loss4": dict(lambda_ce=0.0, lambda_reg=1.0),
    "phase2": dict(lambda_ce=1.0, lambda_mmd=1.0, lambda_reg=0.1),
}


def check_objective(model, S, T, y, snap=None, **weights) -> float:
    """Max relative error of the analytic gradient of one weighted objective.

    MMD bandwidths are frozen at the base point, matching how training
    treats them as constants.
    """
    kernel = frozen_kernels(model, snap) if snap is not None else None

    def f(params):
        probe = StreamModel(model.config, {n: p.copy() for n, p in params.items()})
        return objective(probe, S, T, y, snap=snap, kernel=kernel, **weights)[0]["total"]

    grads = objective(model, S, T, y, snap=snap, kernel=kernel, **weights)[1]
    return finite_diff_check(f, model.params, grads)


def run_gradcheck(seed: int = 0) -> dict[str, float]:
    """Max relative error for loss1..loss4 and the combined phase-2 objective.

    loss1 uses trimmed-style inputs on one model; loss2 and the rest use a
    second draw, standing in for the upper stream on untrimmed inputs.
    """
    out = {}
    lower_model, _, S1, T1, y1 = tiny_problem(seed)
    out["loss1"] = check_objective(lower_model, S1, T1, y1, **OBJECTIVES["loss1"])
    upper, snap, S2, T2, y2 = tiny_problem(seed + 1)
    for name in ("loss2", "loss3", "loss4", "phase2"):
        use_snap = snap if OBJECTIVES[name].get("lambda_mmd") else None
        out[name] = check_objective(upper, S2, T2, y2, use_snap, **OBJECTIVES[name])
    return out
