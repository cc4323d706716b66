"""Per-frame multi-channel self-attention.

Each channel scores the columns (frames) of a feature matrix ``F`` with
``softmax(u @ act(W @ F))`` and rescales every column by its score.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .numeric import ACTIVATIONS, LEAKY_SLOPE, activate, as_matrix, scale_columns, softmax

CHANNEL_ACTIVATIONS = ACTIVATIONS  # channel j uses CHANNEL_ACTIVATIONS[j]


@dataclass(frozen=True)
class FeatureSample:
    """One video: spatial ``s x G`` and temporal ``t x (G-1)`` feature matrices.

    ``signal_segment`` is an optional ``(start, length)`` ground-truth frame
    span emitted by the synthetic generator; training never looks at it.
    """

    spatial: np.ndarray
    temporal: np.ndarray
    label: int
    trimmed: bool = True
    video_id: str = ""
    signal_segment: tuple[int, int] | None = None

    def __post_init__(self):
        spatial = as_matrix(self.spatial, "spatial features")
        temporal = as_matrix(self.temporal, "temporal features")
        G = spatial.shape[1]
        if G < 2:
            raise DimensionError(f"need at least 2 frames, got {G}")
        if temporal.shape[1] != G - 1:
            raise DimensionError(
                f"temporal matrix must have G-1={G - 1} columns, got {temporal.shape[1]}")
        spatial.setflags(write=False)
        temporal.setflags(write=False)
        object.__setattr__(self, "spatial", spatial)
        object.__setattr__(self, "temporal", temporal)
        object.__setattr__(self, "label", int(self.label))
        object.__setattr__(self, "trimmed", bool(self.trimmed))

    @property
    def dims(self) -> tuple[int, int, int]:
        """``(s, t, G)``."""
        return self.spatial.shape[0], self.temporal.shape[0], self.spatial.shape[1]


@dataclass
class AttentionChannelParams:
    W: np.ndarray  # hidden x feature_dim
    u: np.ndarray  # 1 x hidden
    activation: str
    alpha: float = field(default=LEAKY_SLOPE)

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        self.W = as_matrix(self.W, "W")
        self.u = as_matrix(self.u, "u")
        if self.u.shape != (1, self.W.shape[0]):
            raise DimensionError(f"u must be 1x{self.W.shape[0]}, got {self.u.shape}")


def channel_attention(params: AttentionChannelParams, F) -> np.ndarray:
    """Attention vector over the columns of ``F`` (length ``F.shape[1]``)."""
    F = as_matrix(F, "features")
    if F.shape[0] != params.W.shape[1]:
        raise DimensionError(
            f"features have {F.shape[0]} rows but W expects {params.W.shape[1]}")
    hidden = activate(params.activation, params.W @ F, params.alpha)
    return softmax((params.u @ hidden)[0])


def attend(F, V) -> np.ndarray:
    """Scale column ``g`` of ``F`` by ``V[g]``."""
    return scale_columns(as_matrix(F, "features"), V)


def attention_bank(channels, F) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Run the three channels over ``F``; returns (vectors, attended matrices)."""
    if len(channels) != 3:
        raise DimensionError(f"expected 3 attention channels, got {len(channels)}")
    vectors = [channel_attention(c, F) for c in channels]
    return vectors, [attend(F, v) for v in vectors]
