"""Synthetic stand-in for pre-extracted two-stream video features.

Every class owns a unit spatial prototype and a unit temporal prototype.
A signal frame is ``snr * prototype + N(0, I)``; a background frame is pure
``N(0, I)``. Untrimmed videos carry the signal only in one contiguous run
of ``ceil(rho * G)`` frames at a random offset.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..attention import FeatureSample
from ..errors import ConfigError
from .features import write_feature
from .manifest import DatasetManifest, SampleRecord, save_manifest


@dataclass(frozen=True)
class SynthSpec:
    k: int = 5
    videos_per_class: int = 50
    s: int = 32
    t: int = 32
    G: int = 16
    snr: float = 2.0
    rho: float = 1.0
    seed: int = 0
    prototype_seed: int | None = None  # share prototypes across datasets; defaults to seed
    prefix: str = ""

    def __post_init__(self):
        if self.k < 2 or self.videos_per_class < 1:
            raise ConfigError("need k >= 2 classes and at least one video per class")
        if min(self.s, self.t) < 1 or self.G < 2:
            raise ConfigError("need s, t >= 1 and G >= 2")
        if not 0.0 < self.rho <= 1.0:
            raise ConfigError(f"rho must be in (0, 1], got {self.rho}")
        if self.snr < 0:
            raise ConfigError("snr must be non-negative")

    @property
    def trimmed(self) -> bool:
        return self.rho == 1.0

    @property
    def segment_length(self) -> int:
        return math.ceil(round(self.rho * self.G, 9))


def _prototypes(rng: np.random.Generator, dim: int, k: int) -> np.ndarray:
    """``k`` unit rows; orthonormal when ``k <= dim``."""
    raw = rng.standard_normal((dim, k))
    if k <= dim:
        q, r = np.linalg.qr(raw)
        return (q * np.sign(np.diag(r))).T
    return (raw / np.linalg.norm(raw, axis=0)).T


def prototypes(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    seed = spec.seed if spec.prototype_seed is None else spec.prototype_seed
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    return _prototypes(rng, spec.s, spec.k), _prototypes(rng, spec.t, spec.k)


def synth_samples(spec: SynthSpec) -> list[FeatureSample]:
    """Generate the dataset in memory, class-major order."""
    p_spatial, p_temporal = prototypes(spec)
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1]))
    G, L = spec.G, spec.segment_length
    kind = "trim" if spec.trimmed else "untrim"
    out = []
    for c in range(spec.k):
        for v in range(spec.videos_per_class):
            offset = int(rng.integers(0, G - L + 1))
            spatial = rng.standard_normal((spec.s, G))
            temporal = rng.standard_normal((spec.t, G - 1))
            spatial[:, offset:offset + L] += spec.snr * p_spatial[c][:, None]
            # motion step n spans frames n -> n+1; it is signal when frame n is
            temporal[:, offset:min(offset + L, G - 1)] += spec.snr * p_temporal[c][:, None]
            out.append(FeatureSample(spatial, temporal, c, spec.trimmed,
                                     f"{spec.prefix}{kind}_c{c:03d}_v{v:04d}", (offset, L)))
    return out


def generate_synthetic(spec: SynthSpec, out_dir, class_names=None) -> DatasetManifest:
    """Write feature files plus ``manifest.json`` under ``out_dir``."""
    out_dir = Path(out_dir)
    (out_dir / "features").mkdir(parents=True, exist_ok=True)
    names = list(class_names) if class_names is not None else [f"class_{c:03d}" for c in range(spec.k)]
    if len(names) != spec.k:
        raise ConfigError(f"{len(names)} class names for k={spec.k}")
    records = []
    for sample in synth_samples(spec):
        rel = f"features/{sample.video_id}.mcsf"
        write_feature(out_dir / rel, sample)
        records.append(SampleRecord(rel, sample.label, sample.trimmed, sample.video_id,
                                    sample.signal_segment))
    manifest = DatasetManifest(names, (spec.s, spec.t, spec.G), records, out_dir)
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest


def uniform_frame_indices(n_frames: int, G: int) -> np.ndarray:
    """``G`` evenly spaced frame indices for reducing a longer clip before featurisation."""
    if n_frames < G:
        raise ConfigError(f"clip has {n_frames} frames, need at least {G}")
    return np.round(np.linspace(0, n_frames - 1, G)).astype(np.int64)
