"""Seen/unseen train/test split planning for the TD, G and TD+G protocols.

Three class groups take part: trimmed classes (always fully in training as
seen data), untrimmed "seen" classes and untrimmed "unseen" classes. Each
untrimmed group is split per class by a train fraction; counts are
``floor(fraction * n)`` for training, the remainder for testing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import ProtocolError
from .manifest import DatasetManifest, SampleRecord

MODES = ("td", "g", "td+g")
BUCKETS = ("trimmed_train_seen", "untrimmed_train_seen", "untrimmed_train_unseen",
           "untrimmed_test_seen", "untrimmed_test_unseen")
TRAIN_BUCKETS = BUCKETS[:3]
TEST_BUCKETS = BUCKETS[3:]

# mode -> (train fraction for untrimmed seen classes, for untrimmed unseen classes)
_TRAIN_FRACTIONS = {
    "td": (Fraction(1), Fraction(1, 5)),
    "g": (Fraction(4, 5), Fraction(0)),
    "td+g": (Fraction(4, 5), Fraction(1, 5)),
}


@dataclass(frozen=True)
class Bucket:
    classes: tuple[str, ...]
    fraction: Fraction
    trimmed: bool = False


@dataclass(frozen=True)
class SplitPlan:
    mode: str
    buckets: dict[str, Bucket]
    seed: int

    def counts(self, per_class: int) -> dict[str, dict[str, int]]:
        """Per-bucket class and sample counts for ``per_class`` samples in every class."""
        out = {}
        for name, b in self.buckets.items():
            n = _train_count(b, per_class) if name in TRAIN_BUCKETS else per_class - _train_count(
                self.buckets[_partner(name)], per_class)
            n = n if b.classes else 0
            out[name] = {"classes": len(b.classes), "per_class": n, "total": n * len(b.classes)}
        return out


def _partner(test_bucket: str) -> str:
    return test_bucket.replace("test", "train")


def _train_count(bucket: Bucket, n: int) -> int:
    return math.floor(bucket.fraction * n)


def plan_split(classes_trimmed, classes_seen, classes_unseen, mode: str = "td+g",
               seed: int = 0) -> SplitPlan:
    """Plan a split. ``classes_seen``/``classes_unseen`` are the untrimmed groups."""
    mode = mode.lower()
    if mode not in MODES:
        raise ProtocolError(f"unknown mode {mode!r}; expected one of {MODES}")
    groups = [tuple(classes_trimmed), tuple(classes_seen), tuple(classes_unseen)]
    flat = [c for g in groups for c in g]
    if len(set(flat)) != len(flat):
        dup = sorted({c for c in flat if flat.count(c) > 1})
        raise ProtocolError(f"class lists overlap or repeat: {dup}")
    seen_frac, unseen_frac = _TRAIN_FRACTIONS[mode]
    trimmed, seen, unseen = groups
    buckets = {
        "trimmed_train_seen": Bucket(trimmed, Fraction(1), trimmed=True),
        "untrimmed_train_seen": Bucket(seen, seen_frac),
        "untrimmed_train_unseen": Bucket(unseen, unseen_frac),
        "untrimmed_test_seen": Bucket(seen, 1 - seen_frac),
        "untrimmed_test_unseen": Bucket(unseen, 1 - unseen_frac),
    }
    return SplitPlan(mode, buckets, seed)


def materialize_buckets(plan: SplitPlan, manifest: DatasetManifest) -> dict[str, list[SampleRecord]]:
    rng = np.random.default_rng(plan.seed)
    out = {name: [] for name in BUCKETS}
    by_class: dict[tuple[int, bool], list[SampleRecord]] = {}
    for r in manifest.records:
        by_class.setdefault((r.label, r.trimmed), []).append(r)

    def records_for(name: str, trimmed: bool) -> list[SampleRecord]:
        if name not in manifest.classes:
            raise ProtocolError(f"class {name!r} is not in the manifest")
        recs = by_class.get((manifest.class_index(name), trimmed), [])
        if not recs:
            kind = "trimmed" if trimmed else "untrimmed"
            raise ProtocolError(f"manifest has no {kind} samples for class {name!r}")
        return sorted(recs, key=lambda r: r.video_id)

    for name in plan.buckets["trimmed_train_seen"].classes:
        out["trimmed_train_seen"].extend(records_for(name, True))
    for train_name in ("untrimmed_train_seen", "untrimmed_train_unseen"):
        bucket = plan.buckets[train_name]
        for name in bucket.classes:
            recs = records_for(name, False)
            order = rng.permutation(len(recs))
            n_train = _train_count(bucket, len(recs))
            out[train_name].extend(recs[i] for i in order[:n_train])
            out[train_name.replace("train", "test")].extend(recs[i] for i in order[n_train:])
    return out


def materialize_split(plan: SplitPlan, manifest: DatasetManifest
                      ) -> tuple[list[SampleRecord], list[SampleRecord]]:
    """Disjoint (train, test) record lists realising ``plan`` on ``manifest``."""
    buckets = materialize_buckets(plan, manifest)
    train = [r for b in TRAIN_BUCKETS for r in buckets[b]]
    test = [r for b in TEST_BUCKETS for r in buckets[b]]
    return train, test


def protocol_class_names(n_trimmed: int = 30, n_seen: int = 20, n_unseen: int = 51):
    """Placeholder identifiers reproducing the 30/20/51 class-group sizes."""
    return ([f"trimmed_{i:02d}" for i in range(n_trimmed)],
            [f"seen_{i:02d}" for i in range(n_seen)],
            [f"unseen_{i:02d}" for i in range(n_unseen)])
