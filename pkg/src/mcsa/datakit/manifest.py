"""JSON dataset manifests.

Schema::

    {"classes": [name, ...],
     "dims": {"s": int, "t": int, "G": int},
     "samples": [{"path": str, "label": int, "trimmed": bool,
                  "video_id": str, "signal_segment": [start, length]?}, ...]}

Paths are relative to the manifest's directory.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..attention import FeatureSample
from ..errors import FormatError
from .features import read_feature, read_header


@dataclass(frozen=True)
class SampleRecord:
    path: str
    label: int
    trimmed: bool
    video_id: str
    signal_segment: tuple[int, int] | None = None

    def to_json(self) -> dict:
        out = {"path": self.path, "label": self.label, "trimmed": self.trimmed,
               "video_id": self.video_id}
        if self.signal_segment is not None:
            out["signal_segment"] = list(self.signal_segment)
        return out


@dataclass
class DatasetManifest:
    classes: list[str]
    dims: tuple[int, int, int]
    records: list[SampleRecord] = field(default_factory=list)
    root: Path = Path(".")

    @property
    def k(self) -> int:
        return len(self.classes)

    def class_index(self, name: str) -> int:
        return self.classes.index(name)

    def to_json(self) -> dict:
        s, t, G = self.dims
        return {"classes": list(self.classes), "dims": {"s": s, "t": t, "G": G},
                "samples": [r.to_json() for r in self.records]}

    def load_sample(self, record: SampleRecord) -> FeatureSample:
        sample = read_feature(self.root / record.path, record.video_id)
        if sample.dims != self.dims:
            raise FormatError(f"{record.path}: dims {sample.dims} differ from manifest {self.dims}")
        if sample.label != record.label:
            raise FormatError(f"{record.path}: file label {sample.label} != manifest {record.label}")
        return replace(sample, trimmed=record.trimmed, signal_segment=record.signal_segment)

    def load_samples(self, records=None) -> list[FeatureSample]:
        return [self.load_sample(r) for r in (self.records if records is None else records)]


def save_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    path.write_text(json.dumps(manifest.to_json(), indent=1))


def load_manifest(path, verify: bool = True) -> DatasetManifest:
    """Parse a manifest; with ``verify`` every file must exist and match the header dims."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
        classes = [str(c) for c in doc["classes"]]
        d = doc["dims"]
        dims = (int(d["s"]), int(d["t"]), int(d["G"]))
        records = []
        for entry in doc["samples"]:
            seg = entry.get("signal_segment")
            records.append(SampleRecord(str(entry["path"]), int(entry["label"]),
                                        bool(entry["trimmed"]), str(entry["video_id"]),
                                        None if seg is None else (int(seg[0]), int(seg[1]))))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed manifest ({exc})") from exc
    manifest = DatasetManifest(classes, dims, records, path.parent)
    for r in records:
        if not 0 <= r.label < len(classes):
            raise FormatError(f"{r.path}: label {r.label} outside [0, {len(classes)})")
    if verify:
        for r in records:
            fpath = manifest.root / r.path
            if not fpath.exists():
                raise FormatError(f"missing feature file {fpath}")
            head = read_header(fpath)
            if (head["s"], head["t"], head["G"]) != dims:
                raise FormatError(f"{r.path}: header dims do not match manifest {dims}")
    return manifest
