"""MCSF v1 binary feature files.

Layout (little-endian)::

    0   4s  magic b"MCSF"
    4   u32 version (1)
    8   u32 s
    12  u32 t
    16  u32 G
    20  u32 label
    24  u8  trimmed flag (0/1)
    25  f32 spatial  s x G,     row-major
        f32 temporal t x (G-1), row-major
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..attention import FeatureSample
from ..errors import FormatError

MAGIC = b"MCSF"
VERSION = 1
_HEADER = struct.Struct("<4s5IB")
HEADER_SIZE = _HEADER.size  # 25


def payload_size(s: int, t: int, G: int) -> int:
    return 4 * (s * G + t * (G - 1))


def encode_feature(sample: FeatureSample) -> bytes:
    s, t, G = sample.dims
    header = _HEADER.pack(MAGIC, VERSION, s, t, G, sample.label, int(sample.trimmed))
    return (header
            + np.ascontiguousarray(sample.spatial, dtype="<f4").tobytes()
            + np.ascontiguousarray(sample.temporal, dtype="<f4").tobytes())


def decode_header(data: bytes) -> dict:
    if len(data) < HEADER_SIZE:
        raise FormatError(f"truncated header: {len(data)} of {HEADER_SIZE} bytes", len(data))
    magic, version, s, t, G, label, trimmed = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    for offset, name, value in ((8, "s", s), (12, "t", t)):
        if value < 1:
            raise FormatError(f"{name} must be positive", offset)
    if G < 2:
        raise FormatError("G must be at least 2", 16)
    if trimmed not in (0, 1):
        raise FormatError(f"trimmed flag must be 0 or 1, got {trimmed}", 24)
    return {"s": s, "t": t, "G": G, "label": label, "trimmed": bool(trimmed)}


def decode_feature(data: bytes, video_id: str = "") -> FeatureSample:
    head = decode_header(data)
    s, t, G = head["s"], head["t"], head["G"]
    end = HEADER_SIZE + payload_size(s, t, G)
    if len(data) < end:
        raise FormatError(f"truncated payload: expected {end} bytes, got {len(data)}", len(data))
    if len(data) > end:
        raise FormatError(f"{len(data) - end} trailing bytes", end)
    values = np.frombuffer(data, dtype="<f4", offset=HEADER_SIZE).astype(np.float64)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise FormatError("non-finite feature value", HEADER_SIZE + 4 * int(bad[0]))
    spatial = values[: s * G].reshape(s, G)
    temporal = values[s * G:].reshape(t, G - 1)
    return FeatureSample(spatial, temporal, head["label"], head["trimmed"], video_id)


def write_feature(path, sample: FeatureSample) -> None:
    Path(path).write_bytes(encode_feature(sample))


def read_feature(path, video_id: str | None = None) -> FeatureSample:
    path = Path(path)
    return decode_feature(path.read_bytes(), path.stem if video_id is None else video_id)


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        return decode_header(fh.read(HEADER_SIZE))
