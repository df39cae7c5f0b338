"""Binary field snapshots (``.lmf``).

Layout, all little-endian:

======  ======  ==========================================
offset  type    field
======  ======  ==========================================
0       4s      magic ``LMF1``
4       u32     format version (1)
8       u32     n
12      f64     box length L
20      f64     kappa
28      f64     time
36      u8      model tag (0 linear, 1 mod1, 2 mod2)
37      u8      pressure tag (0 none, 1 quadratic, 2 linear)
38      2x      reserved, zero
40      f64[]   payload: 3 n^3 values, component-major, x fastest
======  ======  ==========================================

A zero field at n = 8 therefore occupies 40 + 3 * 512 * 8 = 12328 bytes.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .models import ModelKind, PressureLaw, Variant

MAGIC = b"LMF1"
VERSION = 1
HEADER = struct.Struct("<4sIIdddBB2x")

_MODEL_TAGS = {None: 0, Variant.MOD1: 1, Variant.MOD2: 2}
_PRESSURE_TAGS = {None: 0, PressureLaw.QUADRATIC: 1, PressureLaw.LINEAR: 2}


class SnapshotError(ValueError):
    """Malformed or inconsistent snapshot file."""


@dataclass(frozen=True)
class SnapshotMeta:
    n: int
    box_length: float
    kappa: float
    time: float
    model_tag: int = 0
    pressure_tag: int = 0
    version: int = VERSION

    @classmethod
    def for_model(cls, n: int, box_length: float, kappa: float, time: float,
                  model: ModelKind | None) -> "SnapshotMeta":
        if model is None:
            return cls(n, box_length, kappa, time)
        return cls(n, box_length, kappa, time, _MODEL_TAGS[model.variant], _PRESSURE_TAGS[model.pressure_law])

    @property
    def model(self) -> ModelKind | None:
        variant = {v: k for k, v in _MODEL_TAGS.items()}[self.model_tag]
        if variant is None:
            return None
        law = {v: k for k, v in _PRESSURE_TAGS.items()}[self.pressure_tag]
        return ModelKind(variant, law)


def snapshot_size(n: int) -> int:
    return HEADER.size + 3 * n**3 * 8


def encode_snapshot(field: np.ndarray, meta: SnapshotMeta) -> bytes:
    field = np.asarray(field)
    n = meta.n
    if field.shape != (3, n, n, n):
        raise SnapshotError(f"field shape {field.shape} does not match n = {n}")
    if meta.model_tag not in _MODEL_TAGS.values() or meta.pressure_tag not in _PRESSURE_TAGS.values():
        raise SnapshotError(f"unknown model/pressure tag {meta.model_tag}/{meta.pressure_tag}")
    header = HEADER.pack(MAGIC, VERSION, n, meta.box_length, meta.kappa, meta.time,
                         meta.model_tag, meta.pressure_tag)
    # x fastest: Fortran order within each component
    payload = np.asarray(field, dtype="<f8").transpose(0, 3, 2, 1).tobytes(order="C")
    return header + payload


def decode_snapshot(data: bytes) -> tuple[np.ndarray, SnapshotMeta]:
    if len(data) < HEADER.size:
        raise SnapshotError(f"truncated header: {len(data)} of {HEADER.size} bytes")
    magic, version, n, box, kappa, time, mtag, ptag = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"magic mismatch: expected {MAGIC!r}, found {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"unsupported version {version} (expected {VERSION})")
    if n < 8 or n % 2:
        raise SnapshotError(f"header n = {n} is invalid")
    if mtag not in _MODEL_TAGS.values() or ptag not in _PRESSURE_TAGS.values():
        raise SnapshotError(f"unknown model/pressure tag {mtag}/{ptag}")
    expected = snapshot_size(n)
    if len(data) < expected:
        raise SnapshotError(f"truncated payload: {len(data)} of {expected} bytes")
    if len(data) > expected:
        raise SnapshotError(f"payload longer than n = {n} implies ({len(data)} > {expected} bytes)")
    flat = np.frombuffer(data, dtype="<f8", offset=HEADER.size)
    field = flat.reshape(3, n, n, n).transpose(0, 3, 2, 1).astype(np.float64)
    return np.ascontiguousarray(field), SnapshotMeta(n, box, kappa, time, mtag, ptag, version)


def write_snapshot(field: np.ndarray, meta: SnapshotMeta, path: str | os.PathLike) -> None:
    Path(path).write_bytes(encode_snapshot(field, meta))


def read_snapshot(path: str | os.PathLike) -> tuple[np.ndarray, SnapshotMeta]:
    return decode_snapshot(Path(path).read_bytes())
