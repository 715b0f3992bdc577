"""Feature kinds and the FEA1 binary feature-file format.

Layout (little-endian): ``b"FEA1"``, u8 kind code, u32 frames, u32 dims,
then frames*dims float32 in row-major order.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .._fileio import atomic_write_bytes
from ..errors import FormatError

MAGIC = b"FEA1"
_HEADER = struct.Struct("<4sBII")


class FeatureKind(enum.IntEnum):
    MFCC = 0
    IMFCC = 1
    LFCC = 2
    RFCC = 3
    CQCC = 4
    LPCC = 5
    SPEC_AMP = 6
    SPEC_PHASE = 7
    SCFC = 8
    SCMC = 9
    CCC = 10

    @classmethod
    def parse(cls, name: str) -> "FeatureKind":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown feature kind {name!r}") from None


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    kind: FeatureKind

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def encode_features(fm: FeatureMatrix) -> bytes:
    values = np.ascontiguousarray(fm.values, dtype="<f4")
    T, n = values.shape
    return _HEADER.pack(MAGIC, int(fm.kind), T, n) + values.tobytes()


def decode_features(data: bytes) -> FeatureMatrix:
    if len(data) < _HEADER.size:
        raise FormatError("feature file truncated before header end")
    magic, code, T, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"bad feature-file magic {magic!r}")
    try:
        kind = FeatureKind(code)
    except ValueError:
        raise FormatError(f"unknown feature kind code {code}") from None
    body = data[_HEADER.size :]
    if len(body) != 4 * T * n:
        raise FormatError(f"feature payload has {len(body)} bytes, header implies {4 * T * n}")
    values = np.frombuffer(body, dtype="<f4").reshape(T, n).astype(np.float64)
    return FeatureMatrix(values, kind)


def write_features(path, fm: FeatureMatrix) -> None:
    atomic_write_bytes(path, encode_features(fm))


def read_features(path) -> FeatureMatrix:
    return decode_features(Path(path).read_bytes())
