"""Binary gallery-model files.

Layout, little-endian::

    b"OVRM" | uint32 K | uint32 D
    K x (uint16 length, UTF-8 identity)
    K*D float64 weights (row-major) | K float64 biases
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..corpus import atomic_write_bytes
from .svm import GalleryModel

MAGIC = b"OVRM"


class ModelFormatError(ValueError):
    pass


def dump_model(model: GalleryModel) -> bytes:
    K, D = model.weights.shape
    parts = [MAGIC, struct.pack("<II", K, D)]
    for ident in model.identities:
        raw = str(ident).encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw)
    parts.append(model.weights.astype("<f8").tobytes(order="C"))
    parts.append(model.biases.astype("<f8").tobytes())
    return b"".join(parts)


def parse_model(data: bytes) -> GalleryModel:
    if data[:4] != MAGIC:
        raise ModelFormatError("bad magic in model file")
    try:
        K, D = struct.unpack_from("<II", data, 4)
        pos = 12
        identities = []
        for _ in range(K):
            (n,) = struct.unpack_from("<H", data, pos)
            pos += 2
            identities.append(data[pos:pos + n].decode("utf-8"))
            pos += n
        weights = np.frombuffer(data, dtype="<f8", count=K * D, offset=pos).reshape(K, D)
        pos += 8 * K * D
        biases = np.frombuffer(data, dtype="<f8", count=K, offset=pos)
        pos += 8 * K
    except (struct.error, ValueError) as exc:
        raise ModelFormatError(f"truncated model file: {exc}") from None
    if pos != len(data):
        raise ModelFormatError("trailing bytes in model file")
    return GalleryModel(tuple(identities), weights.astype(np.float64), biases.astype(np.float64))


def save_model(path, model: GalleryModel) -> None:
    atomic_write_bytes(path, dump_model(model))


def load_model(path) -> GalleryModel:
    return parse_model(Path(path).read_bytes())
