"""Binary embedding caches, one file per cue.

Layout, little-endian::

    b"CUEV" | uint16 len | cue_name | uint32 dim | uint32 count
    count x (uint16 len, instance_id, dim float32)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..corpus import atomic_write_bytes

MAGIC = b"CUEV"


class CacheFormatError(ValueError):
    pass


@dataclass
class EmbeddingTable:
    cue_name: str
    instance_ids: list[str]
    values: np.ndarray  # count x dim, float32

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def rows(self, instance_ids: Sequence[str]) -> np.ndarray:
        """Vectors for ``instance_ids`` in the requested order."""
        index = {iid: i for i, iid in enumerate(self.instance_ids)}
        try:
            return self.values[[index[iid] for iid in instance_ids]]
        except KeyError as exc:
            raise KeyError(f"cue {self.cue_name!r} has no embedding for {exc.args[0]!r}") from None


def dump_cache(table: EmbeddingTable) -> bytes:
    values = np.ascontiguousarray(table.values, dtype="<f4")
    count, dim = values.shape
    if count != len(table.instance_ids):
        raise ValueError("instance ids and values disagree in length")
    name = table.cue_name.encode("utf-8")
    parts = [MAGIC, struct.pack("<H", len(name)), name, struct.pack("<II", dim, count)]
    for iid, row in zip(table.instance_ids, values):
        raw = iid.encode("utf-8")
        parts += [struct.pack("<H", len(raw)), raw, row.tobytes()]
    return b"".join(parts)


def parse_cache(data: bytes) -> EmbeddingTable:
    if data[:4] != MAGIC:
        raise CacheFormatError("bad magic in embedding cache")
    try:
        (n,) = struct.unpack_from("<H", data, 4)
        pos = 6
        cue = data[pos:pos + n].decode("utf-8")
        pos += n
        dim, count = struct.unpack_from("<II", data, pos)
        pos += 8
        ids = []
        values = np.empty((count, dim), dtype=np.float32)
        for i in range(count):
            (n,) = struct.unpack_from("<H", data, pos)
            pos += 2
            ids.append(data[pos:pos + n].decode("utf-8"))
            pos += n
            values[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=pos)
            pos += 4 * dim
    except (struct.error, ValueError) as exc:
        raise CacheFormatError(f"truncated embedding cache: {exc}") from None
    if pos != len(data):
        raise CacheFormatError("trailing bytes in embedding cache")
    return EmbeddingTable(cue, ids, values)


def write_cache(path, table: EmbeddingTable) -> None:
    atomic_write_bytes(path, dump_cache(table))


def read_cache(path) -> EmbeddingTable:
    return parse_cache(Path(path).read_bytes())
