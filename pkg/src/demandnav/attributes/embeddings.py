"""Embedding tables and the EMB1 binary format.

EMB1 layout, little-endian:

    magic   4 bytes  b"EMB1"
    count   u32
    dim     u32
    entry   u16 key length, UTF-8 key bytes, dim * f32 vector
    (repeated count times)

Vectors are stored as f32; tables keep float64 in memory for numerical
work. Writing and re-reading a table reproduces the f32 payload bit for
bit.

Key conventions used by the synthetic generator and the agents:

    cat:<category>                 raw object feature
    instr:<task>:basic|pref        raw instruction feature per demand part
    attr:cat:<category>:<j>        ground-truth object attribute j
    attr:instr:<task>:basic|pref:<i>   ground-truth instruction attribute i

The attr:instr:* entries double as the precomputed language branch: they
hold the embeddings of attribute phrasings produced offline.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"EMB1"
HEADER = struct.Struct("<4sII")
KEYLEN = struct.Struct("<H")


class EmbeddingFormatError(ValueError):
    """Raised on malformed EMB1 files or inconsistent tables."""


@dataclass
class EmbeddingTable:
    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)
    provenance: str = "synthetic"  # "synthetic" | "exported"

    def add(self, key: str, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise EmbeddingFormatError(
                f"vector for {key!r} has shape {vec.shape}, expected ({self.dim},)"
            )
        if key in self.entries:
            raise EmbeddingFormatError(f"duplicate key {key!r}")
        self.entries[key] = vec

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, key: str) -> np.ndarray:
        if key not in self.entries:
            raise KeyError(f"embedding key {key!r} not in table")
        return self.entries[key]

    def rows(self, keys: list[str]) -> np.ndarray:
        return np.stack([self.get(k) for k in keys])


def category_key(category: str) -> str:
    return f"cat:{category}"


def instruction_key(task_id: str, part: str) -> str:
    if part not in ("basic", "pref"):
        raise ValueError("part must be 'basic' or 'pref'")
    return f"instr:{task_id}:{part}"


def object_attr_key(category: str, j: int) -> str:
    return f"attr:cat:{category}:{j}"


def instruction_attr_key(task_id: str, part: str, i: int) -> str:
    if part not in ("basic", "pref"):
        raise ValueError("part must be 'basic' or 'pref'")
    return f"attr:instr:{task_id}:{part}:{i}"


def save_embeddings(table: EmbeddingTable, path: str) -> None:
    """Write the table in EMB1 format (vectors cast to f32)."""
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, len(table.entries), table.dim))
        for key, vec in table.entries.items():
            kb = key.encode("utf-8")
            if len(kb) > 0xFFFF:
                raise EmbeddingFormatError(f"key too long: {key[:40]!r}...")
            fh.write(KEYLEN.pack(len(kb)))
            fh.write(kb)
            fh.write(np.asarray(vec, dtype="<f4").tobytes())


def load_embeddings(path: str, provenance: str = "exported") -> EmbeddingTable:
    """Read an EMB1 file, validating magic, sizes and key uniqueness."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < HEADER.size:
        raise EmbeddingFormatError("file too short for an EMB1 header")
    magic, count, dim = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise EmbeddingFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    table = EmbeddingTable(dim=dim, provenance=provenance)
    off = HEADER.size
    vec_bytes = dim * 4
    for i in range(count):
        if off + KEYLEN.size > len(data):
            raise EmbeddingFormatError(f"truncated entry {i}: missing key length")
        (klen,) = KEYLEN.unpack_from(data, off)
        off += KEYLEN.size
        if off + klen + vec_bytes > len(data):
            raise EmbeddingFormatError(f"truncated entry {i}")
        key = data[off : off + klen].decode("utf-8")
        off += klen
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=off).astype(np.float64)
        off += vec_bytes
        if key in table.entries:
            raise EmbeddingFormatError(f"duplicate key {key!r} in file")
        table.entries[key] = vec
    if off != len(data):
        raise EmbeddingFormatError(f"{len(data) - off} trailing bytes after {count} entries")
    return table


def emb1_size(keys: list[str], dim: int) -> int:
    """Exact file size in bytes for the given keys and dimension."""
    return HEADER.size + sum(KEYLEN.size + len(k.encode("utf-8")) + dim * 4 for k in keys)
