"""Embedding tables and their on-disk format.

Layout of an embeddings file, all little-endian:

    bytes 0..3    magic ``EMB1``
    bytes 4..7    uint32 vocab size
    bytes 8..11   uint32 dimension
    bytes 12..    vocab_size * dim float32 values, row-major

Row index equals token id everywhere in this package.  Control tables are
drawn i.i.d. from N(0, 1/dim) so a row's expected L2 norm is 1 regardless
of dimension, mirroring the scale of trained embedding matrices.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadMagic, NonFiniteValue, TruncatedFile, ZeroSize

MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sII")


@dataclass
class EmbeddingTable:
    """A frozen (vocab_size, dim) float32 matrix plus provenance."""

    rows: np.ndarray
    source_name: str = ""
    is_control: bool = False

    def __post_init__(self) -> None:
        rows = np.ascontiguousarray(self.rows, dtype=np.float32)
        if rows.ndim != 2:
            raise ValueError(f"embedding rows must be 2-D, got shape {rows.shape}")
        if rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ZeroSize(f"embedding table needs positive shape, got {rows.shape}")
        if not np.all(np.isfinite(rows)):
            bad = int(np.flatnonzero(~np.isfinite(rows))[0])
            raise NonFiniteValue(
                f"non-finite value at row {bad // rows.shape[1]}, col {bad % rows.shape[1]}"
            )
        rows.flags.writeable = False
        self.rows = rows

    @property
    def vocab_size(self) -> int:
        return int(self.rows.shape[0])

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])

    def row(self, token_id: int) -> np.ndarray:
        return self.rows[token_id]


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    """Write the table in the EMB1 binary layout."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, table.vocab_size, table.dim))
        fh.write(np.ascontiguousarray(table.rows, dtype="<f4").tobytes())


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read an EMB1 file, verifying magic, length, and finiteness.

    Raises BadMagic / TruncatedFile / NonFiniteValue; every message names
    the byte offset of the problem so corrupt exports are easy to triage.
    """
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagic(f"{path}: expected magic {MAGIC!r} at offset 0, got {blob[:4]!r}")
    if len(blob) < _HEADER.size:
        raise TruncatedFile(
            f"{path}: header needs {_HEADER.size} bytes, file has {len(blob)}"
        )
    _, vocab_size, dim = _HEADER.unpack_from(blob, 0)
    if vocab_size < 1 or dim < 1:
        raise ZeroSize(f"{path}: header declares shape ({vocab_size}, {dim})")
    expected = _HEADER.size + 4 * vocab_size * dim
    if len(blob) < expected:
        raise TruncatedFile(
            f"{path}: expected {expected} bytes for {vocab_size}x{dim} payload, "
            f"file has {len(blob)} (truncated at offset {len(blob)})"
        )
    flat = np.frombuffer(blob, dtype="<f4", count=vocab_size * dim, offset=_HEADER.size)
    finite = np.isfinite(flat)
    if not finite.all():
        idx = int(np.flatnonzero(~finite)[0])
        raise NonFiniteValue(
            f"{path}: non-finite float at byte offset {_HEADER.size + 4 * idx}"
        )
    rows = flat.reshape(vocab_size, dim).copy()
    return EmbeddingTable(rows, source_name=path.name)


def make_control(vocab_size: int, dim: int, seed: int) -> EmbeddingTable:
    """Random control table: i.i.d. N(0, 1/dim), deterministic per seed."""
    if vocab_size < 1 or dim < 1:
        raise ZeroSize(f"control table needs positive shape, got ({vocab_size}, {dim})")
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((vocab_size, dim), dtype=np.float32)
    rows *= np.float32(1.0 / math.sqrt(dim))
    return EmbeddingTable(rows, source_name=f"control(seed={seed})", is_control=True)
