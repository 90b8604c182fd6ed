"""Writers for the probe toolkit's on-disk formats.

These are deliberately independent of the probe package itself: the two
components only meet at the files.  Three formats are produced here.

embeddings.bin
    4-byte magic ``EMB1``, little-endian uint32 vocab_size and dim, then
    vocab_size*dim float32 values row-major.

vocab.tsv
    ``id<TAB>surface<TAB>lemma<TAB>frequency``, one row per line, with
    backslash, tab, and newline inside surface or lemma escaped as
    ``\\\\``, ``\\t``, ``\\n``.

tags.tsv
    ``token_id<TAB>feature<TAB>label:prob,label:prob,...`` with probs
    printed at full precision (%.17g), rows sorted by id then feature.
"""

from __future__ import annotations

import re
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ExtractionError

MAGIC = b"EMB1"
_HEADER = struct.Struct("<4sII")


def write_embeddings(path: str | Path, rows: np.ndarray) -> None:
    """Write a 2-D float matrix as an embeddings.bin file."""
    rows = np.ascontiguousarray(rows, dtype="<f4")
    if rows.ndim != 2:
        raise ExtractionError(f"embedding matrix must be 2-D, got shape {rows.shape}")
    if rows.shape[0] < 1 or rows.shape[1] < 1:
        raise ExtractionError(f"embedding matrix needs positive shape, got {rows.shape}")
    if not np.all(np.isfinite(rows)):
        bad = int(np.flatnonzero(~np.isfinite(rows))[0])
        raise ExtractionError(
            f"non-finite value at row {bad // rows.shape[1]}, col {bad % rows.shape[1]}"
        )
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows.shape[0], rows.shape[1]))
        fh.write(rows.tobytes())


def escape_field(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


_UNESCAPE = {"t": "\t", "n": "\n", "\\": "\\"}


def unescape_field(text: str, where: str) -> str:
    def sub(match: re.Match[str]) -> str:
        key = match.group(1)
        if key not in _UNESCAPE:
            raise ExtractionError(f"{where}: unknown escape \\{key}")
        return _UNESCAPE[key]

    return re.sub(r"\\(.)", sub, text)


def write_vocab(path: str | Path, entries: Iterable[tuple[int, str, str, int]]) -> None:
    """Write (id, surface, lemma, frequency) rows as a vocab.tsv file."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for token_id, surface, lemma, frequency in entries:
            fh.write(
                f"{token_id}\t{escape_field(surface)}\t{escape_field(lemma)}\t{frequency}\n"
            )


def read_vocab(path: str | Path) -> list[tuple[int, str, str, int]]:
    """Parse a vocab.tsv file back into (id, surface, lemma, frequency) rows."""
    path = Path(path)
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise ExtractionError(
                    f"{path}:{lineno}: expected 4 columns, got {len(cols)}"
                )
            where = f"{path}:{lineno}"
            try:
                token_id = int(cols[0])
                frequency = int(cols[3])
            except ValueError as exc:
                raise ExtractionError(f"{where}: {exc}") from None
            rows.append(
                (
                    token_id,
                    unescape_field(cols[1], where),
                    unescape_field(cols[2], where),
                    frequency,
                )
            )
    return rows


def write_tags(
    path: str | Path,
    rows: Iterable[tuple[int, str, Sequence[tuple[str, float]]]],
) -> None:
    """Write (token_id, feature, [(label, prob), ...]) rows as a tags.tsv file."""
    ordered = sorted(rows, key=lambda row: (row[0], row[1]))
    with open(path, "w", encoding="utf-8") as fh:
        for token_id, feature, cells in ordered:
            cell = ",".join(f"{label}:{prob:.17g}" for label, prob in cells)
            fh.write(f"{token_id}\t{feature}\t{cell}\n")
