"""Export embedding matrices and vocabularies into the probe file formats.

extract_plm reads a transformer checkpoint (local directory or hub id)
and writes embeddings.bin + vocab.tsv + manifest.json such that row i of
the binary file is the model's input embedding for token id i and the
vocab surfaces keep their marker characters.  extract_glove does the
same for word-vector files published as flat text.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import numpy as np

from .checkpoint import find_embedding_matrix, read_vocab_surfaces
from .errors import ModelUnavailable, VocabMismatch
from .formats import write_embeddings, write_vocab
from .lemmas import Lemmatizer, default_lemmatizer
from .manifest import ExtractionManifest, infer_case, infer_marker, sha256_file

_HUB_PATTERNS = [
    "*.safetensors",
    "*.safetensors.index.json",
    "vocab.json",
    "vocab.txt",
    "tokenizer.json",
    "added_tokens.json",
    "config.json",
]


def _resolve_model_dir(model_id: str) -> Path:
    local = Path(model_id)
    if local.is_dir():
        return local
    try:
        from huggingface_hub import snapshot_download
    except ImportError:
        raise ModelUnavailable(
            f"{model_id}: not a local directory and huggingface_hub is not "
            "installed (pip install huggingface_hub to fetch remote models)"
        ) from None
    try:
        return Path(snapshot_download(model_id, allow_patterns=_HUB_PATTERNS))
    except Exception as exc:
        raise ModelUnavailable(f"{model_id}: download failed: {exc}") from exc


def _lemma_for(surface: str, marker: str, lemmatizer: Lemmatizer) -> str:
    body = surface
    if marker and body.startswith(marker):
        body = body[len(marker):]
    body = body.lower()
    return lemmatizer(body) if body else ""


def _finish_export(
    out_dir: Path,
    model_id: str,
    matrix: np.ndarray,
    entries: list[tuple[int, str, str, int]],
    marker: str,
    lemma_source: str,
) -> ExtractionManifest:
    out_dir.mkdir(parents=True, exist_ok=True)
    emb_path = out_dir / "embeddings.bin"
    vocab_path = out_dir / "vocab.tsv"
    write_embeddings(emb_path, matrix)
    write_vocab(vocab_path, entries)
    manifest = ExtractionManifest(
        model=model_id,
        marker=marker,
        case_convention=infer_case(model_id),
        lemma_source=lemma_source,
        file_hashes={
            "embeddings.bin": sha256_file(emb_path),
            "vocab.tsv": sha256_file(vocab_path),
        },
    )
    manifest.save(out_dir / "manifest.json")
    return manifest


def extract_plm(
    model_id: str,
    out_dir: str | Path,
    lemmatizer: Lemmatizer | None = None,
    frequencies: Mapping[str, int] | None = None,
) -> ExtractionManifest:
    """Export a checkpoint's input embeddings and vocabulary.

    Raises ModelUnavailable when the checkpoint cannot be read and
    VocabMismatch when the embedding row count disagrees with the
    vocabulary size.
    """
    model_dir = _resolve_model_dir(model_id)
    surfaces = read_vocab_surfaces(model_dir)
    matrix = find_embedding_matrix(model_dir, vocab_size=len(surfaces))
    if matrix.shape[0] != len(surfaces):
        raise VocabMismatch(
            f"{model_id}: {matrix.shape[0]} embedding rows for {len(surfaces)} tokens"
        )
    lemmatizer = lemmatizer or default_lemmatizer()
    marker = infer_marker(model_id)
    frequencies = frequencies or {}
    entries = [
        (i, surface, _lemma_for(surface, marker, lemmatizer), int(frequencies.get(surface, 0)))
        for i, surface in enumerate(surfaces)
    ]
    return _finish_export(Path(out_dir), model_id, matrix, entries, marker, lemmatizer.name)


def extract_glove(
    vectors_path: str | Path,
    out_dir: str | Path,
    lemmatizer: Lemmatizer | None = None,
    frequencies: Mapping[str, int] | None = None,
    name: str | None = None,
) -> ExtractionManifest:
    """Export a flat-text word-vector file (one "word v1 .. vd" line per token).

    Word-level vectors carry no subword marker; the frequency column
    comes from `frequencies` when given (source-corpus counts), else 0.
    """
    vectors_path = Path(vectors_path)
    if not vectors_path.is_file():
        raise ModelUnavailable(f"{vectors_path}: no such vector file")
    surfaces: list[str] = []
    rows: list[np.ndarray] = []
    dim = 0
    with open(vectors_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if dim == 0:
                dim = len(line.split(" ")) - 1
                if dim < 1:
                    raise ModelUnavailable(f"{vectors_path}:1: no vector components")
            # tokens may themselves contain spaces, so split from the right
            parts = line.rsplit(" ", dim)
            if len(parts) != dim + 1:
                raise ModelUnavailable(f"{vectors_path}:{lineno}: expected {dim} components")
            try:
                vector = np.array([float(p) for p in parts[1:]], dtype=np.float32)
            except ValueError as exc:
                raise ModelUnavailable(f"{vectors_path}:{lineno}: {exc}") from None
            surfaces.append(parts[0])
            rows.append(vector)
    if not rows:
        raise ModelUnavailable(f"{vectors_path}: empty vector file")
    lemmatizer = lemmatizer or default_lemmatizer()
    frequencies = frequencies or {}
    model_id = name or vectors_path.stem
    entries = [
        (i, surface, _lemma_for(surface, "", lemmatizer), int(frequencies.get(surface, 0)))
        for i, surface in enumerate(surfaces)
    ]
    return _finish_export(
        Path(out_dir), model_id, np.vstack(rows), entries, "", lemmatizer.name
    )
