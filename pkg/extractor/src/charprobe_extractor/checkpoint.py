"""Locate and read the input-embedding matrix and vocabulary of a checkpoint.

Only the embedding layer is ever loaded; no other weights leave disk.
Checkpoints must be in safetensors format (single file or sharded with
an index); pickle-based .bin weights are refused with a clear message.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ModelUnavailable, VocabMismatch

# component names that hold input (token) embeddings across common
# architectures; position tables like wpe / position_embeddings never
# appear here, so suffix collisions cannot pick them up
_EMBEDDING_COMPONENTS = frozenset(
    {"wte", "word_embeddings", "embed_tokens", "tok_embeddings", "shared"}
)

_INDEX_NAME = "model.safetensors.index.json"


def _is_embedding_name(name: str) -> bool:
    parts = name.split(".")
    if parts[-1] == "weight":
        parts = parts[:-1]
    return bool(parts) and parts[-1] in _EMBEDDING_COMPONENTS


def _safetensor_files(model_dir: Path) -> list[Path]:
    index = model_dir / _INDEX_NAME
    if index.is_file():
        with open(index, encoding="utf-8") as fh:
            weight_map = json.load(fh).get("weight_map", {})
        return [model_dir / shard for shard in sorted(set(weight_map.values()))]
    found = sorted(model_dir.glob("*.safetensors"))
    if found:
        return found
    if list(model_dir.glob("*.bin")):
        raise ModelUnavailable(
            f"{model_dir}: only pickle-based .bin weights present; "
            "safetensors checkpoints are required"
        )
    raise ModelUnavailable(f"{model_dir}: no safetensors checkpoint found")


def _tensor_shapes(files: Sequence[Path]) -> dict[str, tuple[Path, tuple[int, ...]]]:
    from safetensors import safe_open

    shapes: dict[str, tuple[Path, tuple[int, ...]]] = {}
    for path in files:
        with safe_open(str(path), framework="np") as fh:
            for name in fh.keys():
                shapes[name] = (path, tuple(fh.get_slice(name).get_shape()))
    return shapes


def find_embedding_matrix(model_dir: str | Path, vocab_size: int | None = None) -> np.ndarray:
    """Return the (vocab_size, dim) input-embedding matrix as float32.

    Picks the tensor whose name matches a known embedding component; when
    names are unfamiliar, falls back to the unique 2-D tensor whose first
    dimension equals the vocabulary size.
    """
    model_dir = Path(model_dir)
    files = _safetensor_files(model_dir)
    shapes = _tensor_shapes(files)
    candidates = [name for name in sorted(shapes) if _is_embedding_name(name)]
    if len(candidates) > 1 and vocab_size is not None:
        candidates = [name for name in candidates if shapes[name][1][0] == vocab_size]
    if not candidates and vocab_size is not None:
        candidates = [
            name
            for name, (_, shape) in sorted(shapes.items())
            if len(shape) == 2 and shape[0] == vocab_size
        ]
    if len(candidates) != 1:
        raise ModelUnavailable(
            f"{model_dir}: cannot identify the embedding matrix "
            f"(candidates: {candidates or sorted(shapes)})"
        )
    name = candidates[0]
    path, shape = shapes[name]
    if len(shape) != 2:
        raise ModelUnavailable(f"{model_dir}: tensor {name} is not 2-D (shape {shape})")

    from safetensors import safe_open

    with safe_open(str(path), framework="np") as fh:
        matrix = fh.get_tensor(name)
    return np.ascontiguousarray(matrix, dtype=np.float32)


def read_vocab_surfaces(model_dir: str | Path) -> list[str]:
    """Read the tokenizer vocabulary as a list indexed by token id.

    Understands vocab.json (BPE), tokenizer.json (either vocab form),
    and vocab.txt (WordPiece, line number = id).  added_tokens.json
    entries are merged in, since some checkpoints pad the embedding
    table out to cover them.
    """
    model_dir = Path(model_dir)
    mapping = _read_vocab_mapping(model_dir)
    added = model_dir / "added_tokens.json"
    if added.is_file():
        with open(added, encoding="utf-8") as fh:
            for surface, token_id in json.load(fh).items():
                mapping.setdefault(surface, int(token_id))
    surfaces = [""] * len(mapping)
    seen = set()
    for surface, token_id in mapping.items():
        if not 0 <= token_id < len(mapping) or token_id in seen:
            raise VocabMismatch(
                f"{model_dir}: token ids are not a permutation of 0..{len(mapping) - 1}"
            )
        seen.add(token_id)
        surfaces[token_id] = surface
    return surfaces


def _read_vocab_mapping(model_dir: Path) -> dict[str, int]:
    vocab_json = model_dir / "vocab.json"
    if vocab_json.is_file():
        with open(vocab_json, encoding="utf-8") as fh:
            return {surface: int(i) for surface, i in json.load(fh).items()}
    tokenizer_json = model_dir / "tokenizer.json"
    if tokenizer_json.is_file():
        with open(tokenizer_json, encoding="utf-8") as fh:
            vocab = json.load(fh).get("model", {}).get("vocab")
        if isinstance(vocab, dict):
            return {surface: int(i) for surface, i in vocab.items()}
        if isinstance(vocab, list):  # unigram form: [surface, score] pairs in id order
            return {entry[0]: i for i, entry in enumerate(vocab)}
    vocab_txt = model_dir / "vocab.txt"
    if vocab_txt.is_file():
        with open(vocab_txt, encoding="utf-8") as fh:
            return {line.rstrip("\n"): i for i, line in enumerate(fh)}
    raise ModelUnavailable(
        f"{model_dir}: no vocabulary file (vocab.json, tokenizer.json, or vocab.txt)"
    )
