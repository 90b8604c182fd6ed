"""Extraction provenance: what was exported, from where, with which conventions."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

GPT_MARKER = "Ġ"
BERT_MARKER = "##"
SPM_MARKER = "▁"

# Model families whose tokenizers use the sentencepiece word-boundary
# marker.  Checked before the "bert" substring so albert and xlm-roberta
# land on the right side.
_SPM_PARTS = frozenset({"t5", "mt5", "mbart", "albert", "xlnet", "xlm"})


def infer_marker(model_id: str) -> str:
    """Map a model identifier to its tokenizer's word-boundary marker.

    Ġ for GPT and RoBERTa byte-level BPE vocabularies, ## for BERT
    WordPiece continuations, ▁ for sentencepiece (multilingual) models.
    Word-level exports (GloVe) carry no marker and return "".
    """
    name = Path(model_id).name.lower()
    if "glove" in name or "word2vec" in name:
        return ""
    parts = set(re.split(r"[^a-z0-9]+", name))
    if parts & _SPM_PARTS or "xlm" in name or "sentencepiece" in name:
        return SPM_MARKER
    if "roberta" in name:
        return GPT_MARKER
    if "bert" in name:
        return BERT_MARKER
    return GPT_MARKER


def infer_case(model_id: str) -> str:
    return "uncased" if "uncased" in Path(model_id).name.lower() else "cased"


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class ExtractionManifest:
    """Provenance sidecar written next to every export."""

    model: str
    marker: str
    case_convention: str
    lemma_source: str
    file_hashes: dict[str, str] = field(default_factory=dict)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, ensure_ascii=False, indent=2, sort_keys=True)
            fh.write("\n")


def load_manifest(path: str | Path) -> ExtractionManifest:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return ExtractionManifest(**data)
