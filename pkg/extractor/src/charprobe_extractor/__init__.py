"""Export embeddings, vocabularies, tag rows, and word lists for the probe toolkit."""

from .dictionary import default_word_source, extract_dictionary
from .errors import (
    ExtractionError,
    ModelUnavailable,
    ResourceUnavailable,
    TaggerUnavailable,
    VocabMismatch,
)
from .lemmas import Lemmatizer, default_lemmatizer, identity_lemmatizer, suffix_rule_lemmatizer
from .manifest import ExtractionManifest, infer_case, infer_marker, load_manifest, sha256_file
from .plm import extract_glove, extract_plm
from .tags import Tagger, default_tagger, extract_tags

__all__ = [
    "ExtractionError",
    "ExtractionManifest",
    "Lemmatizer",
    "ModelUnavailable",
    "ResourceUnavailable",
    "Tagger",
    "TaggerUnavailable",
    "VocabMismatch",
    "default_lemmatizer",
    "default_tagger",
    "default_word_source",
    "extract_dictionary",
    "extract_glove",
    "extract_plm",
    "extract_tags",
    "identity_lemmatizer",
    "infer_case",
    "infer_marker",
    "load_manifest",
    "sha256_file",
    "suffix_rule_lemmatizer",
]
