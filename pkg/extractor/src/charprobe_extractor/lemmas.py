"""Lemmatizer backends.

The vocab.tsv lemma column groups inflected forms of one word so the
probe's train/test splits can keep them on the same side.  Any callable
from word to lemma works; the manifest records which one produced a
given export, so the fallback is visible rather than silent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class Lemmatizer:
    name: str
    fn: Callable[[str], str]

    def __call__(self, word: str) -> str:
        return self.fn(word)


def identity_lemmatizer() -> Lemmatizer:
    return Lemmatizer("identity", lambda word: word)


# order matters: longest suffix first, and plain -s last so -sses and
# -ies forms do not fall through to a bare strip
_SUFFIX_RULES = (
    ("sses", "ss"),
    ("ies", "y"),
    ("ing", ""),
    ("ed", ""),
    ("s", ""),
)


def _strip_suffix(word: str) -> str:
    if not word.isalpha():
        return word
    for suffix, replacement in _SUFFIX_RULES:
        stem = word[: -len(suffix)]
        if word.endswith(suffix) and len(stem) + len(replacement) >= 3:
            return stem + replacement
    return word


def suffix_rule_lemmatizer() -> Lemmatizer:
    """Deterministic English suffix stripper for offline machines."""
    return Lemmatizer("suffix-rules", _strip_suffix)


def default_lemmatizer() -> Lemmatizer:
    """WordNet lemmatization when nltk is importable, suffix rules otherwise."""
    try:
        from nltk.stem import WordNetLemmatizer
    except ImportError:
        return suffix_rule_lemmatizer()
    backend = WordNetLemmatizer()
    try:
        backend.lemmatize("houses")
    except LookupError:
        return suffix_rule_lemmatizer()
    return Lemmatizer("nltk-wordnet", lambda word: backend.lemmatize(word))
