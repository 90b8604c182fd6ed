"""Dump a deduplicated lowercase word list for the corpus analyzer."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable

from .errors import ResourceUnavailable


def default_word_source() -> tuple[str, Iterable[str]]:
    """WordNet lemma names via nltk; raises ResourceUnavailable when absent."""
    try:
        from nltk.corpus import wordnet
    except ImportError:
        raise ResourceUnavailable(
            "nltk is not installed; pass a word source or pip install nltk"
        ) from None
    try:
        names = list(wordnet.all_lemma_names())
    except LookupError:
        raise ResourceUnavailable(
            "wordnet corpus not downloaded; run nltk.download('wordnet')"
        ) from None
    return "nltk-wordnet", names


def extract_dictionary(
    out_path: str | Path, source: tuple[str, Iterable[str]] | None = None
) -> int:
    """Write sorted unique lowercase alphabetic words, one per line.

    Multi-word lemmas (underscored collocations) and anything containing
    a digit or punctuation are dropped.  Returns the word count.
    """
    _, words = source if source is not None else default_word_source()
    kept = sorted({word.lower() for word in words if word.isalpha()})
    with open(out_path, "w", encoding="utf-8") as fh:
        for word in kept:
            fh.write(word + "\n")
    return len(kept)
