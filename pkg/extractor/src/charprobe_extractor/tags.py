"""Tag every vocabulary entry with one-hot PoS / coarse-PoS / NER rows.

Each token surface is stripped of its subword marker and any leading
whitespace before tagging, so " Jane" and "ĠJane" both reach the tagger
as "Jane".  Tokens the tagger cannot make sense of still get a row per
feature, one-hot at the tagger's fallback label.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .errors import TaggerUnavailable
from .formats import read_vocab, write_tags

_MARKERS = ("Ġ", "##", "▁")


@dataclass(frozen=True)
class Tagger:
    """A word tagger: fixed label set per feature, one label per word."""

    name: str
    labels: Mapping[str, Sequence[str]]
    fn: Callable[[str], Mapping[str, str]]

    def tag(self, word: str) -> Mapping[str, str]:
        return self.fn(word)


def _strip_for_tagging(surface: str) -> str:
    for marker in sorted(_MARKERS, key=len, reverse=True):
        if surface.startswith(marker):
            surface = surface[len(marker):]
            break
    return surface.lstrip()


def default_tagger() -> Tagger:
    """spaCy-backed tagger over the small English pipeline."""
    try:
        import spacy
    except ImportError:
        raise TaggerUnavailable(
            "spacy is not installed; pass a Tagger or pip install spacy "
            "and download en_core_web_sm"
        ) from None
    try:
        nlp = spacy.load("en_core_web_sm")
    except Exception as exc:
        raise TaggerUnavailable(f"cannot load en_core_web_sm: {exc}") from exc

    pos_labels = sorted(set(nlp.get_pipe("tagger").labels) | {"X"})
    coarse_labels = sorted(
        {"ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
         "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"}
    )
    ner_labels = sorted(set(nlp.get_pipe("ner").labels) | {"O"})

    def tag(word: str) -> dict[str, str]:
        if not word:
            return {"pos": "X", "coarse_pos": "X", "ner": "O"}
        doc = nlp(word)
        token = doc[0]
        return {
            "pos": token.tag_ if token.tag_ in pos_labels else "X",
            "coarse_pos": token.pos_ if token.pos_ in coarse_labels else "X",
            "ner": token.ent_type_ or "O",
        }

    return Tagger(
        name="spacy-en_core_web_sm",
        labels={"pos": pos_labels, "coarse_pos": coarse_labels, "ner": ner_labels},
        fn=tag,
    )


def extract_tags(
    vocab_path: str | Path, out_path: str | Path, tagger: Tagger | None = None
) -> int:
    """Write one one-hot tags.tsv row per token per feature; returns row count."""
    tagger = tagger or default_tagger()
    rows = []
    for token_id, surface, _, _ in read_vocab(vocab_path):
        got = tagger.tag(_strip_for_tagging(surface))
        for feature in sorted(tagger.labels):
            labels = tagger.labels[feature]
            picked = got[feature]
            if picked not in labels:
                raise ValueError(
                    f"tagger {tagger.name!r} returned {picked!r}, not a {feature} label"
                )
            rows.append(
                (token_id, feature, [(lab, 1.0 if lab == picked else 0.0) for lab in labels])
            )
    write_tags(out_path, rows)
    return len(rows)
