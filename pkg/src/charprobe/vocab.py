"""Vocabulary files, marker stripping, and alphabet derivation.

A vocabulary row is ``id<TAB>surface<TAB>lemma<TAB>frequency``.  Tabs,
newlines and backslashes inside surface or lemma are escaped as ``\\t``,
``\\n`` and ``\\\\`` so the file stays one row per line.  Subword markers
(``Ġ`` GPT-style, ``##`` BERT-style, ``▁`` sentencepiece-style) count as
word-boundary decoration: at most one leading marker is stripped before
any character-level question is asked about a surface.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DuplicateId, EmptyAlphabet, MalformedRow

DEFAULT_MARKERS: tuple[str, ...] = ("Ġ", "##", "▁")


def strip_marker(surface: str, markers: Iterable[str]) -> str:
    """Remove at most one leading subword marker."""
    for marker in sorted(markers, key=len, reverse=True):
        if surface.startswith(marker):
            return surface[len(marker):]
    return surface

_UNESCAPE = {"t": "\t", "n": "\n", "\\": "\\"}


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def _unescape(text: str, where: str) -> str:
    def sub(match: re.Match[str]) -> str:
        key = match.group(1)
        if key not in _UNESCAPE:
            raise MalformedRow(f"{where}: unknown escape \\{key}")
        return _UNESCAPE[key]

    return re.sub(r"\\(.)", sub, text)


@dataclass
class VocabEntry:
    id: int
    surface: str
    lemma: str = ""
    frequency: int = 0


@dataclass(frozen=True)
class Alphabet:
    """An ordered set of single-codepoint probe targets."""

    characters: tuple[str, ...]
    script_name: str = ""
    case_sensitive: bool = False

    def __post_init__(self) -> None:
        if len(set(self.characters)) != len(self.characters):
            raise ValueError("alphabet characters must be unique")
        for ch in self.characters:
            if len(ch) != 1:
                raise ValueError(f"alphabet entries must be single code points, got {ch!r}")
        object.__setattr__(self, "_charset", frozenset(self.characters))

    def __iter__(self) -> Iterator[str]:
        return iter(self.characters)

    def __len__(self) -> int:
        return len(self.characters)

    def __contains__(self, ch: str) -> bool:
        return ch in self._charset  # type: ignore[attr-defined]


def english_alphabet(case_sensitive: bool = False) -> Alphabet:
    return Alphabet(tuple("abcdefghijklmnopqrstuvwxyz"), "latin", case_sensitive)


class Vocabulary:
    """Ordered token entries with id lookup and cached marker stripping."""

    def __init__(self, entries: Iterable[VocabEntry], markers: Iterable[str] = DEFAULT_MARKERS):
        self.entries: list[VocabEntry] = list(entries)
        # longest marker first so "##" wins over any 1-char prefix of it
        self.markers: tuple[str, ...] = tuple(sorted(markers, key=len, reverse=True))
        self._by_id: dict[int, VocabEntry] = {}
        for entry in self.entries:
            if entry.id in self._by_id:
                raise DuplicateId(f"token id {entry.id} appears more than once")
            if entry.frequency < 0:
                raise MalformedRow(f"token id {entry.id}: negative frequency")
            self._by_id[entry.id] = entry
        self._stripped: dict[int, str] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[VocabEntry]:
        return iter(self.entries)

    def __contains__(self, token_id: int) -> bool:
        return token_id in self._by_id

    def ids(self) -> list[int]:
        return [e.id for e in self.entries]

    def entry(self, token_id: int) -> VocabEntry:
        return self._by_id[token_id]

    def surface(self, token_id: int) -> str:
        return self._by_id[token_id].surface

    def strip_marker(self, surface: str) -> str:
        return strip_marker(surface, self.markers)

    def stripped(self, token_id: int) -> str:
        got = self._stripped.get(token_id)
        if got is None:
            got = self.strip_marker(self._by_id[token_id].surface)
            self._stripped[token_id] = got
        return got

    def lemma_key(self, token_id: int) -> str:
        """Grouping key for splits; an empty lemma leaves the token alone."""
        lemma = self._by_id[token_id].lemma
        return lemma if lemma else f"\x00token:{token_id}"


def load_vocab(path: str | Path, markers: Iterable[str] = DEFAULT_MARKERS) -> Vocabulary:
    """Parse a vocab.tsv file; raises MalformedRow / DuplicateId with line numbers."""
    path = Path(path)
    entries = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise MalformedRow(f"{path}:{lineno}: expected 4 columns, got {len(cols)}")
            where = f"{path}:{lineno}"
            raw_id, raw_surface, raw_lemma, raw_freq = cols
            try:
                token_id = int(raw_id)
                frequency = int(raw_freq)
            except ValueError as exc:
                raise MalformedRow(f"{where}: {exc}") from None
            if frequency < 0:
                raise MalformedRow(f"{where}: negative frequency {frequency}")
            entries.append(
                VocabEntry(
                    id=token_id,
                    surface=_unescape(raw_surface, where),
                    lemma=_unescape(raw_lemma, where),
                    frequency=frequency,
                )
            )
    try:
        return Vocabulary(entries, markers=markers)
    except DuplicateId as exc:
        raise DuplicateId(f"{path}: {exc}") from None


def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for e in vocab:
            fh.write(f"{e.id}\t{_escape(e.surface)}\t{_escape(e.lemma)}\t{e.frequency}\n")


def filter_alphabetic(
    vocab: Vocabulary, alphabet: Alphabet, markers: Iterable[str] = DEFAULT_MARKERS
) -> Vocabulary:
    """Keep entries whose marker-stripped surface uses only alphabet characters.

    Case is folded before membership checks unless the alphabet is
    case-sensitive.  Surfaces that are empty after stripping (a bare
    marker) are dropped.  Order and ids are preserved.
    """
    marker_list = tuple(markers)
    kept = []
    for entry in vocab:
        body = strip_marker(entry.surface, marker_list)
        if not body:
            continue
        if not alphabet.case_sensitive:
            body = body.casefold()
        if all(ch in alphabet for ch in body):
            kept.append(entry)
    return Vocabulary(kept, markers=marker_list)


def derive_alphabet(vocab: Vocabulary, min_tokens: int) -> Alphabet:
    """Characters that occur in at least min_tokens distinct surfaces.

    Markers and whitespace never count.  Result is ordered by code point;
    raises EmptyAlphabet when nothing clears the threshold.
    """
    doc_freq: dict[str, int] = {}
    for entry in vocab:
        body = vocab.strip_marker(entry.surface)
        for ch in set(body):
            if ch.isspace():
                continue
            doc_freq[ch] = doc_freq.get(ch, 0) + 1
    chars = sorted(ch for ch, n in doc_freq.items() if n >= min_tokens)
    if not chars:
        raise EmptyAlphabet(
            f"no character reaches document frequency {min_tokens} "
            f"over {len(vocab)} surfaces"
        )
    return Alphabet(tuple(chars), script_name="derived")
