"""BPE tokenization with a controllable amount of variability.

The scheme is classic greedy BPE (lowest merge rank first) over a simple
pre-tokenizer: maximal ASCII-alphabetic runs are words, a word eats one
immediately preceding space which becomes the leading-space marker, and
everything else passes through as literal runs.  ``variable_tokenize``
adds the controlled randomness: per word, with probability rho, the word
is replaced by one uniformly drawn two-way split whose halves are both
alphabetic in-vocabulary tokens (marker staying on the left half);
otherwise the standard encoding is used.  Detokenization is exact for
every rho because splits partition the word.

Fixture mode is ASCII-only: any byte outside 9/10/32..126 raises
UnencodableByte rather than guessing, which also keeps the marker glyph
impossible to collide with input text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import UnencodableByte, UnknownId

_ASCII_OK = frozenset(chr(c) for c in range(32, 127)) | {"\n", "\t"}


@dataclass
class TokenizationScheme:
    """Merge table, token map, marker, and the variability knobs."""

    merges: list[tuple[str, str]]
    token_to_id: dict[str, int]
    marker: str = "Ġ"
    rho: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho}")
        if len(self.marker) != 1:
            raise ValueError("marker must be a single character")
        self.ranks: dict[tuple[str, str], int] = {
            pair: rank for rank, pair in enumerate(self.merges)
        }
        for left, right in self.merges:
            if left + right not in self.token_to_id:
                raise ValueError(f"merge output {left + right!r} missing from token map")
        self.id_to_token: dict[int, str] = {i: t for t, i in self.token_to_id.items()}
        if len(self.id_to_token) != len(self.token_to_id):
            raise ValueError("token map has duplicate ids")
        # memoized per-piece results; word and literal pieces cannot collide
        # textually, so one map serves both
        self._piece_cache: dict[str, tuple[int, ...]] = {}
        self._split_cache: dict[str, list[tuple[int, int]]] = {}

    def with_rho(self, rho: float, seed: int | None = None) -> "TokenizationScheme":
        return TokenizationScheme(
            self.merges,
            self.token_to_id,
            marker=self.marker,
            rho=rho,
            seed=self.seed if seed is None else seed,
        )


# ---- pre-tokenization ----

def _is_word_char(ch: str) -> bool:
    return ch.isascii() and ch.isalpha()


def _pretokenize(text: str) -> list[tuple[int, str, bool]]:
    """Split into (offset, piece, is_word) pieces.

    A word piece keeps one leading space when the word directly follows
    one; the space turns into the marker during encoding.
    """
    pieces = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == " " and i + 1 < n and _is_word_char(text[i + 1]):
            j = i + 1
            while j < n and _is_word_char(text[j]):
                j += 1
            pieces.append((i, text[i:j], True))
            i = j
        elif _is_word_char(ch):
            j = i
            while j < n and _is_word_char(text[j]):
                j += 1
            pieces.append((i, text[i:j], True))
            i = j
        else:
            j = i
            while j < n:
                c = text[j]
                if _is_word_char(c):
                    break
                if c == " " and j + 1 < n and _is_word_char(text[j + 1]):
                    break
                j += 1
            pieces.append((i, text[i:j], False))
            i = j
    return pieces


def _check_ascii(text: str) -> None:
    for offset, ch in enumerate(text):
        if ch not in _ASCII_OK:
            raise UnencodableByte(
                f"byte offset {offset}: {ch!r} is outside fixture-mode ASCII"
            )


# ---- core merge loop ----

def _merge_symbols(symbols: list[str], ranks: dict[tuple[str, str], int]) -> list[str]:
    """Greedy lowest-rank merging until no adjacent pair has a rank."""
    while len(symbols) > 1:
        best_rank = None
        best_pair = None
        prev = symbols[0]
        for sym in symbols[1:]:
            rank = ranks.get((prev, sym))
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank, best_pair = rank, (prev, sym)
            prev = sym
        if best_pair is None:
            break
        left, right = best_pair
        merged = left + right
        out = []
        k = 0
        while k < len(symbols):
            if k + 1 < len(symbols) and symbols[k] == left and symbols[k + 1] == right:
                out.append(merged)
                k += 2
            else:
                out.append(symbols[k])
                k += 1
        symbols = out
    return symbols


def _word_symbols(scheme: TokenizationScheme, piece: str) -> list[str]:
    if piece.startswith(" "):
        return [scheme.marker] + list(piece[1:])
    return list(piece)


def _encode_symbols(scheme: TokenizationScheme, symbols: list[str], offset: int) -> list[int]:
    ids = []
    for sym in _merge_symbols(symbols, scheme.ranks):
        got = scheme.token_to_id.get(sym)
        if got is None:
            raise UnencodableByte(
                f"byte offset {offset}: no token for symbol {sym!r} and no fallback"
            )
        ids.append(got)
    return ids


def _encode_piece(
    scheme: TokenizationScheme, piece: str, is_word: bool, offset: int
) -> tuple[int, ...]:
    """Memoized standard encoding of one pre-tokenized piece.

    Only successes are cached, so a failing piece always reports its own
    offset.
    """
    cached = scheme._piece_cache.get(piece)
    if cached is not None:
        return cached
    symbols = _word_symbols(scheme, piece) if is_word else list(piece)
    ids = tuple(_encode_symbols(scheme, symbols, offset))
    scheme._piece_cache[piece] = ids
    return ids


def bpe_encode(scheme: TokenizationScheme, text: str) -> list[int]:
    """Deterministic greedy BPE over the pre-tokenized text."""
    _check_ascii(text)
    ids: list[int] = []
    for offset, piece, is_word in _pretokenize(text):
        ids.extend(_encode_piece(scheme, piece, is_word, offset))
    return ids


def detokenize(scheme: TokenizationScheme, ids: Sequence[int]) -> str:
    """Exact inverse of encoding: surfaces joined, marker mapped to space."""
    out = []
    for token_id in ids:
        surface = scheme.id_to_token.get(int(token_id))
        if surface is None:
            raise UnknownId(f"id {token_id} is not in the token map")
        out.append(surface.replace(scheme.marker, " "))
    return "".join(out)


# ---- controlled variability ----

def two_way_splits(scheme: TokenizationScheme, word: str) -> list[tuple[str, str]]:
    """All (left, right) in-vocabulary two-way splits of a word.

    The word may carry one leading space; the marker stays on the left
    half.  Results are in split-point order and use the text form (" sche",
    "matics"), not the marker form.
    """
    spaced = word.startswith(" ")
    body = word[1:] if spaced else word
    if not body or not all(_is_word_char(ch) for ch in body):
        return []
    prefix = scheme.marker if spaced else ""
    shown = " " if spaced else ""
    out = []
    for i in range(1, len(body)):
        left, right = prefix + body[:i], body[i:]
        if left in scheme.token_to_id and right in scheme.token_to_id:
            out.append((shown + body[:i], right))
    return out


def _split_id_pairs(scheme: TokenizationScheme, piece: str) -> list[tuple[int, int]]:
    cached = scheme._split_cache.get(piece)
    if cached is not None:
        return cached
    spaced = piece.startswith(" ")
    body = piece[1:] if spaced else piece
    prefix = scheme.marker if spaced else ""
    pairs = []
    for i in range(1, len(body)):
        left = scheme.token_to_id.get(prefix + body[:i])
        right = scheme.token_to_id.get(body[i:])
        if left is not None and right is not None:
            pairs.append((left, right))
    scheme._split_cache[piece] = pairs
    return pairs


def variable_tokenize(
    scheme: TokenizationScheme, text: str, rng: np.random.Generator | None = None
) -> list[int]:
    """Algorithm: per word draw u ~ U[0,1); if u < rho and the word has
    two-way in-vocabulary splits, emit one uniformly sampled split,
    otherwise the standard encoding.  Literal runs always use the
    standard path.  With no generator supplied the scheme seed makes the
    call deterministic.
    """
    _check_ascii(text)
    if rng is None:
        rng = np.random.default_rng(scheme.seed)
    ids: list[int] = []
    for offset, piece, is_word in _pretokenize(text):
        if not is_word:
            ids.extend(_encode_piece(scheme, piece, False, offset))
            continue
        if scheme.rho > 0.0 and rng.random() < scheme.rho:
            choices = _split_id_pairs(scheme, piece)
            if choices:
                pick = choices[int(rng.integers(len(choices)))]
                ids.extend(pick)
                continue
        ids.extend(_encode_piece(scheme, piece, True, offset))
    return ids


# ---- scheme files ----

def load_scheme(
    merges_path: str | Path,
    vocab_path: str | Path,
    marker: str = "Ġ",
    rho: float = 0.0,
    seed: int = 0,
) -> TokenizationScheme:
    """merges.txt: one space-separated pair per line, rank = line order.
    vocab json: token -> id."""
    merges = []
    with open(merges_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            left, sep, right = line.partition(" ")
            if not sep or not left or not right:
                raise ValueError(f"{merges_path}: bad merge line {line!r}")
            merges.append((left, right))
    with open(vocab_path, encoding="utf-8") as fh:
        token_to_id = {str(k): int(v) for k, v in json.load(fh).items()}
    return TokenizationScheme(merges, token_to_id, marker=marker, rho=rho, seed=seed)


def save_scheme(scheme: TokenizationScheme, merges_path: str | Path, vocab_path: str | Path) -> None:
    with open(merges_path, "w", encoding="utf-8") as fh:
        for left, right in scheme.merges:
            fh.write(f"{left} {right}\n")
    with open(vocab_path, "w", encoding="utf-8") as fh:
        json.dump(scheme.token_to_id, fh, ensure_ascii=False, indent=0)


# ---- merge learning (desk-scale plumbing, classic frequency BPE) ----

def learn_merges(
    word_counts: dict[str, int],
    n_merges: int,
    marker: str = "Ġ",
    rho: float = 0.0,
    seed: int = 0,
) -> TokenizationScheme:
    """Learn a merge table from word frequencies.

    Words are given in text form (a leading space marks word-boundary
    tokens).  The token map holds every observed single character, the
    marker, and each merge output, ids in that discovery order.  Ties in
    pair frequency break lexicographically so training is deterministic.
    """
    seqs: list[list[str]] = []
    counts: list[int] = []
    for word, count in sorted(word_counts.items()):
        symbols = [marker] + list(word[1:]) if word.startswith(" ") else list(word)
        if not symbols:
            continue
        seqs.append(symbols)
        counts.append(int(count))

    pair_counts: dict[tuple[str, str], int] = {}
    pair_seqs: dict[tuple[str, str], set[int]] = {}

    def add_seq_pairs(idx: int, sign: int) -> None:
        symbols, count = seqs[idx], counts[idx]
        for a, b in zip(symbols, symbols[1:]):
            pair = (a, b)
            pair_counts[pair] = pair_counts.get(pair, 0) + sign * count
            if sign > 0:
                pair_seqs.setdefault(pair, set()).add(idx)

    for idx in range(len(seqs)):
        add_seq_pairs(idx, +1)

    merges: list[tuple[str, str]] = []
    for _ in range(n_merges):
        best = None
        for pair, count in pair_counts.items():
            if count <= 0:
                continue
            if best is None or count > best[0] or (count == best[0] and pair < best[1]):
                best = (count, pair)
        if best is None or best[0] < 2:
            break
        pair = best[1]
        merges.append(pair)
        left, right = pair
        merged = left + right
        for idx in list(pair_seqs.get(pair, ())):
            symbols = seqs[idx]
            add_seq_pairs(idx, -1)
            out = []
            k = 0
            while k < len(symbols):
                if k + 1 < len(symbols) and symbols[k] == left and symbols[k + 1] == right:
                    out.append(merged)
                    k += 2
                else:
                    out.append(symbols[k])
                    k += 1
            seqs[idx] = out
            add_seq_pairs(idx, +1)

    token_to_id: dict[str, int] = {}

    def intern(token: str) -> None:
        if token not in token_to_id:
            token_to_id[token] = len(token_to_id)

    intern(marker)
    for word in sorted(word_counts):
        for ch in word:
            intern(marker if ch == " " else ch)
    for left, right in merges:
        intern(left + right)
    return TokenizationScheme(merges, token_to_id, marker=marker, rho=rho, seed=seed)


# ---- tokenized corpus files ----

def write_id_lines(path: str | Path, lines: Iterable[Sequence[int]]) -> None:
    """One space-separated id sequence per input line."""
    with open(path, "w", encoding="ascii") as fh:
        for ids in lines:
            fh.write(" ".join(str(i) for i in ids) + "\n")


def read_id_lines(path: str | Path) -> list[list[int]]:
    out = []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            out.append([int(x) for x in line.split()] if line else [])
    return out


def count_words(lines: Iterable[str]) -> dict[str, int]:
    """Word frequencies in pretokenized text form (leading space kept).

    Input for merge learning.  Errors carry the one-based line number.
    """
    counts: dict[str, int] = {}
    for lineno, line in enumerate(lines, start=1):
        try:
            _check_ascii(line)
        except UnencodableByte as exc:
            raise UnencodableByte(f"line {lineno}: {exc}") from None
        for _, piece, is_word in _pretokenize(line):
            if is_word:
                counts[piece] = counts.get(piece, 0) + 1
    return counts
