"""Corpus analysis: how many ways does a word get tokenized in practice.

For each target word the corpus is scanned for fuzzy occurrences:
case-insensitive windows within Levenshtein distance one, with window
lengths banded to the target's length plus or minus one.  Windows that
span whitespace, end in a non-alphabetic character, or abut an
alphabetic character on the right are rejected; scanning is leftmost
first and non-overlapping, with the best candidate (lowest distance,
then longest) winning at each start.

Matches sort into nested categories:

    all            distance <= 1
    except_pseudo  surface is not a real dictionary neighbour of the
                   target (a word at distance exactly one)
    closer_pseudo  additionally, fuzzy matches at distance one must be
                   at distance >= 2 from every such neighbour
    exact_contain  surface equals the target, case-insensitively
    exact_match    and the occurrence is not preceded by a space

Each match is tokenized deterministically in its space context (a
leading space when the corpus occurrence had one) and the number of
distinct token-id sequences per category is the variability measure.
"""

from __future__ import annotations

import warnings
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import log
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bpe import TokenizationScheme, bpe_encode

CATEGORIES = ("all", "except_pseudo", "closer_pseudo", "exact_contain", "exact_match")


def _is_alpha(ch: str) -> bool:
    return ch.isascii() and ch.isalpha()


# ---- capped edit distance, linear-time case analysis ----

def within_one_edit(a: str, b: str) -> bool:
    """True when Levenshtein(a, b) <= 1, without building the DP table."""
    if a == b:
        return True
    la, lb = len(a), len(b)
    if abs(la - lb) > 1:
        return False
    if la == lb:
        seen = False
        for x, y in zip(a, b):
            if x != y:
                if seen:
                    return False
                seen = True
        return True
    if la > lb:
        a, b, la, lb = b, a, lb, la
    i = j = 0
    used = False
    while i < la:
        if a[i] == b[j]:
            i += 1
            j += 1
        elif used:
            return False
        else:
            used = True
            j += 1
    return True


def capped_distance(a: str, b: str) -> int:
    """0, 1, or 2 meaning 'two or more'."""
    if a == b:
        return 0
    return 1 if within_one_edit(a, b) else 2


# ---- window scan ----

@dataclass(frozen=True)
class Match:
    line_no: int
    start: int
    surface: str
    distance: int
    preceded_by_space: bool


def find_matches(line: str, target: str, line_no: int = 0) -> list[Match]:
    """Leftmost non-overlapping fuzzy occurrences of target in one line."""
    t = target.casefold()
    L = len(t)
    lengths = [l for l in (L - 1, L, L + 1) if l >= 1]
    out: list[Match] = []
    i, n = 0, len(line)
    while i < n:
        if i > 0 and _is_alpha(line[i - 1]):
            i += 1
            continue
        best = None
        for l in lengths:
            if i + l > n:
                continue
            w = line[i : i + l]
            if not (_is_alpha(w[0]) and _is_alpha(w[-1])):
                continue
            if any(ch.isspace() for ch in w):
                continue
            if i + l < n and _is_alpha(line[i + l]):
                continue
            d = capped_distance(w.casefold(), t)
            if d <= 1:
                key = (d, -l)
                if best is None or key < best[0]:
                    best = (key, l, w, d)
        if best is None:
            i += 1
            continue
        _, l, w, d = best
        out.append(
            Match(
                line_no=line_no,
                start=i,
                surface=w,
                distance=d,
                preceded_by_space=i > 0 and line[i - 1] == " ",
            )
        )
        i += l
    return out


# ---- pseudo words and target selection ----

def build_pseudo_list(target: str, dictionary: Iterable[str]) -> list[str]:
    """Dictionary words at distance exactly one from the target."""
    t = target.casefold()
    out = set()
    for word in dictionary:
        w = word.casefold()
        if abs(len(w) - len(t)) <= 1 and capped_distance(w, t) == 1:
            out.add(w)
    return sorted(out)


def dedupe_targets(targets: Sequence[str]) -> list[str]:
    """Greedy pass dropping any target within distance one of a kept one."""
    kept: list[str] = []
    for target in targets:
        t = target.casefold()
        if any(
            abs(len(t) - len(k)) <= 1 and within_one_edit(t, k) for k in kept
        ):
            continue
        kept.append(t)
    return kept


def match_categories(match: Match, pseudo: Sequence[str]) -> set[str]:
    cats = {"all"}
    surface = match.surface.casefold()
    if surface in pseudo:
        return cats
    cats.add("except_pseudo")
    if match.distance == 0 or all(capped_distance(surface, p) >= 2 for p in pseudo):
        cats.add("closer_pseudo")
        if match.distance == 0:
            cats.add("exact_contain")
            if not match.preceded_by_space:
                cats.add("exact_match")
    return cats


# ---- per-target accounting ----

def count_tokenizations(scheme: TokenizationScheme, matches: Iterable[Match]) -> int:
    """Distinct token-id sequences over the matches, each tokenized in its
    own space context."""
    seen = set()
    for match in matches:
        text = (" " + match.surface) if match.preceded_by_space else match.surface
        seen.add(tuple(bpe_encode(scheme, text)))
    return len(seen)


def _scan_shard(args):
    lines, first_line_no, target = args
    out = []
    for k, line in enumerate(lines):
        out.extend(find_matches(line, target, line_no=first_line_no + k))
    return out


def scan_corpus(
    lines: Sequence[str], target: str, jobs: int = 1, shard_size: int = 4096
) -> list[Match]:
    """All matches in line order; sharding never changes the result."""
    if jobs <= 1 or len(lines) <= shard_size:
        return _scan_shard((lines, 0, target))
    shards = [
        (lines[s : s + shard_size], s, target) for s in range(0, len(lines), shard_size)
    ]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_scan_shard, shards))
    out: list[Match] = []
    for part in parts:
        out.extend(part)
    return out


def analyze_target(
    scheme: TokenizationScheme,
    target: str,
    lines: Sequence[str],
    dictionary: Iterable[str],
    jobs: int = 1,
) -> dict:
    pseudo = build_pseudo_list(target, dictionary)
    matches = scan_corpus(lines, target, jobs=jobs)
    per_cat: dict[str, list[Match]] = {cat: [] for cat in CATEGORIES}
    for match in matches:
        for cat in match_categories(match, pseudo):
            per_cat[cat].append(match)
    case_variants = len({m.surface for m in matches if m.distance == 0})
    return {
        "target": target,
        "pseudo_words": pseudo,
        "case_variants": case_variants,
        "matches": {cat: len(per_cat[cat]) for cat in CATEGORIES},
        "tokenizations": {
            cat: count_tokenizations(scheme, per_cat[cat]) for cat in CATEGORIES
        },
    }


def _mean_std(values: list[float]):
    if not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def analyze_corpus(
    scheme: TokenizationScheme,
    targets: Sequence[str],
    lines: Sequence[str],
    dictionary: Iterable[str],
    jobs: int = 1,
    dedupe: bool = True,
) -> dict:
    """Per-target variability plus aggregates by category, target length,
    and log-occurrence bucket.  Aggregates average only over targets that
    matched in the category."""
    dictionary = {w.casefold() for w in dictionary}
    kept = dedupe_targets(targets) if dedupe else [t.casefold() for t in targets]
    rows = [analyze_target(scheme, t, lines, dictionary, jobs=jobs) for t in kept]

    mean_tok, std_tok, counted = {}, {}, {}
    for cat in CATEGORIES:
        values = [r["tokenizations"][cat] for r in rows if r["matches"][cat] > 0]
        mean_tok[cat], std_tok[cat] = _mean_std(values)
        counted[cat] = len(values)

    by_length: dict[int, list[float]] = defaultdict(list)
    by_bucket: dict[int, list[float]] = defaultdict(list)
    for r in rows:
        if r["matches"]["all"] == 0:
            continue
        by_length[len(r["target"])].append(r["tokenizations"]["all"])
        by_bucket[round(log(r["matches"]["all"]))].append(r["tokenizations"]["all"])

    def fold(table):
        out = {}
        for key in sorted(table):
            mean, std = _mean_std(table[key])
            out[str(key)] = {"mean": mean, "std": std, "n_targets": len(table[key])}
        return out

    return {
        "n_targets_requested": len(targets),
        "n_targets": len(kept),
        "n_lines": len(lines),
        "targets": rows,
        "aggregate": {
            "n_targets_with_matches": counted,
            "mean_tokenizations": mean_tok,
            "std_tokenizations": std_tok,
            "by_target_length": fold(by_length),
            "by_log_occurrences": fold(by_bucket),
        },
    }


def read_corpus_files(paths: Sequence[str | Path]) -> list[str]:
    """Concatenated lines; unreadable files are skipped with a warning."""
    lines: list[str] = []
    for path in paths:
        try:
            with open(path, encoding="utf-8") as fh:
                lines.extend(line.rstrip("\n") for line in fh)
        except OSError as exc:
            warnings.warn(f"skipping corpus shard {path}: {exc}", stacklevel=2)
    return lines


def load_dictionary(path: str | Path) -> set[str]:
    """One word per line, case-folded, blanks ignored."""
    out = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word:
                out.add(word.casefold())
    return out
