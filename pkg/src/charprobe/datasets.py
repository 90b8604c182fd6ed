"""Probe datasets: balanced character/substring examples and grouped splits.

Two dataset shapes feed the probes:

* CharDataset — one example per token, label 1 iff the marker-stripped
  surface contains the target character.  Balanced exactly by
  undersampling the majority class.
* SubstringDataset — (u, v) pairs, label 1 iff u's surface is a proper
  contiguous substring of v's.  Each positive gets one negative with a
  length-matched replacement for u.

Splits are grouped so that no lemma group (char probing) or superstring
(substring probing) straddles the train/test boundary; an empty lemma
leaves a token in its own group.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptySplit, NoNegatives, NoPositives, UnsatisfiableRatio
from .vocab import Vocabulary

log = logging.getLogger(__name__)

SPLIT_TOLERANCE = 0.05


@dataclass
class CharDataset:
    """Balanced binary dataset for one target character."""

    target_char: str
    examples: list[tuple[int, int]]  # (token_id, label)
    case_sensitive: bool
    seed: int

    def __len__(self) -> int:
        return len(self.examples)

    def labels(self) -> np.ndarray:
        return np.array([lab for _, lab in self.examples], dtype=np.int64)


@dataclass
class SubstringDataset:
    """Balanced (u, v) pairs; label 1 iff u is a proper substring of v."""

    examples: list[tuple[int, int, int]]  # (u_id, v_id, label)
    seed: int

    def __len__(self) -> int:
        return len(self.examples)

    def labels(self) -> np.ndarray:
        return np.array([lab for _, _, lab in self.examples], dtype=np.int64)


@dataclass
class SplitPlan:
    """Example indices per side plus the knobs that produced them."""

    train_ids: set[int]
    test_ids: set[int]
    ratio_target: float = 0.8
    group_key: str = "lemma"

    def train_fraction(self) -> float:
        total = len(self.train_ids) + len(self.test_ids)
        return len(self.train_ids) / total if total else 0.0


def _contains(surface: str, char: str, case_sensitive: bool) -> bool:
    if case_sensitive:
        return char in surface
    return char.casefold() in surface.casefold()


def build_char_dataset(
    vocab: Vocabulary, char: str, case_sensitive: bool, seed: int
) -> CharDataset:
    """Label every token by character containment, then balance exactly.

    All of the minority class is kept; the majority class is undersampled
    uniformly without replacement.  Deterministic for a given
    (vocab, char, case_sensitive, seed).
    """
    positives: list[int] = []
    negatives: list[int] = []
    for entry in vocab:
        body = vocab.stripped(entry.id)
        if _contains(body, char, case_sensitive):
            positives.append(entry.id)
        else:
            negatives.append(entry.id)
    if not positives:
        raise NoPositives(f"no token contains {char!r}")
    if not negatives:
        raise NoNegatives(f"every token contains {char!r}")
    rng = np.random.default_rng(seed)
    if len(negatives) >= len(positives):
        keep = rng.choice(len(negatives), size=len(positives), replace=False)
        negatives = [negatives[i] for i in sorted(keep)]
    else:
        keep = rng.choice(len(positives), size=len(negatives), replace=False)
        positives = [positives[i] for i in sorted(keep)]
    examples = [(tid, 1) for tid in positives] + [(tid, 0) for tid in negatives]
    return CharDataset(char, examples, case_sensitive, seed)


def build_substring_dataset(vocab: Vocabulary, seed: int) -> SubstringDataset:
    """Enumerate proper-substring pairs and length-matched negatives.

    Positives: every (u, v), u != v, with stripped(u) a proper contiguous
    substring of stripped(v).  For each positive one negative (w, v) is
    drawn where len(w) == len(u) and w is not a substring of v.  When the
    candidate pool for some length is smaller than the number of positives
    needing it, sampling falls back to replacement (warned); when the pool
    is empty the positive is dropped (warned) to preserve balance.
    """
    ids = [e.id for e in vocab]
    bodies = {tid: vocab.stripped(tid) for tid in ids}
    by_len: dict[int, list[int]] = {}
    for tid in ids:
        by_len.setdefault(len(bodies[tid]), []).append(tid)

    rng = np.random.default_rng(seed)
    examples: list[tuple[int, int, int]] = []
    dropped = 0
    replaced = 0
    for v_id in ids:
        v_body = bodies[v_id]
        positives = [
            u_id
            for u_id in ids
            if u_id != v_id
            and len(bodies[u_id]) < len(v_body)
            and bodies[u_id]
            and bodies[u_id] in v_body
        ]
        if not positives:
            continue
        # negatives pooled per required length, excluding substrings of v
        pools: dict[int, list[int]] = {}
        needed: dict[int, int] = {}
        for u_id in positives:
            need = len(bodies[u_id])
            needed[need] = needed.get(need, 0) + 1
            if need not in pools:
                pools[need] = [
                    w_id
                    for w_id in by_len.get(need, [])
                    if bodies[w_id] not in v_body
                ]
        for length, count in needed.items():
            if pools[length] and count > len(pools[length]):
                replaced += count - len(pools[length])
        for u_id in positives:
            pool = pools[len(bodies[u_id])]
            if not pool:
                dropped += 1
                continue
            pick = int(rng.integers(len(pool)))
            examples.append((u_id, v_id, 1))
            examples.append((int(pool[pick]), v_id, 0))
    if dropped:
        log.warning("substring dataset: dropped %d positives with empty negative pool", dropped)
    if replaced:
        log.warning("substring dataset: %d negatives drawn with replacement", replaced)
    return SubstringDataset(examples, seed)


def _group_of(dataset, vocab: Vocabulary, index: int) -> str:
    if isinstance(dataset, CharDataset):
        return vocab.lemma_key(dataset.examples[index][0])
    u_id, v_id, _ = dataset.examples[index]
    return f"v:{v_id}"


def split_grouped(
    dataset: CharDataset | SubstringDataset,
    vocab: Vocabulary,
    ratio: float = 0.8,
    seed: int = 0,
) -> SplitPlan:
    """Group-respecting train/test split within 5 points of the ratio.

    Groups are shuffled with the seed and packed into train greedily: a
    group joins train while train is below target and the group would not
    push it past (ratio + 0.05) * total.  Chunky groups can make one
    shuffle order unpackable even though a valid packing exists, so up to
    32 seeded reshuffles are tried.  Raises UnsatisfiableRatio when a
    single group is larger than max(ratio, 1 - ratio) of the data or when
    no attempt lands inside the tolerance.
    """
    n = len(dataset)
    if n == 0:
        raise EmptySplit("dataset has no examples")
    if not 0.0 < ratio < 1.0:
        raise UnsatisfiableRatio(f"ratio {ratio} outside (0, 1)")
    groups: dict[str, list[int]] = {}
    for idx in range(n):
        groups.setdefault(_group_of(dataset, vocab, idx), []).append(idx)
    largest = max(len(v) for v in groups.values())
    if largest > max(ratio, 1.0 - ratio) * n:
        raise UnsatisfiableRatio(
            f"one group holds {largest}/{n} examples, more than "
            f"max(ratio, 1-ratio) = {max(ratio, 1.0 - ratio):.2f} of the data"
        )

    group_key = "lemma" if isinstance(dataset, CharDataset) else "superstring"
    target = ratio * n
    cap = (ratio + SPLIT_TOLERANCE) * n
    best = None
    for attempt in range(32):
        keys = sorted(groups)
        rng = np.random.default_rng([abs(int(seed)), attempt])
        rng.shuffle(keys)
        train_ids: set[int] = set()
        test_ids: set[int] = set()
        for key in keys:
            members = groups[key]
            if len(train_ids) < target and len(train_ids) + len(members) <= cap:
                train_ids.update(members)
            else:
                test_ids.update(members)
        plan = SplitPlan(train_ids, test_ids, ratio_target=ratio, group_key=group_key)
        frac = plan.train_fraction()
        if abs(frac - ratio) <= SPLIT_TOLERANCE + 1e-9 and train_ids and test_ids:
            return plan
        if best is None or abs(frac - ratio) < abs(best.train_fraction() - ratio):
            best = plan
    raise UnsatisfiableRatio(
        f"cannot pack groups to {ratio:.2f} +/- {SPLIT_TOLERANCE:.2f}; "
        f"best achievable was {best.train_fraction():.3f}"
    )


def dump_dataset(
    dataset: CharDataset | SubstringDataset, plan: SplitPlan, path: str | Path
) -> None:
    """Audit dump: token id(s), label, and split side, one example per row."""
    with open(Path(path), "w", encoding="utf-8") as fh:
        for idx, example in enumerate(dataset.examples):
            side = "train" if idx in plan.train_ids else "test"
            *ids, label = example
            fh.write("\t".join(str(x) for x in ids) + f"\t{label}\t{side}\n")
