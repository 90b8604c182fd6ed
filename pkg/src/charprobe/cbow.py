"""Mean-of-context CBOW with negative sampling, written from scratch.

The trainer consumes a corpus of token-id lines, drops ids rarer than
min_count, remaps survivors to contiguous rows sorted by descending
frequency, subsamples frequent words with the classic
(sqrt(f/t) + 1) * t/f keep rule, and optimizes input/output matrices
with per-center SGD: the positive target plus k negatives drawn from
the unigram^0.75 table.  Updates are the exact gradients of the
per-center objective (the mean over context rows is differentiated, so
each context row receives neu1e / context_size; the classic C tool
instead applies the undivided vector).

Determinism: a counting pass replays the same seeded subsample draws as
the training pass so the total center count, and with it the linear
learning-rate decay, is known up front; negatives come from a separate
per-epoch stream; the hot loop is single-threaded.  workers > 1 switches
to a racy parallel kernel that gives up run-to-run reproducibility.

The numba kernel and the pure-python reference implement the same
operation order at the same precisions, so small runs agree bit for bit;
tests rely on that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import config as numba_config
from numba import njit, prange, set_num_threads

from .embeddings import EmbeddingTable
from .errors import ConfigError, EmptyCorpusAfterFiltering
from .vocab import VocabEntry, Vocabulary

_CHUNK_CENTERS = 1 << 18
_LR_FLOOR_FRACTION = 1e-4


@dataclass
class CbowConfig:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_count: int = 5
    subsample: float = 1e-4
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ConfigError(f"dim must be positive, got {self.dim}")
        if self.window < 1:
            raise ConfigError(f"window must be positive, got {self.window}")
        if self.negatives < 0:
            raise ConfigError(f"negatives must be >= 0, got {self.negatives}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be positive, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if self.min_count < 1:
            raise ConfigError(f"min_count must be positive, got {self.min_count}")
        if self.subsample < 0:
            raise ConfigError(f"subsample must be >= 0, got {self.subsample}")
        if self.workers < 1:
            raise ConfigError(f"workers must be positive, got {self.workers}")


@dataclass
class CbowResult:
    table: EmbeddingTable
    vocab: Vocabulary
    id_map: dict[int, int]
    counts: np.ndarray
    losses: list[float] = field(default_factory=list)


# ---- corpus preparation ----

def _flatten(corpus: Sequence[Sequence[int]]):
    offsets = np.zeros(len(corpus) + 1, dtype=np.int64)
    for i, line in enumerate(corpus):
        offsets[i + 1] = offsets[i] + len(line)
    flat = np.empty(offsets[-1], dtype=np.int64)
    for i, line in enumerate(corpus):
        flat[offsets[i] : offsets[i + 1]] = line
    return flat, offsets


def _build_vocab(flat: np.ndarray, min_count: int):
    """Frequency-descending contiguous rows; ties break on original id."""
    if flat.size == 0:
        raise EmptyCorpusAfterFiltering("corpus has no tokens")
    orig_ids, counts = np.unique(flat, return_counts=True)
    keep = counts >= min_count
    orig_ids, counts = orig_ids[keep], counts[keep]
    if orig_ids.size == 0:
        raise EmptyCorpusAfterFiltering(
            f"no token reaches min_count={min_count}"
        )
    order = np.lexsort((orig_ids, -counts))
    orig_ids, counts = orig_ids[order], counts[order]
    id_map = {int(o): i for i, o in enumerate(orig_ids)}
    return orig_ids, counts.astype(np.int64), id_map


def _remap_corpus(flat, offsets, orig_ids):
    """Drop out-of-vocabulary positions, keeping sentence boundaries.

    orig_ids is the row-ordered original-id array; membership and row
    lookup go through one sorted index."""
    sorter = np.argsort(orig_ids)
    sorted_ids = orig_ids[sorter]
    pos = np.searchsorted(sorted_ids, flat)
    pos = np.minimum(pos, sorted_ids.size - 1)
    mask = sorted_ids[pos] == flat
    remapped = sorter[pos[mask]].astype(np.int32)
    cm = np.concatenate(([0], np.cumsum(mask)))
    new_offsets = cm[offsets].astype(np.int64)
    return remapped, new_offsets


def _keep_probabilities(counts: np.ndarray, subsample: float) -> np.ndarray:
    if subsample <= 0:
        return np.ones(counts.size, dtype=np.float64)
    total = counts.sum()
    f = counts / total
    p = (np.sqrt(f / subsample) + 1.0) * (subsample / f)
    return np.minimum(p, 1.0)


def _negative_table(counts: np.ndarray) -> np.ndarray:
    w = counts.astype(np.float64) ** 0.75
    return np.cumsum(w / w.sum())


def _epoch_view(ids, offsets, keep_prob, seed, epoch):
    """The epoch's corpus after seeded subsampling.

    The same (seed, epoch) always yields the same view, which is what
    lets the counting pass and the training pass agree."""
    if keep_prob is None:
        return ids, offsets
    rng = np.random.default_rng([abs(int(seed)), 1000 + epoch])
    mask = np.empty(ids.size, dtype=bool)
    for start in range(0, ids.size, 1 << 20):
        stop = min(start + (1 << 20), ids.size)
        mask[start:stop] = rng.random(stop - start) < keep_prob[ids[start:stop]]
    cm = np.concatenate(([0], np.cumsum(mask)))
    return ids[mask], cm[offsets].astype(np.int64)


def _center_counts(offsets):
    lengths = np.diff(offsets)
    return np.where(lengths >= 2, lengths, 0)


# ---- the sequential update, twice: numba and plain python ----

@njit(cache=True)
def _train_range_nb(
    W_in, W_out, ids, offsets, s0, s1, negs, k, window, lr, lr_min, t_start, T
):
    dim = W_in.shape[1]
    h = np.zeros(dim, dtype=np.float32)
    neu1e = np.zeros(dim, dtype=np.float32)
    t = t_start
    ni = 0
    loss_sum = 0.0
    n_samples = 0
    for s in range(s0, s1):
        lo = offsets[s]
        hi = offsets[s + 1]
        if hi - lo < 2:
            continue
        for i in range(lo, hi):
            alpha = lr * (1.0 - t / T)
            if alpha < lr_min:
                alpha = lr_min
            a = i - window
            if a < lo:
                a = lo
            b = i + window + 1
            if b > hi:
                b = hi
            cn = np.float32(b - a - 1)
            for c in range(dim):
                h[c] = np.float32(0.0)
                neu1e[c] = np.float32(0.0)
            for j in range(a, b):
                if j == i:
                    continue
                row = ids[j]
                for c in range(dim):
                    h[c] += W_in[row, c]
            for c in range(dim):
                h[c] = h[c] / cn
            for d in range(k + 1):
                if d == 0:
                    target = ids[i]
                    label = 1.0
                else:
                    target = negs[ni + d - 1]
                    if target == ids[i]:
                        continue
                    label = 0.0
                z = 0.0
                for c in range(dim):
                    z += np.float64(h[c]) * np.float64(W_out[target, c])
                if z > 30.0:
                    z = 30.0
                elif z < -30.0:
                    z = -30.0
                p = 1.0 / (1.0 + math.exp(-z))
                if label > 0.5:
                    loss_sum += -math.log(max(p, 1e-12))
                else:
                    loss_sum += -math.log(max(1.0 - p, 1e-12))
                n_samples += 1
                g = np.float32(alpha * (p - label))
                for c in range(dim):
                    neu1e[c] += g * W_out[target, c]
                for c in range(dim):
                    W_out[target, c] -= g * h[c]
            for j in range(a, b):
                if j == i:
                    continue
                row = ids[j]
                for c in range(dim):
                    W_in[row, c] -= neu1e[c] / cn
            t += 1
            ni += k
    return loss_sum, n_samples


@njit(cache=True, parallel=True)
def _train_range_racy(
    W_in, W_out, ids, offsets, s0, s1, negs, k, window, lr, lr_min, t_start, T, sent_t
):
    """Hogwild over sentences; same math, no update ordering guarantees."""
    dim = W_in.shape[1]
    loss_sum = 0.0
    n_samples = 0
    for s in prange(s0, s1):
        lo = offsets[s]
        hi = offsets[s + 1]
        if hi - lo < 2:
            continue
        t = t_start + sent_t[s - s0]
        ni = sent_t[s - s0] * k
        h = np.zeros(dim, dtype=np.float32)
        neu1e = np.zeros(dim, dtype=np.float32)
        for i in range(lo, hi):
            alpha = lr * (1.0 - t / T)
            if alpha < lr_min:
                alpha = lr_min
            a = i - window
            if a < lo:
                a = lo
            b = i + window + 1
            if b > hi:
                b = hi
            cn = np.float32(b - a - 1)
            for c in range(dim):
                h[c] = np.float32(0.0)
                neu1e[c] = np.float32(0.0)
            for j in range(a, b):
                if j == i:
                    continue
                row = ids[j]
                for c in range(dim):
                    h[c] += W_in[row, c]
            for c in range(dim):
                h[c] = h[c] / cn
            for d in range(k + 1):
                if d == 0:
                    target = ids[i]
                    label = 1.0
                else:
                    target = negs[ni + d - 1]
                    if target == ids[i]:
                        continue
                    label = 0.0
                z = 0.0
                for c in range(dim):
                    z += np.float64(h[c]) * np.float64(W_out[target, c])
                if z > 30.0:
                    z = 30.0
                elif z < -30.0:
                    z = -30.0
                p = 1.0 / (1.0 + math.exp(-z))
                if label > 0.5:
                    loss_sum += -math.log(max(p, 1e-12))
                else:
                    loss_sum += -math.log(max(1.0 - p, 1e-12))
                n_samples += 1
                g = np.float32(alpha * (p - label))
                for c in range(dim):
                    neu1e[c] += g * W_out[target, c]
                for c in range(dim):
                    W_out[target, c] -= g * h[c]
            for j in range(a, b):
                if j == i:
                    continue
                row = ids[j]
                for c in range(dim):
                    W_in[row, c] -= neu1e[c] / cn
            t += 1
            ni += k
    return loss_sum, n_samples


def _train_range_py(
    W_in, W_out, ids, offsets, s0, s1, negs, k, window, lr, lr_min, t_start, T
):
    """Pure-python mirror of the kernel, same precisions and order."""
    dim = W_in.shape[1]
    f32 = np.float32
    t = t_start
    ni = 0
    loss_sum = 0.0
    n_samples = 0
    for s in range(s0, s1):
        lo, hi = int(offsets[s]), int(offsets[s + 1])
        if hi - lo < 2:
            continue
        for i in range(lo, hi):
            alpha = lr * (1.0 - t / T)
            if alpha < lr_min:
                alpha = lr_min
            a = max(i - window, lo)
            b = min(i + window + 1, hi)
            cn = f32(b - a - 1)
            h = np.zeros(dim, dtype=np.float32)
            neu1e = np.zeros(dim, dtype=np.float32)
            for j in range(a, b):
                if j == i:
                    continue
                h += W_in[ids[j]]
            h /= cn
            for d in range(k + 1):
                if d == 0:
                    target, label = int(ids[i]), 1.0
                else:
                    target = int(negs[ni + d - 1])
                    if target == int(ids[i]):
                        continue
                    label = 0.0
                z = 0.0
                for c in range(dim):
                    z += float(h[c]) * float(W_out[target, c])
                z = min(max(z, -30.0), 30.0)
                p = 1.0 / (1.0 + math.exp(-z))
                loss_sum += -math.log(max(p, 1e-12)) if label > 0.5 else -math.log(
                    max(1.0 - p, 1e-12)
                )
                n_samples += 1
                g = f32(alpha * (p - label))
                neu1e += g * W_out[target]
                W_out[target] -= g * h
            for j in range(a, b):
                if j == i:
                    continue
                W_in[ids[j]] -= neu1e / cn
            t += 1
            ni += k
    return loss_sum, n_samples


# ---- reference gradients for finite-difference checks ----

def cbow_pair_gradients(W_in, W_out, context_rows, center_row, negative_rows):
    """Loss and exact gradients for one center with parameters held fixed.

    Returns (loss, dW_in rows dict, dW_out rows dict) where the dicts map
    row index to its gradient.  Negatives equal to the center are skipped,
    mirroring the trainers.
    """
    W_in = np.asarray(W_in, dtype=np.float64)
    W_out = np.asarray(W_out, dtype=np.float64)
    h = W_in[list(context_rows)].mean(axis=0)
    cn = len(context_rows)
    loss = 0.0
    dh = np.zeros_like(h)
    d_out: dict[int, np.ndarray] = {}
    samples = [(int(center_row), 1.0)] + [
        (int(r), 0.0) for r in negative_rows if int(r) != int(center_row)
    ]
    for target, label in samples:
        z = float(h @ W_out[target])
        p = 1.0 / (1.0 + math.exp(-min(max(z, -500.0), 500.0)))
        loss += -math.log(max(p, 1e-300)) if label > 0.5 else -math.log(max(1.0 - p, 1e-300))
        g = p - label
        dh += g * W_out[target]
        d_out[target] = d_out.get(target, 0.0) + g * h
    d_in: dict[int, np.ndarray] = {}
    for row in context_rows:
        d_in[int(row)] = d_in.get(int(row), 0.0) + dh / cn
    return loss, d_in, d_out


# ---- driver ----

def train_cbow(
    corpus: Sequence[Sequence[int]],
    config: CbowConfig | None = None,
    surfaces: dict[int, str] | None = None,
    kernel: str = "numba",
) -> CbowResult:
    """Train CBOW embeddings over token-id lines.

    surfaces maps original token ids to strings for the exported
    vocabulary; missing ids get ``tok<original-id>``.  kernel selects the
    numba hot loop or the pure-python mirror (tests only).
    """
    if config is None:
        config = CbowConfig()
    if kernel not in ("numba", "python"):
        raise ConfigError(f"unknown kernel {kernel!r}")

    flat, offsets = _flatten(corpus)
    orig_ids, counts, id_map = _build_vocab(flat, config.min_count)
    ids, offsets = _remap_corpus(flat, offsets, orig_ids)
    if ids.size == 0:
        raise EmptyCorpusAfterFiltering("no in-vocabulary positions remain")

    keep_prob = None
    if config.subsample > 0:
        keep_prob = _keep_probabilities(counts, config.subsample)

    # counting pass: total centers over all epochs fixes the lr schedule
    total_centers = 0
    for epoch in range(config.epochs):
        _, e_offsets = _epoch_view(ids, offsets, keep_prob, config.seed, epoch)
        total_centers += int(_center_counts(e_offsets).sum())
    if total_centers == 0:
        raise EmptyCorpusAfterFiltering(
            "no trainable centers (every sentence shorter than 2 after filtering)"
        )

    V = orig_ids.size
    init_rng = np.random.default_rng([abs(int(config.seed)), 7])
    W_in = (
        (init_rng.random((V, config.dim), dtype=np.float32) - np.float32(0.5))
        / np.float32(config.dim)
    )
    W_out = np.zeros((V, config.dim), dtype=np.float32)

    cum_table = _negative_table(counts)
    lr = float(config.learning_rate)
    lr_min = lr * _LR_FLOOR_FRACTION
    k = int(config.negatives)

    run = _train_range_nb if kernel == "numba" else _train_range_py
    racy = config.workers > 1 and kernel == "numba"
    if racy:
        # numba rejects thread counts above the core count
        set_num_threads(min(config.workers, numba_config.NUMBA_NUM_THREADS))

    losses = []
    t_global = 0
    for epoch in range(config.epochs):
        e_ids, e_offsets = _epoch_view(ids, offsets, keep_prob, config.seed, epoch)
        sent_centers = _center_counts(e_offsets)
        cum_centers = np.concatenate(([0], np.cumsum(sent_centers)))
        n_sent = len(sent_centers)

        rng_neg = np.random.default_rng([abs(int(config.seed)), 2000 + epoch])
        epoch_loss = 0.0
        epoch_samples = 0
        s0 = 0
        while s0 < n_sent:
            # largest s1 keeping at most _CHUNK_CENTERS centers in [s0, s1)
            s1 = int(
                np.searchsorted(
                    cum_centers, cum_centers[s0] + _CHUNK_CENTERS, side="right"
                )
                - 1
            )
            s1 = min(max(s1, s0 + 1), n_sent)
            n_c = int(cum_centers[s1] - cum_centers[s0])
            if n_c == 0:
                s0 = s1
                continue
            if k > 0:
                negs = np.searchsorted(
                    cum_table, rng_neg.random(n_c * k), side="right"
                ).astype(np.int32)
            else:
                negs = np.zeros(0, dtype=np.int32)
            if racy:
                sent_t = (cum_centers[s0:s1] - cum_centers[s0]).astype(np.int64)
                loss_sum, n_samples = _train_range_racy(
                    W_in, W_out, e_ids, e_offsets, s0, s1, negs, k,
                    config.window, lr, lr_min, t_global, total_centers, sent_t,
                )
            else:
                loss_sum, n_samples = run(
                    W_in, W_out, e_ids, e_offsets, s0, s1, negs, k,
                    config.window, lr, lr_min, t_global, total_centers,
                )
            epoch_loss += loss_sum
            epoch_samples += n_samples
            t_global += n_c
            s0 = s1
        losses.append(epoch_loss / max(epoch_samples, 1))

    entries = []
    for row, orig in enumerate(orig_ids):
        surface = (surfaces or {}).get(int(orig), f"tok{int(orig)}")
        entries.append(VocabEntry(row, surface, "", int(counts[row])))
    vocab = Vocabulary(entries)
    table = EmbeddingTable(
        W_in.copy(),
        source_name=f"cbow(dim={config.dim},seed={config.seed})",
    )
    return CbowResult(
        table=table, vocab=vocab, id_map=id_map, counts=counts, losses=losses
    )


def load_id_corpus(path: str | Path) -> list[list[int]]:
    from .bpe import read_id_lines

    return read_id_lines(path)
