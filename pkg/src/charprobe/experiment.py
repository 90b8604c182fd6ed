"""Experiment runners: per-character probes, substring probes, reports.

A character run trains one binary probe per alphabet character and seed
on frozen embeddings, plus a matched random-embedding control per seed,
then aggregates macro-F1, recall by spelling position, macro-F1 by
token frequency bin and surface length with OLS trend fits, and the
test tokens the probe is most confident about.  Characters whose dataset cannot be
built (no positives, unsatisfiable split) are recorded as failures and
the run continues.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .datasets import build_char_dataset, build_substring_dataset, split_grouped
from .embeddings import EmbeddingTable, make_control
from .errors import (
    EmptySplit,
    NoNegatives,
    NonFiniteLoss,
    NoPositives,
    UnsatisfiableRatio,
)
from .nn import TrainConfig, ols_fit, train_binary_probe, tune_learning_rate
from .nn.metrics import _prf
from .nn.train import example_labels, example_matrix
from .vocab import Alphabet, Vocabulary, filter_alphabetic

DATASET_ERRORS = (NoPositives, NoNegatives, UnsatisfiableRatio, EmptySplit, NonFiniteLoss)

MIN_BIN_EXAMPLES = 10
TOP_K = 10


@dataclass
class CharResult:
    char: str
    learning_rate: float | None = None
    f1: list[float] = field(default_factory=list)
    control_f1: list[float] = field(default_factory=list)
    n_examples: int = 0
    error: str | None = None

    def as_dict(self) -> dict:
        def stats(values):
            if not values:
                return None, None
            arr = np.asarray(values, dtype=np.float64)
            return float(arr.mean()), float(arr.std())

        f1_mean, f1_std = stats(self.f1)
        control_mean, control_std = stats(self.control_f1)
        return {
            "char": self.char,
            "learning_rate": self.learning_rate,
            "f1_per_seed": [float(v) for v in self.f1],
            "f1_mean": f1_mean,
            "f1_std": f1_std,
            "control_f1_per_seed": [float(v) for v in self.control_f1],
            "control_f1_mean": control_mean,
            "control_f1_std": control_std,
            "n_examples": self.n_examples,
            "error": self.error,
        }


def _derived_seed(base: int, *parts: int) -> int:
    seq = np.random.SeedSequence([abs(int(base)), *[abs(int(p)) for p in parts]])
    return int(seq.generate_state(1)[0])


def _stripped_surface(vocab: Vocabulary, token_id: int, case_sensitive: bool) -> str:
    surface = vocab.stripped(token_id)
    return surface if case_sensitive else surface.casefold()


def _bin_macro_f1(cm: list[int]) -> float:
    tp, fp, fn, tn = cm
    _, _, f_pos = _prf(tp, fp, fn)
    _, _, f_neg = _prf(tn, fn, fp)
    return (f_pos + f_neg) / 2.0


class _Accumulator:
    """Pools per-example test outcomes across characters and seeds.

    Position recall covers positive examples only, keyed by the
    1-indexed first occurrence of the character in the stripped surface.
    Frequency and length tables hold confusion counts [tp, fp, fn, tn];
    tokens with no recorded frequency stay out of the frequency table.
    """

    def __init__(self) -> None:
        self.position: dict[int, list[int]] = {}
        self.by_freq_bin: dict[int, list[int]] = {}
        self.by_length: dict[int, list[int]] = {}

    @staticmethod
    def _count(table: dict[int, list[int]], key: int, label: int, predicted: int) -> None:
        cm = table.setdefault(key, [0, 0, 0, 0])
        idx = (
            0 if predicted == 1 and label == 1
            else 1 if predicted == 1
            else 2 if label == 1
            else 3
        )
        cm[idx] += 1

    def add(self, vocab, char, case_sensitive, token_id, label, predicted) -> None:
        entry = vocab.entry(token_id)
        surface = _stripped_surface(vocab, token_id, case_sensitive)
        if entry.frequency >= 1:
            self._count(self.by_freq_bin, math.floor(math.log(entry.frequency)), label, predicted)
        self._count(self.by_length, len(surface), label, predicted)
        if label == 1 and char in surface:
            pos = surface.index(char) + 1
            hit_total = self.position.setdefault(pos, [0, 0])
            hit_total[0] += int(predicted == 1)
            hit_total[1] += 1

    def breakdowns(self) -> dict:
        return {
            "position_recall": {
                str(pos): {"recall": hit / total if total else None, "n": total}
                for pos, (hit, total) in sorted(self.position.items())
            },
            "f1_by_log_frequency": {
                str(k): {"macro_f1": _bin_macro_f1(cm), "n": sum(cm)}
                for k, cm in sorted(self.by_freq_bin.items())
            },
            "f1_by_length": {
                str(k): {"macro_f1": _bin_macro_f1(cm), "n": sum(cm)}
                for k, cm in sorted(self.by_length.items())
            },
        }

    def regressions(self) -> dict:
        out = {}
        xs, ys = [], []
        for pos, (hit, total) in sorted(self.position.items()):
            if total >= MIN_BIN_EXAMPLES:
                xs.append(float(pos))
                ys.append(hit / total)
        if len(xs) >= 3 and max(xs) > min(xs):
            out["position"] = ols_fit(xs, ys)
        else:
            out["position"] = {"skipped": f"only {len(xs)} usable bins"}
        xs, ys = [], []
        for key, cm in sorted(self.by_freq_bin.items()):
            if sum(cm) >= MIN_BIN_EXAMPLES:
                xs.append(float(key))
                ys.append(_bin_macro_f1(cm))
        if len(xs) >= 3 and max(xs) > min(xs):
            out["log_frequency"] = ols_fit(xs, ys)
        else:
            out["log_frequency"] = {"skipped": f"only {len(xs)} usable bins"}
        return out


def _predictions(model, features, dataset, plan):
    test_idx = sorted(plan.test_ids)
    X = example_matrix(features, dataset, test_idx)
    y = example_labels(dataset, test_idx)
    preds = (model.predict_logits(X).ravel() >= 0.0).astype(np.int64)
    return test_idx, y, preds


def run_char_experiment(
    table: EmbeddingTable,
    vocab: Vocabulary,
    alphabet: Alphabet,
    seeds: Sequence[int] = (0, 1, 2),
    config: TrainConfig | None = None,
    jobs: int = 1,
    chars: Sequence[str] | None = None,
    top_k: int = TOP_K,
    progress=None,
) -> dict:
    """Full per-character probing run; returns the report dictionary."""
    if config is None:
        config = TrainConfig()
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed")
    base_seed = seeds[0]
    # Characters are always gathered case-insensitively; the alphabet's
    # case flag only controls labelling.
    pool = filter_alphabetic(vocab, alphabet)
    wanted = list(chars) if chars is not None else list(alphabet.characters)
    unknown = [c for c in wanted if c not in alphabet.characters]
    if unknown:
        raise ValueError(f"characters not in alphabet: {unknown}")

    results = {c: CharResult(char=c) for c in wanted}
    accum = _Accumulator()
    top_tokens: dict[str, list[dict]] = {}

    def prepare(char):
        """Trainability check plus learning-rate choice on the base seed."""
        result = results[char]
        try:
            ds = build_char_dataset(
                pool, char, case_sensitive=alphabet.case_sensitive, seed=base_seed
            )
            plan = split_grouped(ds, pool, seed=base_seed)
        except DATASET_ERRORS as exc:
            result.error = f"{type(exc).__name__}: {exc}"
            return
        result.n_examples = len(ds.examples)
        if config.lr_grid:
            lr = tune_learning_rate(
                [(table.rows, ds, plan)], replace(config, seed=base_seed)
            )
        else:
            lr = config.learning_rate
        result.learning_rate = lr

    def run_cell(char, seed):
        """One (character, seed) cell: real probe plus fresh control."""
        result = results[char]
        cell_seed = _derived_seed(seed, ord(char))
        cell_config = replace(
            config, learning_rate=result.learning_rate, lr_grid=(), seed=cell_seed
        )
        try:
            ds = build_char_dataset(
                pool, char, case_sensitive=alphabet.case_sensitive, seed=seed
            )
            plan = split_grouped(ds, pool, seed=seed)
            model, metrics = train_binary_probe(table.rows, ds, plan, cell_config)
            control = make_control(
                table.vocab_size, table.dim, seed=_derived_seed(seed, ord(char), 0xC0)
            )
            _, control_metrics = train_binary_probe(
                control.rows, ds, plan, cell_config
            )
        except DATASET_ERRORS as exc:
            return char, seed, None, f"{type(exc).__name__}: {exc}", None, None, None
        return char, seed, metrics, None, control_metrics, (model, ds, plan), cell_seed

    def emit(msg):
        if progress is not None:
            progress(msg)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
            list(pool_exec.map(prepare, wanted))
    else:
        for char in wanted:
            prepare(char)

    cells = [(c, s) for c in wanted if results[c].error is None for s in seeds]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool_exec:
            outcomes = list(pool_exec.map(lambda cs: run_cell(*cs), cells))
    else:
        outcomes = [run_cell(c, s) for c, s in cells]

    for char, seed, metrics, error, control_metrics, artifacts, _ in outcomes:
        result = results[char]
        if error is not None:
            result.error = error
            continue
        result.f1.append(metrics.macro_f1)
        result.control_f1.append(control_metrics.macro_f1)
        emit(f"char {char!r} seed {seed}: f1={metrics.macro_f1:.2f} control={control_metrics.macro_f1:.2f}")
        model, ds, plan = artifacts
        test_idx, y, preds = _predictions(model, table.rows, ds, plan)
        for idx, label, pred in zip(test_idx, y, preds):
            token_id = ds.examples[idx][0]
            accum.add(pool, char, alphabet.case_sensitive, token_id, int(label), int(pred))
        if seed == base_seed:
            X = example_matrix(table.rows, ds, test_idx)
            z = model.predict_logits(X).ravel()
            prob = 1.0 / (1.0 + np.exp(-np.clip(z, -40, 40)))
            order = sorted(
                range(len(test_idx)), key=lambda i: (-prob[i], ds.examples[test_idx[i]][0])
            )
            top = order if top_k >= len(order) else order[:top_k]
            top_tokens[char] = [
                {
                    "token_id": int(ds.examples[test_idx[i]][0]),
                    "surface": vocab.entry(ds.examples[test_idx[i]][0]).surface,
                    "probability": float(prob[i]),
                    "label": int(y[i]),
                }
                for i in top
            ]

    return {
        "task": "char",
        "model": table.source_name,
        "dim": table.dim,
        "alphabet": list(alphabet.characters),
        "script": alphabet.script_name,
        "case_sensitive": alphabet.case_sensitive,
        "seeds": seeds,
        "config": {
            "epochs": config.epochs,
            "batch_size": config.batch_size,
            "lr_grid": list(config.lr_grid),
            "dropout": config.dropout,
        },
        "per_char": [results[c].as_dict() for c in wanted],
        "breakdowns": accum.breakdowns(),
        "regressions": accum.regressions(),
        "top_tokens": top_tokens,
    }


def run_substring_experiment(
    table: EmbeddingTable,
    vocab: Vocabulary,
    alphabet: Alphabet,
    seeds: Sequence[int] = (0, 1, 2),
    config: TrainConfig | None = None,
) -> dict:
    """Probe whether one token is a contiguous substring of another.

    Inputs are concatenated embedding pairs; the split groups all pairs
    sharing a superstring so no superstring straddles train and test.
    """
    if config is None:
        config = TrainConfig()
    seeds = [int(s) for s in seeds]
    base_seed = seeds[0]
    pool = filter_alphabetic(vocab, alphabet)

    ds0 = build_substring_dataset(pool, seed=base_seed)
    plan0 = split_grouped(ds0, pool, seed=base_seed)
    if config.lr_grid:
        lr = tune_learning_rate([(table.rows, ds0, plan0)], replace(config, seed=base_seed))
    else:
        lr = config.learning_rate

    f1, control_f1 = [], []
    n_examples = len(ds0.examples)
    for seed in seeds:
        ds = build_substring_dataset(pool, seed=seed)
        plan = split_grouped(ds, pool, seed=seed)
        cell_config = replace(
            config, learning_rate=lr, lr_grid=(), seed=_derived_seed(seed, 0x5B)
        )
        _, metrics = train_binary_probe(table.rows, ds, plan, cell_config)
        control = make_control(table.vocab_size, table.dim, seed=_derived_seed(seed, 0x5B, 0xC0))
        _, control_metrics = train_binary_probe(control.rows, ds, plan, cell_config)
        f1.append(metrics.macro_f1)
        control_f1.append(control_metrics.macro_f1)

    arr = np.asarray(f1)
    ctl = np.asarray(control_f1)
    return {
        "task": "substring",
        "model": table.source_name,
        "dim": table.dim,
        "seeds": seeds,
        "learning_rate": lr,
        "n_examples": n_examples,
        "f1_per_seed": [float(v) for v in f1],
        "f1_mean": float(arr.mean()),
        "f1_std": float(arr.std()),
        "control_f1_per_seed": [float(v) for v in control_f1],
        "control_f1_mean": float(ctl.mean()),
        "control_f1_std": float(ctl.std()),
    }


def save_report(report: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def load_report(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
