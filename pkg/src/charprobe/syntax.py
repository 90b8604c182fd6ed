"""Syntax baselines: taggers over token embeddings and probes over tags.

The pipeline has three stages.  A tagger (the standard MLP with a
softmax head) learns part-of-speech or entity-type labels for subword
tokens, where every subword inherits its word's label.  The tagger then
assigns each vocabulary token a distribution over labels, stored in a
feature table (tags.tsv).  Finally a syntax probe predicts character
containment from those distributions alone: each feature's distribution
is embedded through a trainable (labels x 64) matrix, features are
concatenated, and the standard MLP runs on top, everything trained
jointly with hand-derived gradients.  The matched control permutes which
token received which distribution, destroying the token-tag link while
keeping the marginals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .datasets import build_char_dataset, split_grouped
from .errors import (
    EmptyCoNLL,
    FeatureCoverageGap,
    MalformedRow,
    NonFiniteLoss,
    UnknownLabel,
)
from .experiment import CharResult, DATASET_ERRORS, _derived_seed
from .nn import Adam, Metrics, TrainConfig, macro_f1, multiclass_f1
from .nn.mlp import MlpModel
from .nn.train import _bce_loss, _sigmoid
from .vocab import Alphabet, Vocabulary, filter_alphabetic

NER_TYPES = ("LOC", "MISC", "O", "ORG", "PER")


# ---- tagged-sentence files ----

@dataclass
class Sentence:
    words: list[str]
    pos: list[str]
    ner: list[str]


def collapse_ner(tag: str) -> str:
    """Drop BIO boundary prefixes, keeping the five entity types."""
    if tag == "O":
        return "O"
    if len(tag) > 2 and tag[1] == "-" and tag[0] in "BI":
        return tag[2:]
    raise UnknownLabel(f"unrecognized entity tag {tag!r}")


def read_conll(path: str | Path) -> list[Sentence]:
    """Four whitespace-separated columns (word, PoS, chunk, entity);
    blank lines end sentences and document-start rows are skipped."""
    sentences: list[Sentence] = []
    words: list[str] = []
    pos: list[str] = []
    ner: list[str] = []

    def flush() -> None:
        if words:
            sentences.append(Sentence(list(words), list(pos), list(ner)))
            words.clear()
            pos.clear()
            ner.clear()

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                flush()
                continue
            cols = line.split()
            if cols[0] == "-DOCSTART-":
                continue
            if len(cols) != 4:
                raise MalformedRow(f"{path}:{lineno}: expected 4 columns, got {len(cols)}")
            words.append(cols[0])
            pos.append(cols[1])
            ner.append(collapse_ner(cols[3]))
    flush()
    if not sentences:
        raise EmptyCoNLL(f"{path}: no sentences")
    return sentences


def _sentence_tags(sentence: Sentence, feature: str) -> list[str]:
    if feature == "pos":
        return sentence.pos
    if feature == "ner":
        return sentence.ner
    raise UnknownLabel(f"unknown feature {feature!r} (expected 'pos' or 'ner')")


# ---- tagger ----

@dataclass
class TaggerModel:
    mlp: MlpModel
    labels: list[str]
    feature: str

    def label_index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}


def tagger_config(feature: str) -> TrainConfig:
    """Defaults: 20 epochs, batch 64; 1e-4 for PoS, 5e-5 for entities."""
    lr = 1e-4 if feature == "pos" else 5e-5
    return TrainConfig(epochs=20, batch_size=64, learning_rate=lr, lr_grid=())


def _subword_examples(
    rows: np.ndarray,
    tokenize: Callable[[str], Sequence[int]],
    sentences: Iterable[Sentence],
    feature: str,
    label_index: dict[str, int],
    strict: bool,
):
    """Every subword of a word carries the word's tag."""
    X: list[np.ndarray] = []
    y: list[int] = []
    for sentence in sentences:
        tags = _sentence_tags(sentence, feature)
        for i, (word, tag) in enumerate(zip(sentence.words, tags)):
            idx = label_index.get(tag)
            if idx is None:
                if strict:
                    raise UnknownLabel(f"tag {tag!r} not in training labels")
                continue
            text = word if i == 0 else " " + word
            for token_id in tokenize(text):
                X.append(rows[token_id])
                y.append(idx)
    return np.asarray(X), np.asarray(y, dtype=np.int64)


def train_tagger(
    rows: np.ndarray,
    tokenize: Callable[[str], Sequence[int]],
    train_sentences: list[Sentence],
    feature: str,
    config: TrainConfig | None = None,
    dev_sentences: list[Sentence] | None = None,
    test_sentences: list[Sentence] | None = None,
) -> tuple[TaggerModel, dict]:
    """Fit the subword tagger; score weighted/macro F1 on dev and test."""
    from .nn.train import fit_multiclass_mlp

    if config is None:
        config = tagger_config(feature)
    labels = sorted({t for s in train_sentences for t in _sentence_tags(s, feature)})
    if not labels:
        raise EmptyCoNLL("no labels in training sentences")
    index = {lab: i for i, lab in enumerate(labels)}
    X, y = _subword_examples(rows, tokenize, train_sentences, feature, index, strict=True)
    mlp, losses = fit_multiclass_mlp(X, y, len(labels), config)
    tagger = TaggerModel(mlp=mlp, labels=labels, feature=feature)

    report = {"feature": feature, "labels": labels, "train_loss": losses}
    for name, sentences in (("dev", dev_sentences), ("test", test_sentences)):
        if sentences is None:
            continue
        Xe, ye = _subword_examples(rows, tokenize, sentences, feature, index, strict=True)
        preds = mlp.predict_logits(Xe).argmax(axis=1)
        scores = multiclass_f1(preds, ye, len(labels))
        scores["accuracy"] = float((preds == ye).mean() * 100.0)
        report[name] = scores
    return tagger, report


def infer_tag_distribution(
    tagger: TaggerModel, rows: np.ndarray, token_ids: Sequence[int]
) -> np.ndarray:
    """Softmax label distribution per token; rows sum to one."""
    ids = np.asarray(token_ids, dtype=np.int64)
    logits = tagger.mlp.predict_logits(rows[ids])
    logits = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(logits)
    return ez / ez.sum(axis=1, keepdims=True)


# ---- feature table (tags.tsv) ----

@dataclass
class FeatureTable:
    """Per-token label distributions for one or more tag features."""

    labels: dict[str, list[str]] = field(default_factory=dict)
    rows: dict[int, dict[str, np.ndarray]] = field(default_factory=dict)

    @property
    def features(self) -> list[str]:
        return sorted(self.labels)

    def add(self, token_id: int, feature: str, labels: list[str], probs: np.ndarray) -> None:
        probs = np.asarray(probs, dtype=np.float64)
        if feature in self.labels:
            if self.labels[feature] != list(labels):
                raise MalformedRow(f"inconsistent label set for feature {feature!r}")
        else:
            self.labels[feature] = list(labels)
        if probs.shape != (len(labels),):
            raise MalformedRow(f"token {token_id}: {len(probs)} probs for {len(labels)} labels")
        self.rows.setdefault(int(token_id), {})[feature] = probs

    def matrix(self, feature: str, token_ids: Sequence[int]) -> np.ndarray:
        if feature not in self.labels:
            raise FeatureCoverageGap(f"no rows for feature {feature!r}")
        out = np.empty((len(token_ids), len(self.labels[feature])), dtype=np.float64)
        for i, token_id in enumerate(token_ids):
            got = self.rows.get(int(token_id), {}).get(feature)
            if got is None:
                raise FeatureCoverageGap(f"token {token_id} has no {feature!r} distribution")
            out[i] = got
        return out

    def covered_ids(self) -> list[int]:
        """Tokens holding a distribution for every feature."""
        want = set(self.labels)
        return sorted(tid for tid, feats in self.rows.items() if want <= set(feats))


def build_feature_table(
    taggers: dict[str, TaggerModel], rows: np.ndarray, token_ids: Sequence[int]
) -> FeatureTable:
    table = FeatureTable()
    ids = list(token_ids)
    for feature in sorted(taggers):
        tagger = taggers[feature]
        dists = infer_tag_distribution(tagger, rows, ids)
        for token_id, dist in zip(ids, dists):
            table.add(token_id, feature, tagger.labels, dist)
    return table


def save_tags(table: FeatureTable, path: str | Path) -> None:
    """token_id <tab> feature <tab> label:prob,... with full precision."""
    with open(path, "w", encoding="utf-8") as fh:
        for token_id in sorted(table.rows):
            for feature in sorted(table.rows[token_id]):
                labels = table.labels[feature]
                probs = table.rows[token_id][feature]
                cell = ",".join(f"{lab}:{p:.17g}" for lab, p in zip(labels, probs))
                fh.write(f"{token_id}\t{feature}\t{cell}\n")


def load_tags(path: str | Path) -> FeatureTable:
    table = FeatureTable()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise MalformedRow(f"{path}:{lineno}: expected 3 columns, got {len(cols)}")
            try:
                token_id = int(cols[0])
                pairs = [cell.rsplit(":", 1) for cell in cols[2].split(",")]
                labels = [lab for lab, _ in pairs]
                probs = np.array([float(p) for _, p in pairs])
            except (ValueError, IndexError) as exc:
                raise MalformedRow(f"{path}:{lineno}: {exc}") from exc
            try:
                table.add(token_id, cols[1], labels, probs)
            except MalformedRow as exc:
                raise MalformedRow(f"{path}:{lineno}: {exc}") from exc
    return table


# ---- syntax probe ----

EMBED_DIM = 64


class SyntaxProbe:
    """Trainable label embeddings per feature feeding the standard MLP.

    Input per example and feature is a distribution p over that
    feature's labels; the feature vector is p @ E_f and the concatenated
    features go through the MLP.  E_f trains jointly with the MLP.
    """

    def __init__(
        self,
        feature_labels: dict[str, list[str]],
        embed_dim: int = EMBED_DIM,
        hidden: int | None = None,
        dropout: float = 0.1,
        seed: int = 0,
        dtype=np.float32,
    ):
        self.features = sorted(feature_labels)
        if not self.features:
            raise FeatureCoverageGap("syntax probe needs at least one feature")
        self.embed_dim = int(embed_dim)
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.embeds: dict[str, np.ndarray] = {}
        for feature in self.features:
            n_labels = len(feature_labels[feature])
            bound = 1.0 / math.sqrt(n_labels)
            self.embeds[feature] = rng.uniform(
                -bound, bound, size=(n_labels, self.embed_dim)
            ).astype(self.dtype)
        self.mlp = MlpModel(
            d_in=self.embed_dim * len(self.features),
            hidden1=hidden,
            d_out=1,
            dropout=dropout,
            seed=seed + 1,
            dtype=self.dtype,
        )

    def forward(self, dists: dict[str, np.ndarray], dropout_rng=None):
        blocks = [
            np.asarray(dists[f], dtype=self.dtype) @ self.embeds[f] for f in self.features
        ]
        X = np.concatenate(blocks, axis=1)
        logits, mlp_cache = self.mlp.forward(X, dropout_rng)
        return logits, (mlp_cache, dists)

    def predict_logits(self, dists: dict[str, np.ndarray]) -> np.ndarray:
        logits, _ = self.forward(dists)
        return logits

    def backward(self, cache, dz3: np.ndarray) -> dict[str, np.ndarray]:
        """Joint gradients, embedding keys prefixed with ``emb:<feature>``."""
        mlp_cache, dists = cache
        mlp_grads, dX = self.mlp.backward(mlp_cache, dz3, return_dx=True)
        grads = dict(mlp_grads)
        offset = 0
        for feature in self.features:
            block = dX[:, offset : offset + self.embed_dim]
            P = np.asarray(dists[feature], dtype=self.dtype)
            grads[f"emb:{feature}"] = P.T @ block
            offset += self.embed_dim
        return grads

    def trainable_params(self) -> dict[str, np.ndarray]:
        params = dict(self.mlp.params)
        for feature in self.features:
            params[f"emb:{feature}"] = self.embeds[feature]
        return params


def default_syntax_config(one_hot: bool) -> TrainConfig:
    """Distributions train with batch 64, one-hot inputs with batch 128."""
    return TrainConfig(epochs=5, batch_size=128 if one_hot else 64, lr_grid=())


def _one_hot_rows(dist: np.ndarray) -> np.ndarray:
    out = np.zeros_like(dist)
    out[np.arange(dist.shape[0]), dist.argmax(axis=1)] = 1.0
    return out


def train_syntax_probe(
    table: FeatureTable,
    dataset,
    plan,
    config: TrainConfig,
    one_hot: bool = False,
    permute_seed: int | None = None,
) -> tuple[SyntaxProbe, Metrics]:
    """Fit the probe on the split's train side and score its test side.

    permute_seed reassigns distributions among the dataset's tokens
    before training, which is the matched control.
    """
    token_ids = [ex[0] for ex in dataset.examples]
    labels = np.array([ex[-1] for ex in dataset.examples], dtype=np.int64)
    source_ids = list(token_ids)
    if permute_seed is not None:
        distinct = sorted(set(token_ids))
        perm = np.random.default_rng(permute_seed).permutation(len(distinct))
        remap = {tid: distinct[perm[i]] for i, tid in enumerate(distinct)}
        source_ids = [remap[tid] for tid in token_ids]

    dists = {f: table.matrix(f, source_ids) for f in table.features}
    if one_hot:
        dists = {f: _one_hot_rows(m) for f, m in dists.items()}

    train_idx = sorted(plan.train_ids)
    test_idx = sorted(plan.test_ids)
    feature_labels = {f: table.labels[f] for f in table.features}
    probe = SyntaxProbe(
        feature_labels,
        hidden=config.hidden,
        dropout=config.dropout,
        seed=config.seed,
        dtype=np.dtype(config.dtype),
    )
    params = probe.trainable_params()
    opt = Adam(params, lr=config.learning_rate, betas=config.betas, eps=config.eps)
    rng = np.random.default_rng([abs(int(config.seed)), 0xA5])
    y_train = labels[train_idx].astype(np.float64)
    n = len(train_idx)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            rows_in_batch = [train_idx[i] for i in order[start : start + config.batch_size]]
            batch = {f: dists[f][rows_in_batch] for f in probe.features}
            yb = labels[rows_in_batch].astype(np.float64)
            logits, cache = probe.forward(batch, dropout_rng=rng)
            loss = _bce_loss(logits, yb)
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss became {loss} at epoch {epoch}, step {start // config.batch_size}, "
                    f"lr {config.learning_rate}"
                )
            dz3 = (_sigmoid(logits) - yb[:, None]) / len(yb)
            opt.step(probe.backward(cache, dz3.astype(probe.dtype)))

    test_dists = {f: dists[f][test_idx] for f in probe.features}
    preds = (probe.predict_logits(test_dists).ravel() >= 0.0).astype(np.int64)
    return probe, macro_f1(preds, labels[test_idx])


def run_syntax_experiment(
    table: FeatureTable,
    vocab: Vocabulary,
    alphabet: Alphabet,
    seeds: Sequence[int] = (0, 1, 2),
    config: TrainConfig | None = None,
    one_hot: bool = False,
    chars: Sequence[str] | None = None,
) -> dict:
    """Per-character probing from tag distributions with permuted controls.

    Only tokens covered by every feature participate; an empty coverage
    set is an error rather than an empty report.
    """
    if config is None:
        config = default_syntax_config(one_hot)
    seeds = [int(s) for s in seeds]
    covered = set(table.covered_ids())
    pool_all = filter_alphabetic(vocab, alphabet)
    entries = [e for e in pool_all if e.id in covered]
    if not entries:
        raise FeatureCoverageGap("no alphabetic tokens have tag distributions")
    pool = Vocabulary(entries, markers=pool_all.markers)

    wanted = list(chars) if chars is not None else list(alphabet.characters)
    unknown = [c for c in wanted if c not in alphabet.characters]
    if unknown:
        raise ValueError(f"characters not in alphabet: {unknown}")

    results = {c: CharResult(char=c) for c in wanted}
    for char in wanted:
        result = results[char]
        result.learning_rate = config.learning_rate
        for seed in seeds:
            try:
                ds = build_char_dataset(
                    pool, char, case_sensitive=alphabet.case_sensitive, seed=seed
                )
                plan = split_grouped(ds, pool, seed=seed)
                cell = replace(config, seed=_derived_seed(seed, ord(char)))
                _, metrics = train_syntax_probe(table, ds, plan, cell, one_hot=one_hot)
                _, control = train_syntax_probe(
                    table,
                    ds,
                    plan,
                    cell,
                    one_hot=one_hot,
                    permute_seed=_derived_seed(seed, ord(char), 0xC0),
                )
            except DATASET_ERRORS as exc:
                result.error = f"{type(exc).__name__}: {exc}"
                break
            result.n_examples = len(ds.examples)
            result.f1.append(metrics.macro_f1)
            result.control_f1.append(control.macro_f1)

    return {
        "task": "syntax",
        "features": table.features,
        "one_hot": one_hot,
        "alphabet": list(alphabet.characters),
        "case_sensitive": alphabet.case_sensitive,
        "seeds": seeds,
        "config": {
            "epochs": config.epochs,
            "batch_size": config.batch_size,
            "learning_rate": config.learning_rate,
            "dropout": config.dropout,
        },
        "per_char": [results[c].as_dict() for c in wanted],
    }
