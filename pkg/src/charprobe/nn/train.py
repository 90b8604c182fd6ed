"""Training loops for the binary probes and the multiclass taggers.

The loop is deliberately plain: shuffle, minibatch, BCE (or softmax CE),
Adam, fixed epoch count, final-epoch model kept.  No early stopping, no
weight decay, no schedule.  Determinism: one seeded generator drives
shuffling and dropout masks, a fixed seed drives initialization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from ..datasets import CharDataset, SplitPlan, SubstringDataset
from ..errors import EmptySplit, NonFiniteLoss
from .metrics import Metrics, macro_f1
from .mlp import MlpModel

log = logging.getLogger(__name__)

# the sweep used when a config asks for learning-rate tuning
DEFAULT_LR_GRID = (1e-5, 3e-5, 5e-5, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2)


@dataclass
class TrainConfig:
    epochs: int = 5
    batch_size: int = 128
    learning_rate: float = 1e-3
    lr_grid: tuple[float, ...] = ()
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    dropout: float = 0.1
    hidden: int | None = None  # defaults to the input width
    seed: int = 0
    dtype: str = "float32"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce_loss(logits: np.ndarray, y: np.ndarray) -> float:
    # stable form: max(z,0) - z*y + log1p(exp(-|z|))
    z = logits.ravel()
    return float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _check_xy(X: np.ndarray, y: np.ndarray) -> None:
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} rows vs {y.shape[0]} labels")
    if X.shape[0] == 0:
        raise EmptySplit("no training examples")
    if not np.all(np.isfinite(X)):
        raise NonFiniteLoss("non-finite feature values before training began")


def _adam_loop(model: MlpModel, X, y, config: TrainConfig, grad_head) -> list[float]:
    """Run the epochs; grad_head maps (logits, y_batch) -> (loss, dlogits)."""
    from .optim import Adam

    opt = Adam(model.params, lr=config.learning_rate, betas=config.betas, eps=config.eps)
    rng = np.random.default_rng([abs(int(config.seed)), 0xA5])
    n = X.shape[0]
    bs = max(1, int(config.batch_size))
    losses = []
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, bs):
            take = perm[start : start + bs]
            xb, yb = X[take], y[take]
            logits, cache = model.forward(xb, dropout_rng=rng)
            loss, dlogits = grad_head(logits, yb)
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss became {loss} at epoch {epoch}, step {start // bs}, "
                    f"lr {config.learning_rate}"
                )
            grads = model.backward(cache, dlogits)
            opt.step(grads)
            epoch_loss += loss * len(take)
        losses.append(epoch_loss / n)
    return losses


def fit_binary_mlp(X: np.ndarray, y: np.ndarray, config: TrainConfig) -> tuple[MlpModel, list[float]]:
    """Train the 3-layer MLP with sigmoid/BCE on a 0/1 label vector."""
    dtype = np.dtype(config.dtype)
    X = np.ascontiguousarray(X, dtype=dtype)
    y = np.asarray(y, dtype=dtype).ravel()
    _check_xy(X, y)
    model = MlpModel(
        X.shape[1],
        hidden1=config.hidden,
        d_out=1,
        dropout=config.dropout,
        seed=config.seed,
        dtype=dtype,
    )

    def head(logits, yb):
        loss = _bce_loss(logits, yb)
        dlogits = (_sigmoid(logits) - yb[:, None]) / len(yb)
        return loss, dlogits

    losses = _adam_loop(model, X, y, config, head)
    return model, losses


def fit_multiclass_mlp(
    X: np.ndarray, y: np.ndarray, n_classes: int, config: TrainConfig
) -> tuple[MlpModel, list[float]]:
    """Same body, softmax cross-entropy head with n_classes logits."""
    dtype = np.dtype(config.dtype)
    X = np.ascontiguousarray(X, dtype=dtype)
    y_idx = np.asarray(y, dtype=np.int64).ravel()
    _check_xy(X, y_idx)
    if y_idx.min() < 0 or y_idx.max() >= n_classes:
        raise ValueError(f"labels outside [0, {n_classes})")
    model = MlpModel(
        X.shape[1],
        hidden1=config.hidden,
        d_out=n_classes,
        dropout=config.dropout,
        seed=config.seed,
        dtype=dtype,
    )

    def head(logits, yb):
        logp = _log_softmax(logits)
        loss = float(-logp[np.arange(len(yb)), yb].mean())
        soft = np.exp(logp)
        soft[np.arange(len(yb)), yb] -= 1.0
        return loss, soft / len(yb)

    losses = _adam_loop(model, X, y_idx, config, head)
    return model, losses


# ---- probe-level helpers ----

def example_matrix(features, dataset, indices) -> np.ndarray:
    """Feature rows for the dataset examples at the given indices.

    Char examples use the token's vector; substring pairs concatenate
    u's and v's vectors.
    """
    indices = sorted(indices)
    if isinstance(dataset, CharDataset):
        rows = [features[dataset.examples[i][0]] for i in indices]
        return np.stack(rows) if rows else np.empty((0, 0))
    rows = [
        np.concatenate([features[dataset.examples[i][0]], features[dataset.examples[i][1]]])
        for i in indices
    ]
    return np.stack(rows) if rows else np.empty((0, 0))


def example_labels(dataset, indices) -> np.ndarray:
    indices = sorted(indices)
    return np.array([dataset.examples[i][-1] for i in indices], dtype=np.int64)


def train_binary_probe(
    features, dataset: CharDataset | SubstringDataset, split: SplitPlan, config: TrainConfig
) -> tuple[MlpModel, Metrics]:
    """Train on the split's train side, score macro-F1 on its test side."""
    if not split.train_ids or not split.test_ids:
        raise EmptySplit("both split sides need examples")
    X_train = example_matrix(features, dataset, split.train_ids)
    y_train = example_labels(dataset, split.train_ids)
    model, _ = fit_binary_mlp(X_train, y_train, config)
    X_test = example_matrix(features, dataset, split.test_ids)
    y_test = example_labels(dataset, split.test_ids)
    preds = (model.predict_logits(X_test).ravel() >= 0.0).astype(np.int64)
    return model, macro_f1(preds, y_test)


def tune_learning_rate(
    cells: list[tuple[object, CharDataset | SubstringDataset, SplitPlan]],
    config: TrainConfig,
    grid: tuple[float, ...] = (),
) -> float:
    """Pick the grid lr with the best mean holdout macro-F1.

    For every (features, dataset, split) cell, 10% of the train side
    (seeded, at least one example per class where possible) is held out;
    candidates train on the rest.  Ties resolve to the earlier grid entry.
    """
    grid = tuple(grid) or (tuple(config.lr_grid) or DEFAULT_LR_GRID)
    prepared = []
    rng = np.random.default_rng([abs(int(config.seed)), 0x7E])
    for features, dataset, split in cells:
        train_idx = sorted(split.train_ids)
        n_hold = max(1, int(round(0.1 * len(train_idx))))
        held = set(
            int(i) for i in rng.choice(len(train_idx), size=n_hold, replace=False)
        )
        fit_ids = [train_idx[i] for i in range(len(train_idx)) if i not in held]
        hold_ids = [train_idx[i] for i in sorted(held)]
        labels = example_labels(dataset, hold_ids)
        if len(set(labels.tolist())) < 2 and len(train_idx) > 2:
            # force one example of the missing class into the holdout
            missing = 1 - labels[0]
            all_labels = example_labels(dataset, train_idx)
            for pos, lab in enumerate(all_labels):
                if lab == missing and train_idx[pos] in fit_ids:
                    fit_ids.remove(train_idx[pos])
                    hold_ids.append(train_idx[pos])
                    break
        prepared.append(
            (
                example_matrix(features, dataset, fit_ids),
                example_labels(dataset, fit_ids),
                example_matrix(features, dataset, hold_ids),
                example_labels(dataset, hold_ids),
            )
        )
    best_lr, best_score = grid[0], -1.0
    for lr in grid:
        scores = []
        for X_fit, y_fit, X_hold, y_hold in prepared:
            cfg = replace(config, learning_rate=lr)
            try:
                model, _ = fit_binary_mlp(X_fit, y_fit, cfg)
            except NonFiniteLoss:
                scores.append(0.0)
                continue
            preds = (model.predict_logits(X_hold).ravel() >= 0.0).astype(np.int64)
            scores.append(macro_f1(preds, y_hold).macro_f1)
        mean_score = float(np.mean(scores))
        log.debug("lr %g -> holdout macro-F1 %.2f", lr, mean_score)
        if mean_score > best_score + 1e-12:
            best_lr, best_score = lr, mean_score
    return best_lr
