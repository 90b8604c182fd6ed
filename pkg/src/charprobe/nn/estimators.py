"""scikit-learn style wrappers around the hand-written MLP.

MlpProbe is the binary probe (sigmoid + BCE), MlpTagger the multiclass
variant (softmax + CE).  Both expose fit/predict/predict_proba and the
get_params/set_params contract so they compose with sklearn tooling;
the numerics underneath stay our own.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .train import TrainConfig, _sigmoid, fit_binary_mlp, fit_multiclass_mlp


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    return X


class MlpProbe(BaseEstimator, ClassifierMixin):
    """Binary probe: 3-layer MLP, Adam, BCE, fixed epochs."""

    def __init__(
        self,
        epochs: int = 5,
        batch_size: int = 128,
        learning_rate: float = 1e-3,
        dropout: float = 0.1,
        hidden: int | None = None,
        seed: int = 0,
        dtype: str = "float32",
    ):
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.dropout = dropout
        self.hidden = hidden
        self.seed = seed
        self.dtype = dtype

    def _config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            dropout=self.dropout,
            hidden=self.hidden,
            seed=self.seed,
            dtype=self.dtype,
        )

    def fit(self, X, y):
        X = _as_matrix(X)
        y = np.asarray(y).ravel()
        classes = np.unique(y)
        if not set(classes.tolist()) <= {0, 1}:
            raise ValueError(f"binary probe expects 0/1 labels, got {classes}")
        self.classes_ = np.array([0, 1])
        self.model_, self.loss_curve_ = fit_binary_mlp(X, y, self._config())
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predicting")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        return self.model_.predict_logits(_as_matrix(X)).ravel()

    def predict_proba(self, X) -> np.ndarray:
        p1 = _sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0.0).astype(np.int64)


class MlpTagger(BaseEstimator, ClassifierMixin):
    """Multiclass head over the same architecture; labels are 0..K-1."""

    def __init__(
        self,
        epochs: int = 20,
        batch_size: int = 64,
        learning_rate: float = 1e-4,
        dropout: float = 0.1,
        hidden: int | None = None,
        seed: int = 0,
        dtype: str = "float32",
    ):
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.dropout = dropout
        self.hidden = hidden
        self.seed = seed
        self.dtype = dtype

    def fit(self, X, y):
        X = _as_matrix(X)
        y = np.asarray(y, dtype=np.int64).ravel()
        self.classes_ = np.unique(y)
        n_classes = int(self.classes_.max()) + 1
        config = TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            dropout=self.dropout,
            hidden=self.hidden,
            seed=self.seed,
            dtype=self.dtype,
        )
        self.model_, self.loss_curve_ = fit_multiclass_mlp(X, y, n_classes, config)
        return self

    def predict_proba(self, X) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predicting")
        logits = self.model_.predict_logits(_as_matrix(X))
        shifted = logits - logits.max(axis=1, keepdims=True)
        expd = np.exp(shifted)
        return expd / expd.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)
