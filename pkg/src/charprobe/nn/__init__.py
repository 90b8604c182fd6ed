"""From-scratch numerical engine: MLP, Adam, BCE/CE training, F1, OLS."""

from .mlp import MlpModel, load_model, save_model
from .optim import Adam
from .metrics import Metrics, macro_f1, multiclass_f1
from .ols import ols_fit
from .train import TrainConfig, fit_binary_mlp, fit_multiclass_mlp, train_binary_probe, tune_learning_rate
from .estimators import MlpProbe, MlpTagger

__all__ = [
    "Adam",
    "Metrics",
    "MlpModel",
    "MlpProbe",
    "MlpTagger",
    "TrainConfig",
    "fit_binary_mlp",
    "fit_multiclass_mlp",
    "load_model",
    "macro_f1",
    "multiclass_f1",
    "ols_fit",
    "save_model",
    "train_binary_probe",
    "tune_learning_rate",
]
