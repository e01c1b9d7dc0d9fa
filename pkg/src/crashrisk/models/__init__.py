"""Classifier families behind one train/score contract."""
from .base import KINDS, ModelError, TrainedModel, load_model, predict, score, sigmoid
from .boosting import BoostedTreesModel, GBTConfig, log_loss, split_gain, train_gbt
from .forest import RandomForestModel, RFConfig, train_rf
from .gpboost import GPBConfig, GroupedBoostingModel, train_gpb
from .linear import (LinearSVMModel, LinSVMConfig, LogisticModel, LogRegConfig,
                     logreg_gradient, logreg_objective, svm_objective, train_linsvm,
                     train_logreg)
from .runs import RunSummary, make_config, repeat_runs, train_model
from .trees import TreeEnsemble

__all__ = [
    "KINDS", "ModelError", "TrainedModel", "load_model", "predict", "score", "sigmoid",
    "BoostedTreesModel", "GBTConfig", "log_loss", "split_gain", "train_gbt",
    "RandomForestModel", "RFConfig", "train_rf",
    "GPBConfig", "GroupedBoostingModel", "train_gpb",
    "LinearSVMModel", "LinSVMConfig", "LogisticModel", "LogRegConfig",
    "logreg_gradient", "logreg_objective", "svm_objective", "train_linsvm", "train_logreg",
    "RunSummary", "make_config", "repeat_runs", "train_model", "TreeEnsemble",
]
