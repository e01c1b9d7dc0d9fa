"""Common model contract, input alignment and JSON persistence."""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

MODEL_FORMAT = "crashrisk-model"
MODEL_VERSION = 1
KINDS = ("logreg", "linsvm", "rf", "gbt", "gpb")
_REGISTRY = {}


class ModelError(ValueError):
    pass


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def check_training_data(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y):
        raise ModelError("X must be 2-D with one row per label")
    if not np.isfinite(X).all():
        raise ModelError("training features contain non-finite values")
    if len(np.unique(y)) < 2:
        raise ModelError("training data must contain both classes")
    return X, y.astype(float)


def register(cls):
    _REGISTRY[cls.kind] = cls
    return cls


class TrainedModel:
    """A fitted classifier.

    ``margin`` is the raw additive score (log-odds, or signed distance for
    the SVM, or vote share for the forest); ``score`` maps it to the
    reported scale and ``predict`` thresholds ``score``.
    """
    kind = None
    default_threshold = 0.5

    def __init__(self, feature_names, config, params, info=None):
        self.feature_names = list(feature_names)
        self.config = config
        self.params = params
        self.info = info or {}

    # -- input handling ----------------------------------------------------
    def align(self, X, feature_names=None):
        """Feature matrix in this model's column order.

        Accepts a LabeledDataset, a DataFrame, or an array with optional
        column names; named inputs are reordered by name.
        """
        if hasattr(X, "feature_names") and hasattr(X, "X"):
            feature_names, X = X.feature_names, X.X
        elif hasattr(X, "columns"):
            feature_names, X = [str(c) for c in X.columns], X.to_numpy(dtype=float)
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if feature_names is not None:
            pos = {n: i for i, n in enumerate(feature_names)}
            missing = [n for n in self.feature_names if n not in pos]
            if missing:
                raise ModelError(f"input lacks features {missing[:5]}")
            X = X[:, [pos[n] for n in self.feature_names]]
        elif X.shape[1] != len(self.feature_names):
            raise ModelError(f"expected {len(self.feature_names)} features, got {X.shape[1]}")
        return np.ascontiguousarray(X)

    def _groups(self, X, groups):
        if groups is None and hasattr(X, "group_ids"):
            return X.group_ids
        return groups

    # -- scoring -------------------------------------------------------------
    def margin(self, X, feature_names=None, groups=None):
        raise NotImplementedError

    def score(self, X, feature_names=None, groups=None):
        return sigmoid(self.margin(X, feature_names, groups))

    def predict(self, X, threshold=None, feature_names=None, groups=None):
        thr = self.default_threshold if threshold is None else threshold
        return (self.score(X, feature_names, groups) >= thr).astype(np.int64)

    # -- persistence -----------------------------------------------------------
    def _params_to_json(self):
        return self.params

    @classmethod
    def _params_from_json(cls, d):
        return d

    def to_dict(self):
        cfg = dataclasses.asdict(self.config) if dataclasses.is_dataclass(self.config) \
            else dict(self.config)
        return {"format": MODEL_FORMAT, "version": MODEL_VERSION, "kind": self.kind,
                "feature_names": self.feature_names, "config": cfg,
                "params": self._params_to_json(), "info": self.info}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def save(self, path):
        Path(path).write_text(self.to_json() + "\n")

    @staticmethod
    def from_dict(d):
        if d.get("format") != MODEL_FORMAT:
            raise ModelError("not a model file")
        if d.get("version") != MODEL_VERSION:
            raise ModelError(f"unsupported model version {d.get('version')}")
        cls = _REGISTRY.get(d["kind"])
        if cls is None:
            raise ModelError(f"unknown model kind {d['kind']!r}")
        return cls(d["feature_names"], cls.config_cls(**d["config"]),
                   cls._params_from_json(d["params"]), d.get("info", {}))

    def __eq__(self, other):
        return isinstance(other, TrainedModel) and self.to_json() == other.to_json()


def load_model(path):
    path = Path(path)
    if not path.is_file():
        raise ModelError(f"missing model file: {path}")
    return TrainedModel.from_dict(json.loads(path.read_text()))


def score(model, X, feature_names=None, groups=None):
    return model.score(X, feature_names, groups)


def predict(model, X, threshold=None, feature_names=None, groups=None):
    return model.predict(X, threshold, feature_names, groups)
