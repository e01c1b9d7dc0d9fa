"""Newton-boosted regression trees on the logistic loss."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _trees
from .base import ModelError, TrainedModel, check_training_data, register, sigmoid
from .trees import TreeEnsemble


@dataclass(frozen=True)
class GBTConfig:
    learning_rate: float = 0.05
    max_depth: int = 11
    n_rounds: int = 200
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0
    min_split_gain: float = 0.0


def log_loss(y, margin):
    """Mean logistic loss of labels ``y`` at log-odds ``margin``."""
    margin = np.asarray(margin, dtype=float)
    return float(np.mean(np.logaddexp(0.0, margin) - np.asarray(y) * margin))


def grad_hess(y, margin):
    p = sigmoid(margin)
    return p - y, p * (1.0 - p)


def split_gain(gl, hl, gr, hr, reg_lambda):
    """Loss reduction of splitting a node into (gl, hl) and (gr, hr)."""
    g, h = gl + gr, hl + hr
    return 0.5 * (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda)
                  - g * g / (h + reg_lambda))


class NewtonTreeGrower:
    """Grows second-order trees on a fixed matrix, sorting it only once."""

    def __init__(self, X, config: GBTConfig):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.config = config
        self.order, self.rank, self.uniq, _ = _trees.presort(self.X)

    def grow(self, grad, hess):
        c = self.config
        f, t, l, r, v, cov, gain = _trees.grow_newton_tree(
            self.order, self.rank, self.uniq, np.ascontiguousarray(grad, dtype=float),
            np.ascontiguousarray(hess, dtype=float), c.max_depth, c.reg_lambda,
            c.min_child_weight, c.min_split_gain)
        return {"feature": f, "threshold": t, "left": l, "right": r, "value": v,
                "cover": cov, "gain": gain}

    def output(self, tree):
        return _trees.predict_tree(self.X, tree["feature"], tree["threshold"],
                                   tree["left"], tree["right"], tree["value"])


def _add(ens, tree):
    ens.add(tree["feature"], tree["threshold"], tree["left"], tree["right"],
            tree["value"], tree["cover"])


@register
class BoostedTreesModel(TrainedModel):
    """margin = base_score + learning_rate * sum of leaf values."""
    kind = "gbt"
    config_cls = GBTConfig

    @property
    def ensemble(self) -> TreeEnsemble:
        return self.params["trees"]

    @property
    def base_score(self):
        return self.params["base_score"]

    @property
    def tree_scale(self):
        return self.config.learning_rate

    def fixed_margin(self, X):
        return self.base_score + self.tree_scale * self.ensemble.predict_sum(X)

    def margin(self, X, feature_names=None, groups=None):
        return self.fixed_margin(self.align(X, feature_names))

    def _params_to_json(self):
        d = dict(self.params)
        d["trees"] = self.params["trees"].to_json()
        return d

    @classmethod
    def _params_from_json(cls, d):
        d = dict(d)
        d["trees"] = TreeEnsemble.from_json(d["trees"])
        return d


def base_score_for(y):
    rate = float(np.mean(y))
    rate = min(max(rate, 1e-12), 1 - 1e-12)
    return float(np.log(rate / (1.0 - rate)))


def train_gbt(train, config: GBTConfig = GBTConfig()):
    if config.n_rounds < 0:
        raise ModelError("n_rounds must be >= 0")
    X, y = check_training_data(train.X, train.y)
    base = base_score_for(y)
    grower = NewtonTreeGrower(X, config)
    ens = TreeEnsemble(X.shape[1])
    F = np.full(len(y), base)
    history = [log_loss(y, F)]
    for _ in range(config.n_rounds):
        g, h = grad_hess(y, F)
        tree = grower.grow(g, h)
        _add(ens, tree)
        F = F + config.learning_rate * grower.output(tree)
        history.append(log_loss(y, F))
    model = BoostedTreesModel(train.feature_names, config,
                              {"base_score": base, "trees": ens},
                              {"train_log_loss": history})
    return model
