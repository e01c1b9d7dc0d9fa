"""Random forest of fully grown Gini trees on bootstrap samples."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _trees
from .base import TrainedModel, check_training_data, register
from .trees import TreeEnsemble


@dataclass(frozen=True)
class RFConfig:
    n_trees: int = 100
    max_features: Optional[int] = None  # None -> floor(sqrt(p))
    bootstrap: bool = True
    min_samples_split: int = 2
    max_depth: Optional[int] = None
    seed: int = 0


@register
class RandomForestModel(TrainedModel):
    """Score is the fraction of trees voting for the crash class."""
    kind = "rf"
    config_cls = RFConfig

    @property
    def ensemble(self) -> TreeEnsemble:
        return self.params

    def margin(self, X, feature_names=None, groups=None):
        X = self.align(X, feature_names)
        return self.params.predict_sum(X) / self.params.n_trees

    def score(self, X, feature_names=None, groups=None):
        return self.margin(X, feature_names, groups)

    def _params_to_json(self):
        return self.params.to_json()

    @classmethod
    def _params_from_json(cls, d):
        return TreeEnsemble.from_json(d)


def train_rf(train, config: RFConfig = RFConfig()):
    if config.n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    X, y = check_training_data(train.X, train.y)
    X = np.ascontiguousarray(X)
    n, p = X.shape
    mf = config.max_features or max(1, int(math.isqrt(p)))
    mf = min(mf, p)
    depth = np.iinfo(np.int64).max if config.max_depth is None else config.max_depth
    ens = TreeEnsemble(p)
    for child in np.random.SeedSequence(config.seed).spawn(config.n_trees):
        rng = np.random.default_rng(child)
        if config.bootstrap:
            w = np.bincount(rng.integers(0, n, n), minlength=n).astype(float)
        else:
            w = np.ones(n)
        tree_seed = int(rng.integers(0, 2**31 - 1))
        f, t, l, r, v, c, _ = _trees.grow_gini_tree(X, y, w, mf, depth,
                                                    config.min_samples_split, tree_seed)
        ens.add(f, t, l, r, v, c)
    return RandomForestModel(train.feature_names, config, ens)
