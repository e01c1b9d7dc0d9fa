"""Boosting with a grouped random intercept (mixed-effects logistic model).

The latent log-odds of a row in group ``g`` is ``F(x) + b_g`` with
``b_g ~ Normal(0, sigma2)``.  Training alternates one Newton boosting round
for ``F`` (intercepts held fixed) with a Laplace-approximate update of the
intercepts and an EM-style update of ``sigma2`` (``F`` held fixed).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import ModelError, check_training_data, register, sigmoid
from .boosting import (BoostedTreesModel, GBTConfig, NewtonTreeGrower, _add,
                       base_score_for, grad_hess, log_loss)
from .trees import TreeEnsemble


@dataclass(frozen=True)
class GPBConfig:
    learning_rate: float = 0.05
    max_depth: int = 11
    n_rounds: int = 200
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0
    min_split_gain: float = 0.0
    sigma2_init: float = 1.0
    newton_steps: int = 2
    final_iters: int = 500
    tol: float = 1e-10
    sigma2_floor: float = 1e-8

    def tree_config(self):
        return GBTConfig(self.learning_rate, self.max_depth, self.n_rounds,
                         self.reg_lambda, self.min_child_weight, self.min_split_gain)


def update_random_effects(y, F, codes, n_groups, b, sigma2, steps, floor=1e-8):
    """Newton steps towards the posterior mode of the intercepts, then
    ``sigma2 = mean(b^2 + posterior variance)``.

    Returns the new intercepts, variance and per-group posterior precision.
    """
    for _ in range(steps):
        p = sigmoid(F + b[codes])
        grad = np.bincount(codes, y - p, n_groups) - b / sigma2
        prec = np.bincount(codes, p * (1.0 - p), n_groups) + 1.0 / sigma2
        b = b + grad / prec
    p = sigmoid(F + b[codes])
    prec = np.bincount(codes, p * (1.0 - p), n_groups) + 1.0 / sigma2
    sigma2 = max(float(np.mean(b * b + 1.0 / prec)), floor)
    return b, sigma2, prec


@register
class GroupedBoostingModel(BoostedTreesModel):
    kind = "gpb"
    config_cls = GPBConfig

    @property
    def sigma2(self):
        return self.params["sigma2"]

    def intercepts(self, groups):
        """Posterior-mean intercept per row; unseen groups get 0."""
        table = dict(zip(self.params["groups"], self.params["intercepts"]))
        return np.array([table.get(str(g), 0.0) for g in groups], dtype=float)

    def margin(self, X, feature_names=None, groups=None):
        groups = self._groups(X, groups)
        Xa = self.align(X, feature_names)
        m = self.fixed_margin(Xa)
        if groups is not None:
            m = m + self.intercepts(groups)
        return m


def train_gpb(train, config: GPBConfig = GPBConfig()):
    X, y = check_training_data(train.X, train.y)
    groups, codes = np.unique(np.asarray(train.group_ids).astype(str), return_inverse=True)
    G = len(groups)
    if G < 2:
        raise ModelError("grouped boosting needs at least two groups; "
                         "with a single group use the gbt model")
    tc = config.tree_config()
    base = base_score_for(y)
    grower = NewtonTreeGrower(X, tc)
    ens = TreeEnsemble(X.shape[1])
    F = np.full(len(y), base)
    b = np.zeros(G)
    s2 = float(config.sigma2_init)
    history = []
    for _ in range(config.n_rounds):
        g, h = grad_hess(y, F + b[codes])
        tree = grower.grow(g, h)
        _add(ens, tree)
        F = F + config.learning_rate * grower.output(tree)
        b, s2, _ = update_random_effects(y, F, codes, G, b, s2, config.newton_steps,
                                         config.sigma2_floor)
        history.append(log_loss(y, F + b[codes]))
    for _ in range(config.final_iters):
        b_old, s2_old = b, s2
        b, s2, _ = update_random_effects(y, F, codes, G, b, s2, config.newton_steps,
                                         config.sigma2_floor)
        if abs(s2 - s2_old) <= config.tol * max(1.0, s2) and \
                np.max(np.abs(b - b_old)) <= config.tol:
            break
    params = {"base_score": base, "trees": ens, "groups": groups.tolist(),
              "intercepts": b.tolist(), "sigma2": s2}
    return GroupedBoostingModel(train.feature_names, config, params,
                                {"train_log_loss": history})
