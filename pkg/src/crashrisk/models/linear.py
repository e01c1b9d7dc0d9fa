"""L2-regularised logistic regression and linear SVM by deterministic
full-batch (sub)gradient descent on standardised features."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import TrainedModel, check_training_data, register, sigmoid


@dataclass(frozen=True)
class LogRegConfig:
    l2_strength: float = 1.0
    lr: float = 0.1
    max_iter: int = 1000
    tol: float = 1e-6
    standardize: bool = True


@dataclass(frozen=True)
class LinSVMConfig:
    c: float = 1.0
    lr: float = 0.05
    max_iter: int = 1000
    standardize: bool = True


def _standardizer(X, on):
    if not on:
        return np.zeros(X.shape[1]), np.ones(X.shape[1])
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    return mu, np.where(sd > 0, sd, 1.0)


def logreg_objective(theta, Z, y, l2):
    """Mean log-loss plus ``l2 / (2n) * ||w||^2``; ``theta = [w, b]``."""
    w, b = theta[:-1], theta[-1]
    z = Z @ w + b
    n = len(y)
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 / n * (w @ w))


def logreg_gradient(theta, Z, y, l2):
    w, b = theta[:-1], theta[-1]
    z = Z @ w + b
    n = len(y)
    r = sigmoid(z) - y
    return np.concatenate([Z.T @ r / n + l2 / n * w, [r.mean()]])


@register
class LogisticModel(TrainedModel):
    kind = "logreg"
    config_cls = LogRegConfig

    def margin(self, X, feature_names=None, groups=None):
        X = self.align(X, feature_names)
        p = self.params
        Z = (X - np.asarray(p["mean"])) / np.asarray(p["scale"])
        return Z @ np.asarray(p["weights"]) + p["bias"]


def train_logreg(train, config: LogRegConfig = LogRegConfig()):
    X, y = check_training_data(train.X, train.y)
    mu, sd = _standardizer(X, config.standardize)
    Z = (X - mu) / sd
    theta = np.zeros(X.shape[1] + 1)
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        g = logreg_gradient(theta, Z, y, config.l2_strength)
        if np.max(np.abs(g)) < config.tol:
            converged = True
            it -= 1
            break
        theta -= config.lr * g
    params = {"mean": mu.tolist(), "scale": sd.tolist(),
              "weights": theta[:-1].tolist(), "bias": float(theta[-1])}
    info = {"n_iter": it if config.max_iter else 0, "converged": converged,
            "objective": logreg_objective(theta, Z, y, config.l2_strength)}
    return LogisticModel(train.feature_names, config, params, info)


def svm_objective(theta, Z, s, c):
    """``(0.5 * ||w||^2 + c * sum(hinge)) / n`` with labels ``s`` in {-1, +1}."""
    w, b = theta[:-1], theta[-1]
    hinge = np.maximum(0.0, 1.0 - s * (Z @ w + b))
    return float((0.5 * (w @ w) + c * hinge.sum()) / len(s))


def svm_subgradient(theta, Z, s, c):
    w, b = theta[:-1], theta[-1]
    active = s * (Z @ w + b) < 1.0
    n = len(s)
    gw = (w - c * (Z[active].T @ s[active])) / n
    gb = -c * s[active].sum() / n
    return np.concatenate([gw, [gb]])


@register
class LinearSVMModel(TrainedModel):
    kind = "linsvm"
    config_cls = LinSVMConfig
    default_threshold = 0.0

    def margin(self, X, feature_names=None, groups=None):
        X = self.align(X, feature_names)
        p = self.params
        Z = (X - np.asarray(p["mean"])) / np.asarray(p["scale"])
        return Z @ np.asarray(p["weights"]) + p["bias"]

    def score(self, X, feature_names=None, groups=None):
        return self.margin(X, feature_names, groups)


def train_linsvm(train, config: LinSVMConfig = LinSVMConfig()):
    """Constant-step subgradient descent; the best iterate is kept."""
    X, y = check_training_data(train.X, train.y)
    s = 2.0 * y - 1.0
    mu, sd = _standardizer(X, config.standardize)
    Z = (X - mu) / sd
    theta = np.zeros(X.shape[1] + 1)
    best = theta.copy()
    best_obj = svm_objective(theta, Z, s, config.c)
    history = [best_obj]
    for _ in range(config.max_iter):
        theta = theta - config.lr * svm_subgradient(theta, Z, s, config.c)
        obj = svm_objective(theta, Z, s, config.c)
        history.append(obj)
        if obj < best_obj:
            best_obj, best = obj, theta.copy()
    params = {"mean": mu.tolist(), "scale": sd.tolist(),
              "weights": best[:-1].tolist(), "bias": float(best[-1])}
    info = {"objective": best_obj, "n_iter": config.max_iter}
    model = LinearSVMModel(train.feature_names, config, params, info)
    model.history = history
    return model
