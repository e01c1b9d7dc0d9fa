"""Uniform training entry point and repeated seeded experiments."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .base import KINDS, ModelError
from .boosting import GBTConfig, train_gbt
from .forest import RFConfig, train_rf
from .gpboost import GPBConfig, train_gpb
from .linear import LinSVMConfig, LogRegConfig, train_linsvm, train_logreg

CONFIGS = {"logreg": LogRegConfig, "linsvm": LinSVMConfig, "rf": RFConfig,
           "gbt": GBTConfig, "gpb": GPBConfig}
TRAINERS = {"logreg": train_logreg, "linsvm": train_linsvm, "rf": train_rf,
            "gbt": train_gbt, "gpb": train_gpb}


def make_config(kind, overrides=None, seed=None):
    if kind not in KINDS:
        raise ModelError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    cfg = CONFIGS[kind](**(overrides or {}))
    if seed is not None and hasattr(cfg, "seed"):
        cfg = dataclasses.replace(cfg, seed=int(seed))
    return cfg


def train_model(kind, train, config=None, seed=None):
    """Train a model of ``kind``; ``config`` may be a config object or a dict
    of overrides.  ``seed`` only affects randomised trainers."""
    if config is None or isinstance(config, dict):
        config = make_config(kind, config, seed)
    elif seed is not None and hasattr(config, "seed"):
        config = dataclasses.replace(config, seed=int(seed))
    return TRAINERS[kind](train, config)


@dataclass
class RunSummary:
    mean: dict
    std: dict
    runs: list = field(default_factory=list)


def summarize(runs):
    """Mean and population std of each metric over runs, skipping runs in
    which the metric is undefined."""
    from ..explain import UNDEFINED, is_defined

    keys = runs[0].keys()
    mean, std = {}, {}
    for k in keys:
        vals = [r[k] for r in runs if is_defined(r[k])]
        mean[k] = float(np.mean(vals)) if vals else UNDEFINED
        std[k] = float(np.std(vals)) if vals else UNDEFINED
    return RunSummary(mean, std, list(runs))


def repeat_runs(trainer, dataset, n=10, seeds=None, spec=None, evaluate_raw=False):
    """Average test metrics over ``n`` seeded resplits and retrainings.

    ``trainer`` is a model kind or a callable ``(train, seed) -> model``.
    Run ``i`` uses ``seeds[i]`` (default ``i``) both for the split/SMOTE and
    for the model.  With ``evaluate_raw`` the unbalanced test split is
    scored as well and its metrics are returned under ``clean_`` keys.
    """
    from ..balance import SplitSpec, balance_protocol
    from ..explain import evaluate

    if n < 1:
        raise ValueError("n must be >= 1")
    seeds = list(range(n)) if seeds is None else list(seeds)[:n]
    spec = spec or SplitSpec()
    fit = (lambda tr, s: train_model(trainer, tr, seed=s)) if isinstance(trainer, str) \
        else trainer
    runs = []
    for s in seeds:
        split = balance_protocol(dataset, dataclasses.replace(spec, seed=int(s)))
        model = fit(split.train, int(s))
        row = evaluate(model, split.test)
        if evaluate_raw:
            row.update({f"clean_{k}": v for k, v in evaluate(model, split.test_raw).items()})
        runs.append(row)
    return summarize(runs)
