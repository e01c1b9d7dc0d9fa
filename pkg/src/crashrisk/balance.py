"""Stratified splitting and SMOTE oversampling of the crash class."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset

TEST_MODES = ("paper", "clean")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0
    smote_ratio: float = 1.0
    k_neighbors: int = 5
    test_mode: str = "paper"
    standardize: bool = False

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")
        if not 0 < self.smote_ratio <= 1:
            raise ValueError("smote_ratio must lie in (0, 1]")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if self.test_mode not in TEST_MODES:
            raise ValueError(f"test_mode must be one of {TEST_MODES}")


def stratified_split(dataset: LabeledDataset, train_fraction=0.7, seed=0):
    """Split crash and non-crash rows separately, ``round(f * n)`` of each
    class to train (clamped so both sides keep at least one row)."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for cls in (0, 1):
        rows = np.flatnonzero(dataset.y == cls)
        if len(rows) < 2:
            raise ValueError(f"class {cls} has {len(rows)} rows; need at least 2")
        n_train = min(max(int(round(train_fraction * len(rows))), 1), len(rows) - 1)
        perm = rng.permutation(rows)
        train_idx.append(np.sort(perm[:n_train]))
        test_idx.append(np.sort(perm[n_train:]))
    return (dataset.subset(np.sort(np.concatenate(train_idx))),
            dataset.subset(np.sort(np.concatenate(test_idx))))


def nearest_neighbors(X, k):
    """Indices of the ``k`` nearest other rows (Euclidean), ties by index."""
    out = np.empty((len(X), k), dtype=np.int64)
    step = max(1, 2_000_000 // max(1, X.size))
    for s in range(0, len(X), step):
        diff = X[s:s + step, None, :] - X[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        d2[np.arange(len(d2)), np.arange(s, s + len(d2))] = np.inf
        out[s:s + step] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def smote_target(n_minority, n_majority, ratio):
    return max(0, math.ceil(ratio * n_majority) - n_minority)


def smote(minority, n_majority, ratio=1.0, k=5, seed=0, standardize=False,
          return_provenance=False):
    """Synthetic minority rows up to ``ceil(ratio * n_majority)``.

    Seeds are visited round-robin; each new row is ``x_i + lam * (x_nn - x_i)``
    with ``x_nn`` drawn uniformly from the ``k`` nearest minority neighbours
    of ``x_i`` and ``lam`` uniform on the open interval (0, 1).
    """
    minority = np.asarray(minority, dtype=float)
    m = len(minority)
    if not 0 < ratio <= 1:
        raise ValueError("ratio must lie in (0, 1]")
    if m <= k:
        raise ValueError(f"SMOTE needs more than k={k} minority rows, got {m}")
    n_new = smote_target(m, n_majority, ratio)
    space = minority
    if standardize:
        scale = minority.std(axis=0)
        space = (minority - minority.mean(axis=0)) / np.where(scale > 0, scale, 1.0)
    nn = nearest_neighbors(space, k)
    rng = np.random.default_rng(seed)
    seeds = np.arange(n_new) % m
    pick = nn[seeds, rng.integers(0, k, n_new)]
    lam = rng.uniform(0.0, 1.0, n_new)
    while True:  # enforce the open interval
        bad = lam <= 0.0
        if not bad.any():
            break
        lam[bad] = rng.uniform(0.0, 1.0, int(bad.sum()))
    synth = minority[seeds] + lam[:, None] * (minority[pick] - minority[seeds])
    if return_provenance:
        return synth, seeds, pick, lam
    return synth


def oversample(dataset: LabeledDataset, ratio, k=5, seed=0, standardize=False):
    """Append SMOTE rows for the minority class; synthetic rows inherit the
    segment and bin of their seed point."""
    n1 = int(dataset.y.sum())
    n0 = len(dataset) - n1
    minority_cls = 1 if n1 <= n0 else 0
    rows = np.flatnonzero(dataset.y == minority_cls)
    synth, seeds, _, _ = smote(dataset.X[rows], max(n0, n1), ratio, k, seed,
                               standardize, return_provenance=True)
    if len(synth) == 0:
        return dataset
    src = rows[seeds]
    extra = LabeledDataset(dataset.feature_names, synth,
                           np.full(len(synth), minority_cls), dataset.group_ids[src],
                           dataset.bin_starts[src])
    return LabeledDataset.concat([dataset, extra])


@dataclass
class BalancedSplit:
    train: LabeledDataset
    test: LabeledDataset
    test_raw: LabeledDataset
    spec: SplitSpec


def balance_protocol(dataset: LabeledDataset, spec: SplitSpec = SplitSpec()):
    """Split, then SMOTE the training part (and the test part in paper mode)."""
    train_raw, test_raw = stratified_split(dataset, spec.train_fraction, spec.seed)
    ss = np.random.SeedSequence(spec.seed).spawn(2)
    train = oversample(train_raw, spec.smote_ratio, spec.k_neighbors,
                       ss[0], spec.standardize)
    if spec.test_mode == "paper":
        test = oversample(test_raw, spec.smote_ratio, spec.k_neighbors,
                          ss[1], spec.standardize)
    else:
        test = test_raw
    return BalancedSplit(train, test, test_raw, spec)
