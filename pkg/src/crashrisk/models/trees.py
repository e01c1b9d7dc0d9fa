"""Packed storage for ensembles of binary decision trees."""
from __future__ import annotations

import numpy as np

from . import _trees

FIELDS = ("feature", "threshold", "left", "right", "value", "cover")


class TreeEnsemble:
    """Trees stored back to back in flat arrays.

    Tree ``t`` occupies nodes ``offsets[t]:offsets[t+1]``; child indices are
    local to the tree and ``-1`` marks a leaf.  ``cover`` is the training
    weight (hessian sum or sample count) reaching each node.
    """

    def __init__(self, n_features, offsets=None, **arrays):
        self.n_features = int(n_features)
        self.offsets = np.asarray([0] if offsets is None else offsets, dtype=np.int64)
        self.feature = np.asarray(arrays.get("feature", []), dtype=np.int64)
        self.threshold = np.asarray(arrays.get("threshold", []), dtype=np.float64)
        self.left = np.asarray(arrays.get("left", []), dtype=np.int64)
        self.right = np.asarray(arrays.get("right", []), dtype=np.int64)
        self.value = np.asarray(arrays.get("value", []), dtype=np.float64)
        self.cover = np.asarray(arrays.get("cover", []), dtype=np.float64)
        self._pending = []

    @property
    def n_trees(self):
        self._flush()
        return len(self.offsets) - 1

    def add(self, feature, threshold, left, right, value, cover):
        self._pending.append((feature, threshold, left, right, value, cover))

    def _flush(self):
        if not self._pending:
            return
        cols = list(zip(*self._pending))
        sizes = [len(f) for f in cols[0]]
        for name, parts in zip(FIELDS, cols):
            setattr(self, name, np.concatenate([getattr(self, name), *parts]))
        self.offsets = np.concatenate([self.offsets, self.offsets[-1] + np.cumsum(sizes)])
        self._pending = []

    def tree(self, t):
        self._flush()
        s, e = self.offsets[t], self.offsets[t + 1]
        return {f: getattr(self, f)[s:e] for f in FIELDS}

    def depth(self, t):
        tr = self.tree(t)
        depth = np.zeros(len(tr["left"]), dtype=np.int64)
        for node in range(len(depth)):
            if tr["left"][node] >= 0:
                depth[tr["left"][node]] = depth[tr["right"][node]] = depth[node] + 1
        return int(depth.max())

    def predict_sum(self, X):
        """Sum of the leaf values reached by each row over all trees."""
        self._flush()
        X = np.ascontiguousarray(X, dtype=np.float64)
        if self.n_trees == 0:
            return np.zeros(len(X))
        return _trees.predict_forest(X, self.offsets, self.feature, self.threshold,
                                     self.left, self.right, self.value)

    def predict_tree(self, X, t):
        tr = self.tree(t)
        return _trees.predict_tree(np.ascontiguousarray(X, dtype=np.float64),
                                   tr["feature"], tr["threshold"], tr["left"],
                                   tr["right"], tr["value"])

    def used_features(self):
        self._flush()
        return np.unique(self.feature[self.left >= 0])

    def to_json(self):
        self._flush()
        d = {"n_features": self.n_features, "offsets": self.offsets.tolist()}
        for f in FIELDS:
            d[f] = getattr(self, f).tolist()
        return d

    @classmethod
    def from_json(cls, d):
        return cls(d["n_features"], d["offsets"], **{f: d[f] for f in FIELDS})
