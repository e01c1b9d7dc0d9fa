"""Exact path-dependent TreeSHAP for the tree ensembles.

For each tree the recursion follows every root-to-leaf path once, keeping
the permutation weights of the features seen on the path; a feature met
twice is first unwound from the path.  Node covers (training weight per
node) define the conditional expectation used for absent features.
Attributions of an ensemble are the scaled sum of per-tree attributions, so
``base + phi.sum() == margin`` holds up to rounding.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .models.base import ModelError

# the recursive kernel is not cached on disk: reloading a cached
# self-recursive function crashes some numba versions


@njit(cache=False)
def _extend(pd, pz, po, pw, off, l, zf, of, fi):
    pd[off + l] = fi
    pz[off + l] = zf
    po[off + l] = of
    pw[off + l] = 1.0 if l == 0 else 0.0
    for i in range(l - 1, -1, -1):
        pw[off + i + 1] += of * pw[off + i] * (i + 1) / (l + 1)
        pw[off + i] = zf * pw[off + i] * (l - i) / (l + 1)
    return l + 1


@njit(cache=False)
def _unwind(pd, pz, po, pw, off, l, i):
    last = l - 1
    n = pw[off + last]
    o = po[off + i]
    z = pz[off + i]
    for j in range(last - 1, -1, -1):
        if o != 0.0:
            t = pw[off + j]
            pw[off + j] = n * (last + 1) / ((j + 1) * o)
            n = t - pw[off + j] * z * (last - j) / (last + 1)
        else:
            pw[off + j] = pw[off + j] * (last + 1) / (z * (last - j))
    for j in range(i, last):
        pd[off + j] = pd[off + j + 1]
        pz[off + j] = pz[off + j + 1]
        po[off + j] = po[off + j + 1]
    return last


@njit(cache=False)
def _unwound_sum(pz, po, pw, off, l, i):
    last = l - 1
    o = po[off + i]
    z = pz[off + i]
    total = 0.0
    if o != 0.0:
        n = pw[off + last]
        for j in range(last - 1, -1, -1):
            t = n * (last + 1) / ((j + 1) * o)
            total += t
            n = pw[off + j] - t * z * (last - j) / (last + 1)
    else:
        for j in range(last - 1, -1, -1):
            total += pw[off + j] * (last + 1) / (z * (last - j))
    return total


@njit(cache=False)
def _recurse(x, phi, feature, threshold, left, right, value, cover, node,
             pd, pz, po, pw, level, l_parent, zf, of, fi, width):
    off = level * width
    if level > 0:
        poff = off - width
        for i in range(l_parent):
            pd[off + i] = pd[poff + i]
            pz[off + i] = pz[poff + i]
            po[off + i] = po[poff + i]
            pw[off + i] = pw[poff + i]
    l = _extend(pd, pz, po, pw, off, l_parent, zf, of, fi)
    if left[node] < 0:
        for i in range(1, l):
            w = _unwound_sum(pz, po, pw, off, l, i)
            phi[pd[off + i]] += w * (po[off + i] - pz[off + i]) * value[node]
        return
    f = feature[node]
    if x[f] <= threshold[node]:
        hot = left[node]
        cold = right[node]
    else:
        hot = right[node]
        cold = left[node]
    iz = 1.0
    io = 1.0
    for k in range(1, l):
        if pd[off + k] == f:
            iz = pz[off + k]
            io = po[off + k]
            l = _unwind(pd, pz, po, pw, off, l, k)
            break
    c = cover[node]
    _recurse(x, phi, feature, threshold, left, right, value, cover, hot,
             pd, pz, po, pw, level + 1, l, iz * cover[hot] / c, io, f, width)
    _recurse(x, phi, feature, threshold, left, right, value, cover, cold,
             pd, pz, po, pw, level + 1, l, iz * cover[cold] / c, 0.0, f, width)


@njit(cache=False)
def _expected_value(left, right, value, cover):
    total = 0.0
    for node in range(left.shape[0]):
        if left[node] < 0:
            total += value[node] * cover[node]
    return total / cover[0]


@njit(cache=False)
def _depth(left, right):
    d = np.zeros(left.shape[0], dtype=np.int64)
    for node in range(left.shape[0]):
        if left[node] >= 0:
            d[left[node]] = d[node] + 1
            d[right[node]] = d[node] + 1
    return d.max()


@njit(cache=False)
def ensemble_shap(X, offsets, feature, threshold, left, right, value, cover, n_features):
    """Unscaled sum over trees of attributions (n, p) and of expected values."""
    n = X.shape[0]
    phi = np.zeros((n, n_features))
    base = 0.0
    for t in range(offsets.shape[0] - 1):
        s = offsets[t]
        e = offsets[t + 1]
        fe = feature[s:e]
        th = threshold[s:e]
        le = left[s:e]
        ri = right[s:e]
        va = value[s:e]
        co = cover[s:e]
        base += _expected_value(le, ri, va, co)
        if le[0] < 0:
            continue
        width = _depth(le, ri) + 2
        pd = np.zeros(width * width, dtype=np.int64)
        pz = np.zeros(width * width)
        po = np.zeros(width * width)
        pw = np.zeros(width * width)
        for i in range(n):
            _recurse(X[i], phi[i], fe, th, le, ri, va, co, 0,
                     pd, pz, po, pw, 0, 0, 1.0, 1.0, -1, width)
    return phi, base


def tree_shap(model, X, feature_names=None):
    """Attributions ``phi`` (n, p) and base value in the model's margin space.

    Supported kinds: rf (vote share), gbt and the fixed-effect part of gpb
    (log-odds without the group intercept).
    """
    if model.kind not in ("rf", "gbt", "gpb"):
        raise ModelError(f"TreeSHAP needs a tree model, got {model.kind!r}")
    Xa = model.align(X, feature_names)
    ens = model.ensemble
    ens._flush()
    phi, base = ensemble_shap(Xa, ens.offsets, ens.feature, ens.threshold, ens.left,
                              ens.right, ens.value, ens.cover, len(model.feature_names))
    if model.kind == "rf":
        scale, offset = 1.0 / ens.n_trees, 0.0
    else:
        scale, offset = model.tree_scale, model.base_score
    return phi * scale, offset + base * scale


def shap_margin(model, X, feature_names=None):
    """The margin that attributions add up to (no group intercept)."""
    Xa = model.align(X, feature_names)
    if model.kind == "rf":
        return model.margin(Xa)
    return model.fixed_margin(Xa)
