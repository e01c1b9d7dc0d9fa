"""Numba kernels for exact greedy tree growth and tree traversal.

Trees are stored as flat parallel arrays.  A node is a leaf when
``left[node] == -1``.  Rows with ``x[feature] <= threshold`` go left.
"""
import numpy as np
from numba import njit

LEAF = -1


@njit(cache=True)
def _alloc(n_nodes):
    feature = np.full(n_nodes, -1, dtype=np.int64)
    threshold = np.zeros(n_nodes, dtype=np.float64)
    left = np.full(n_nodes, LEAF, dtype=np.int64)
    right = np.full(n_nodes, LEAF, dtype=np.int64)
    value = np.zeros(n_nodes, dtype=np.float64)
    cover = np.zeros(n_nodes, dtype=np.float64)
    gain = np.zeros(n_nodes, dtype=np.float64)
    return feature, threshold, left, right, value, cover, gain


@njit(cache=True)
def _resum_cover(left, right, cover, n_nodes):
    # children are always allocated after their parent, so a reverse sweep
    # sees both children before the parent
    for node in range(n_nodes - 1, -1, -1):
        if left[node] != LEAF:
            cover[node] = cover[left[node]] + cover[right[node]]


@njit(cache=True)
def presort(X):
    """Per-feature sorted row order and dense value ranks.

    Returns ``order`` (p, n) int32 with rows sorted by each feature,
    ``rank`` (p, n) int32 holding the dense rank of each sorted entry, and
    ``uniq`` (p, n) float64 whose first ``n_uniq[f]`` entries are the sorted
    distinct values of feature ``f``.  Split search only compares ranks;
    thresholds are mapped back through ``uniq``.
    """
    n, p = X.shape
    order = np.empty((p, n), dtype=np.int32)
    rank = np.empty((p, n), dtype=np.int32)
    uniq = np.empty((p, n))
    n_uniq = np.zeros(p, dtype=np.int64)
    for f in range(p):
        col = X[:, f].copy()
        o = np.argsort(col, kind="mergesort")
        u = -1
        prev = 0.0
        for i in range(n):
            v = col[o[i]]
            if i == 0 or v > prev:
                u += 1
                uniq[f, u] = v
                prev = v
            order[f, i] = o[i]
            rank[f, i] = u
        n_uniq[f] = u + 1
    return order, rank, uniq, n_uniq


@njit(cache=True)
def _midpoint(lo, hi):
    thr = 0.5 * (lo + hi)
    if thr >= hi or thr < lo:
        thr = lo
    return thr


@njit(cache=True)
def grow_newton_tree(order0, rank0, uniq, grad, hess, max_depth, reg_lambda,
                     min_child_weight, min_split_gain):
    """Grow one second-order tree level by level with exact greedy splits.

    ``order0``/``rank0``/``uniq`` come from :func:`presort`.  Each feature's
    list is kept partitioned so that the rows of a node form one contiguous,
    still sorted segment; a level therefore costs one sequential pass per
    feature.  Every boundary between consecutive distinct values inside a
    node is a candidate, with the threshold midway between the two values.
    Ties on gain keep the first candidate seen, i.e. the lowest feature
    index and then the lowest threshold.
    """
    p, n = order0.shape
    cap = 1
    for _ in range(max_depth + 1):
        cap *= 2
        if cap > 2 * n + 2:
            break
    cap = min(cap - 1, 2 * n + 1)
    feature, threshold, left, right, value, cover, gain = _alloc(cap)

    order = order0.copy()
    rank = rank0.copy()
    order_b = np.empty_like(order)
    rank_b = np.empty_like(rank)
    goes_left = np.zeros(grad.shape[0], dtype=np.bool_)

    live = np.zeros(1, dtype=np.int64)
    seg_s = np.zeros(1, dtype=np.int64)
    seg_e = np.full(1, n, dtype=np.int64)
    n_nodes = 1
    depth = 0
    while live.shape[0] > 0:
        L = live.shape[0]
        G = np.zeros(L)
        H = np.zeros(L)
        for k in range(L):
            for i in range(seg_s[k], seg_e[k]):
                r = order[0, i]
                G[k] += grad[r]
                H[k] += hess[r]
        can_split = np.zeros(L, dtype=np.bool_)
        best_score = np.empty(L)
        for k in range(L):
            node = live[k]
            value[node] = -G[k] / (H[k] + reg_lambda)
            cover[node] = H[k]
            can_split[k] = (depth < max_depth
                            and H[k] >= 2.0 * min_child_weight
                            and seg_e[k] - seg_s[k] >= 2)
            best_score[k] = (2.0 * min_split_gain
                             + G[k] * G[k] / (H[k] + reg_lambda))
        best_f = np.full(L, -1, dtype=np.int64)
        best_rank = np.zeros(L, dtype=np.int64)
        best_nl = np.zeros(L, dtype=np.int64)
        for f in range(p):
            of = order[f]
            rf = rank[f]
            for k in range(L):
                if not can_split[k]:
                    continue
                s = seg_s[k]
                e = seg_e[k]
                Gk = G[k]
                Hk = H[k]
                gl = 0.0
                hl = 0.0
                for i in range(s, e - 1):
                    r = of[i]
                    gl += grad[r]
                    hl += hess[r]
                    if rf[i + 1] == rf[i]:
                        continue
                    hr = Hk - hl
                    if hl < min_child_weight or hr < min_child_weight:
                        continue
                    gr = Gk - gl
                    # one division per candidate; the recorded gain is
                    # recomputed in the usual form once the split is chosen
                    dl = hl + reg_lambda
                    dr = hr + reg_lambda
                    cand = (gl * gl * dr + gr * gr * dl) / (dl * dr)
                    if cand > best_score[k]:
                        best_score[k] = cand
                        best_f[k] = f
                        best_rank[k] = rf[i]
                        best_nl[k] = i - s + 1

        n_split = 0
        for k in range(L):
            if best_f[k] >= 0:
                n_split += 1
        nxt = np.empty(2 * n_split, dtype=np.int64)
        nxt_s = np.empty(2 * n_split, dtype=np.int64)
        nxt_e = np.empty(2 * n_split, dtype=np.int64)
        c = 0
        for k in range(L):
            if best_f[k] < 0:
                continue
            node = live[k]
            s = seg_s[k]
            e = seg_e[k]
            mid = s + best_nl[k]
            bf = best_f[k]
            feature[node] = bf
            threshold[node] = _midpoint(uniq[bf, best_rank[k]],
                                        uniq[bf, best_rank[k] + 1])
            gain[node] = 0.5 * (best_score[k]
                                - G[k] * G[k] / (H[k] + reg_lambda))
            left[node] = n_nodes
            right[node] = n_nodes + 1
            nxt[c] = n_nodes
            nxt[c + 1] = n_nodes + 1
            nxt_s[c] = s
            nxt_e[c] = mid
            nxt_s[c + 1] = mid
            nxt_e[c + 1] = e
            c += 2
            n_nodes += 2
            for i in range(s, mid):
                goes_left[order[bf, i]] = True
            for i in range(mid, e):
                goes_left[order[bf, i]] = False
        if n_split > 0:
            for f in range(p):
                for k in range(L):
                    if best_f[k] < 0:
                        continue
                    s = seg_s[k]
                    a = s
                    b = s + best_nl[k]
                    for i in range(s, seg_e[k]):
                        r = order[f, i]
                        if goes_left[r]:
                            j = a
                            a += 1
                        else:
                            j = b
                            b += 1
                        order_b[f, j] = r
                        rank_b[f, j] = rank[f, i]
            order, order_b = order_b, order
            rank, rank_b = rank_b, rank
        live = nxt
        seg_s = nxt_s
        seg_e = nxt_e
        depth += 1

    _resum_cover(left, right, cover, n_nodes)
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(),
            left[:n_nodes].copy(), right[:n_nodes].copy(),
            value[:n_nodes].copy(), cover[:n_nodes].copy(),
            gain[:n_nodes].copy())


@njit(cache=True)
def _gini_sum(w1, w):
    # w * gini(node) with gini = 1 - p1^2 - p0^2
    if w <= 0.0:
        return 0.0
    p1 = w1 / w
    return w * (1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1))


@njit(cache=True)
def grow_gini_tree(X, y, weight, max_features, max_depth, min_samples_split,
                   seed):
    """Grow one CART classification tree on weighted rows (Gini impurity).

    Rows with zero weight are ignored, which is how bootstrap counts enter.
    At every node features are visited in a random order until
    ``max_features`` non-constant ones have been evaluated; among those the
    split with the lowest weighted child impurity wins, ties going to the
    lowest feature index and then the lowest threshold.  Leaves hold the
    majority vote (1.0 when the weighted class-1 share is >= 0.5).
    """
    np.random.seed(seed)
    n, p = X.shape
    idx = np.empty(n, dtype=np.int64)
    m = 0
    for r in range(n):
        if weight[r] > 0:
            idx[m] = r
            m += 1
    idx = idx[:m]
    cap = 2 * m + 1
    feature, threshold, left, right, value, cover, gain = _alloc(cap)

    stack_node = np.empty(cap, dtype=np.int64)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = m
    stack_depth[0] = 0
    top = 1
    n_nodes = 1
    vals = np.empty(m)
    while top > 0:
        top -= 1
        node = stack_node[top]
        s = stack_start[top]
        e = stack_end[top]
        d = stack_depth[top]
        w = 0.0
        w1 = 0.0
        for i in range(s, e):
            r = idx[i]
            w += weight[r]
            w1 += weight[r] * y[r]
        cover[node] = w
        value[node] = 1.0 if w1 >= 0.5 * w else 0.0
        if e - s < min_samples_split or w1 == 0.0 or w1 == w or d >= max_depth:
            continue

        parent_imp = _gini_sum(w1, w)
        best_imp = np.inf
        best_f = -1
        best_thr = 0.0
        perm = np.random.permutation(p)
        evaluated = 0
        for j in range(p):
            if evaluated >= max_features:
                break
            f = perm[j]
            nn = e - s
            for i in range(nn):
                vals[i] = X[idx[s + i], f]
            srt = np.argsort(vals[:nn])
            if vals[srt[0]] == vals[srt[nn - 1]]:
                continue
            evaluated += 1
            lw = 0.0
            lw1 = 0.0
            for i in range(nn - 1):
                r = idx[s + srt[i]]
                lw += weight[r]
                lw1 += weight[r] * y[r]
                v = vals[srt[i]]
                v_next = vals[srt[i + 1]]
                if v_next <= v:
                    continue
                imp = _gini_sum(lw1, lw) + _gini_sum(w1 - lw1, w - lw)
                thr = 0.5 * (v + v_next)
                if thr >= v_next:
                    thr = v
                better = imp < best_imp
                if not better and imp == best_imp:
                    better = f < best_f or (f == best_f and thr < best_thr)
                if better:
                    best_imp = imp
                    best_f = f
                    best_thr = thr
        if best_f < 0:
            continue

        # in-place partition of idx[s:e]
        i = s
        j = e - 1
        while i <= j:
            if X[idx[i], best_f] <= best_thr:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        mid = i
        feature[node] = best_f
        threshold[node] = best_thr
        gain[node] = parent_imp - best_imp
        left[node] = n_nodes
        right[node] = n_nodes + 1
        # push right first so the left subtree is expanded first
        stack_node[top] = n_nodes + 1
        stack_start[top] = mid
        stack_end[top] = e
        stack_depth[top] = d + 1
        top += 1
        stack_node[top] = n_nodes
        stack_start[top] = s
        stack_end[top] = mid
        stack_depth[top] = d + 1
        top += 1
        n_nodes += 2

    _resum_cover(left, right, cover, n_nodes)
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(),
            left[:n_nodes].copy(), right[:n_nodes].copy(),
            value[:n_nodes].copy(), cover[:n_nodes].copy(),
            gain[:n_nodes].copy())


@njit(cache=True)
def predict_tree(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while left[node] != LEAF:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


@njit(cache=True)
def predict_forest(X, offsets, feature, threshold, left, right, value):
    """Sum of tree outputs for trees packed back to back.

    Tree ``t`` occupies nodes ``offsets[t]:offsets[t + 1]`` and its child
    pointers are local to the tree.
    """
    n = X.shape[0]
    out = np.zeros(n)
    n_trees = offsets.shape[0] - 1
    for i in range(n):
        acc = 0.0
        for t in range(n_trees):
            base = offsets[t]
            node = 0
            while left[base + node] != LEAF:
                if X[i, feature[base + node]] <= threshold[base + node]:
                    node = left[base + node]
                else:
                    node = right[base + node]
            acc += value[base + node]
        out[i] = acc
    return out
