"""TreeSHAP attributions for a boosted model, and a check against brute force."""
# %%
import itertools
import math

import numpy as np

from crashrisk.dataset import LabeledDataset
from crashrisk.explain import shap_importance
from crashrisk.models import GBTConfig, train_gbt
from crashrisk.treeshap import shap_margin, tree_shap

rng = np.random.default_rng(0)
X = rng.normal(size=(1000, 4))
y = (X[:, 0] + X[:, 1] * X[:, 2] + 0.3 * rng.normal(size=1000) > 0).astype(int)
ds = LabeledDataset(["x0", "x1", "x2", "noise"], X, y,
                    np.array(["g"] * 1000, dtype=object), np.zeros(1000, dtype=np.int64))
model = train_gbt(ds, GBTConfig(n_rounds=50, max_depth=4))

# %% Attributions add up to the margin
phi, base = tree_shap(model, X)
print("largest local accuracy gap:", np.abs(base + phi.sum(1) - shap_margin(model, X)).max())
for name, score in shap_importance(model, ds).ranked():
    print(f"{name:>6s} {score:.4f}")

# %% Brute-force Shapley values of the first tree for one row
tree = model.ensemble.tree(0)


def expect(x, S, node=0):
    if tree["left"][node] < 0:
        return tree["value"][node]
    f, l, r = tree["feature"][node], tree["left"][node], tree["right"][node]
    if f in S:
        return expect(x, S, l if x[f] <= tree["threshold"][node] else r)
    c = tree["cover"]
    return (c[l] * expect(x, S, l) + c[r] * expect(x, S, r)) / c[node]


x = X[0]
brute = np.zeros(4)
for i in range(4):
    rest = [j for j in range(4) if j != i]
    for k in range(4):
        for S in itertools.combinations(rest, k):
            w = math.factorial(k) * math.factorial(3 - k) / math.factorial(4)
            brute[i] += w * (expect(x, set(S) | {i}) - expect(x, set(S)))
# the first boosting round alone gives the same tree; its attributions,
# divided by the learning rate, are those of the raw tree
first = train_gbt(ds, GBTConfig(n_rounds=1, max_depth=4))
fast = tree_shap(first, X[:1])[0][0] / first.tree_scale
print("brute force, first tree:", np.round(brute, 6))
print("TreeSHAP,    first tree:", np.round(fast, 6))
