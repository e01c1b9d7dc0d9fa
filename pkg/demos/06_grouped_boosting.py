"""Boosting with a random intercept per road segment.

Rows from the same group share an unobserved offset on the log-odds scale.
Plain boosting cannot see it; the grouped model estimates one intercept per
group together with their variance.
"""
# %%
import numpy as np

from crashrisk.dataset import LabeledDataset
from crashrisk.models import GBTConfig, GPBConfig, log_loss, train_gbt, train_gpb

rng = np.random.default_rng(0)
n_groups, per_group = 30, 300
X = rng.normal(size=(n_groups * per_group, 3))
g = np.repeat(np.arange(n_groups), per_group)
offset = rng.normal(0.0, 1.0, n_groups)
f = X[:, 0] - 0.8 * X[:, 1] + 0.5 * X[:, 0] * X[:, 2]
y = (rng.random(len(g)) < 1 / (1 + np.exp(-(f + offset[g])))).astype(int)
ids = np.array([f"seg{k:02d}" for k in g], dtype=object)
test = rng.random(len(g)) < 0.3


def part(mask):
    return LabeledDataset(["x0", "x1", "x2"], X[mask], y[mask], ids[mask],
                          np.zeros(int(mask.sum()), dtype=np.int64))


train_ds, test_ds = part(~test), part(test)

# %%
settings = dict(n_rounds=100, max_depth=3, learning_rate=0.1)
gpb = train_gpb(train_ds, GPBConfig(**settings))
gbt = train_gbt(train_ds, GBTConfig(**settings))
print(f"estimated intercept variance {gpb.sigma2:.3f} (sample variance {offset.var():.3f})")
print(f"held-out log-loss: grouped {log_loss(test_ds.y, gpb.margin(test_ds)):.4f}, "
      f"plain {log_loss(test_ds.y, gbt.margin(test_ds)):.4f}")

# %% Estimated against true intercepts
est = gpb.intercepts([f"seg{k:02d}" for k in range(n_groups)])
print("correlation of estimated and true offsets:", np.corrcoef(est, offset)[0, 1].round(3))
