"""SMOTE on a toy two-dimensional problem."""
# %%
import numpy as np

from crashrisk.balance import SplitSpec, balance_protocol, smote
from crashrisk.dataset import LabeledDataset

rng = np.random.default_rng(0)
minority = rng.normal([2.0, 2.0], 0.5, size=(12, 2))

# %% Synthetic rows sit on segments between a point and one of its 5 neighbours
synth, seeds, pick, lam = smote(minority, n_majority=48, ratio=1.0, k=5, seed=0,
                                return_provenance=True)
print(f"{len(synth)} synthetic rows; lambda in [{lam.min():.3f}, {lam.max():.3f}]")
for s, i, j, t in list(zip(synth, seeds, pick, lam))[:3]:
    print(f"row {i} -> neighbour {j} at {t:.2f}: {np.round(s, 3)}")

# %% The full protocol: stratified 70/30 split, then SMOTE on each part
crashes = rng.normal([2.0, 2.0], 0.5, size=(40, 2))
X = np.vstack([rng.normal(size=(400, 2)), crashes])
y = np.r_[np.zeros(400, int), np.ones(40, int)]
ds = LabeledDataset(["a", "b"], X, y, np.array(["s"] * len(y), dtype=object),
                    np.zeros(len(y), dtype=np.int64))
for mode in ("paper", "clean"):
    split = balance_protocol(ds, SplitSpec(seed=1, test_mode=mode))
    print(mode, "train", np.bincount(split.train.y), "test", np.bincount(split.test.y))
