"""From matched pings to the labelled (segment, 5-minute bin) table."""
# %%
import numpy as np
import pandas as pd

from crashrisk.features import aggregate_core, prune_features, build_feature_table
from crashrisk.simgen import ScenarioConfig, generate

# %% One bin by hand: vehicle A speeds up, B brakes, C is a single fast ping
pings = pd.DataFrame({
    "vehicle_id": ["A", "A", "B", "B", "C"],
    "timestamp": [0.0, 10.0, 0.0, 5.0, 100.0],
    "speed": [36.0, 72.0, 108.0, 72.0, 170.0],
    "segment": [0, 0, 0, 0, 0],
})
core = aggregate_core(pings)
print(core.T)

# %% The full table for a simulated corridor
corpus = generate(ScenarioConfig(n_segments=20, duration_hours=12, n_crashes=20,
                                 background_waves=20, seed=2))
p = corpus.pings.copy()
match = corpus.corridor.match(p["lat"].to_numpy(), p["lon"].to_numpy())
p = p[match.matched].assign(segment=match.segment_index[match.matched])
c = corpus.crashes.copy()
cm = corpus.corridor.match(c["lat"].to_numpy(), c["lon"].to_numpy())
c = c.assign(segment=cm.segment_index)
ds = build_feature_table(p, c, corpus.weather, corpus.corridor)
print(f"{len(ds)} rows x {len(ds.feature_names)} features, {int(ds.y.sum())} crash rows")

# %% Pruning the hard-acceleration counts and temperature leaves 63 columns
pruned = prune_features(ds, "paper")
print(len(pruned.feature_names), "features after pruning")

# %% Crash bins against the rest
ss = pruned.column("ss")
print("median speed spread, crash bins:", np.median(ss[pruned.y == 1]).round(2),
      " other bins:", np.median(ss[pruned.y == 0]).round(2))
