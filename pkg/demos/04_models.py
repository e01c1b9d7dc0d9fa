"""Train the five classifiers on one split and compare them."""
# %%
from crashrisk.balance import SplitSpec, balance_protocol
from crashrisk.explain import evaluate, report
from crashrisk.features import build_feature_table, prune_features
from crashrisk.models import KINDS, train_model
from crashrisk.simgen import ScenarioConfig, generate

corpus = generate(ScenarioConfig(n_segments=40, duration_hours=24, n_crashes=60,
                                 background_waves=60, seed=3))
p = corpus.pings
m = corpus.corridor.match(p["lat"].to_numpy(), p["lon"].to_numpy())
p = p[m.matched].assign(segment=m.segment_index[m.matched])
c = corpus.crashes
c = c.assign(segment=corpus.corridor.match(c["lat"].to_numpy(), c["lon"].to_numpy())
             .segment_index)
ds = prune_features(build_feature_table(p, c, corpus.weather, corpus.corridor))

# %% Small model settings keep this quick
fast = {"rf": {"n_trees": 30}, "gbt": {"n_rounds": 60, "max_depth": 6},
        "gpb": {"n_rounds": 60, "max_depth": 6}}
split = balance_protocol(ds, SplitSpec(seed=0))
results = {}
for kind in KINDS:
    model = train_model(kind, split.train, fast.get(kind), seed=0)
    results[kind] = evaluate(model, split.test)
print(report({1.0: results}, (1.0,)).to_text(title="SMOTE-balanced test split"))
