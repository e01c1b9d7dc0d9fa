"""Simulate a small corridor, write it to disk and ingest it back.

Run with ``python demos/01_simulate_and_ingest.py``.
"""
# %%
import tempfile
from pathlib import Path

from crashrisk.corridor import CorridorMap
from crashrisk.ingest import ingest
from crashrisk.simgen import ScenarioConfig, generate, write_corpus

# %% A 10-segment-per-direction corridor observed for half a day
scenario = ScenarioConfig(n_segments=20, duration_hours=12, n_crashes=20,
                          background_waves=20, outlier_rate=0.01, seed=1)
corpus = generate(scenario)
print(f"{len(corpus.pings)} pings from {corpus.pings['vehicle_id'].nunique()} vehicles")
print(f"{len(corpus.crashes)} crashes on {len(corpus.corridor.segments)} segments")
print(corpus.pings.head())

# %% Round trip through the CSV formats
out = Path(tempfile.mkdtemp())
paths = write_corpus(corpus, out)
corridor = CorridorMap.load(paths["corridor"])
res = ingest(paths["pings"], paths["crashes"], paths["weather"], corridor)

# %% What cleaning removed: speeds above Q3 + 1.5 IQR and |accel| > 13 m/s^2
for key, value in sorted(res.summary.items()):
    print(f"{key:>22s}: {value}")
