"""The staged command-line workflow, driven from Python.

Each call is equivalent to ``crashrisk --config FILE --workdir DIR <stage>``.
"""
# %%
import tempfile
from pathlib import Path

from crashrisk import cli

root = Path(tempfile.mkdtemp())
config = root / "crashrisk.toml"
config.write_text("""
[simulate]
n_segments = 20
duration_hours = 12
n_crashes = 40
background_waves = 30
seed = 7

[models.rf]
n_trees = 20

[models.gbt]
n_rounds = 30
max_depth = 5

[models.gpb]
n_rounds = 30
max_depth = 5
""")
base = ["--config", str(config), "--workdir", str(root / "work")]

# %% simulate -> ingest -> features -> balance -> train -> evaluate
for stage in (["simulate"], ["ingest"], ["features"], ["balance"], ["train"], ["evaluate"]):
    print(f"$ crashrisk {' '.join(stage)}")
    assert cli.main(base + stage) == 0

# %% Importance, then scoring a feature file with a saved model
assert cli.main(base + ["importance", "--model", "gbt"]) == 0
work = root / "work"
assert cli.main(["score", "--model", str(work / "train" / "gbt" / "model.json"),
                 "--features", str(work / "features" / "dataset.csv"),
                 "--out", str(root / "scores.csv")]) == 0
print((root / "scores.csv").read_text().splitlines()[:4])

# %% Asking for a stage whose inputs are missing fails with exit code 3
code = cli.main(["--config", str(config), "--workdir", str(root / "empty"), "features"])
print("exit code:", code)
