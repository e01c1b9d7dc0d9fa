"""Stage orchestration over a fixed working-directory layout.

Every stage reads its upstream artifacts from ``workdir``, writes its own
artifacts into ``workdir/<stage>/`` and finishes with a ``manifest.json``
recording the hash of the stage's configuration, the seed, the sha256 of
every input and output file and the digests of the upstream manifests.
Manifests carry no timestamps or absolute paths, so identical runs produce
identical bytes.

Workdir layout::

    simulate/    pings.csv crashes.csv weather.csv corridor.json ground_truth.csv
    ingest/      pings.csv crashes.csv weather.csv summary.json
    features/    dataset.csv dataset.bin [importance.csv]
    balance/     train.bin test.bin test_raw.bin
    train/<kind>/model.json
    evaluate/    report.txt report.csv report_clean.csv metrics.json
    importance/  <kind>_permutation.csv <kind>_shap.csv
"""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import simgen
from .balance import SplitSpec, balance_protocol
from .corridor import CorridorMap
from .dataset import LabeledDataset
from .explain import (METRIC_NAMES, REPORT_KINDS, evaluate, permutation_importance, report,
                      shap_importance)
from .features import FeatureConfig, build_feature_table, prune_features
from .ingest import ingest as run_ingest
from .models import KINDS, load_model, make_config, repeat_runs, train_model

log = logging.getLogger(__name__)

MANIFEST_FORMAT = "crashrisk-manifest"
MANIFEST_VERSION = 1
STAGES = ("simulate", "ingest", "features", "balance", "train", "evaluate", "importance")
UPSTREAM = {"simulate": (), "ingest": (), "features": ("ingest",), "balance": ("features",),
            "train": ("balance",), "evaluate": ("balance",), "importance": ("balance",)}
TREE_KINDS = ("rf", "gbt", "gpb")


class ConfigError(ValueError):
    """Invalid or inconsistent pipeline configuration."""


class ArtifactError(RuntimeError):
    """A required upstream artifact is missing or stale."""

    def __init__(self, message, stage):
        super().__init__(message)
        self.stage = stage


# -- configuration ---------------------------------------------------------------

DEFAULTS = {
    "paths": {"pings": None, "crashes": None, "weather": None, "corridor": None,
              "workdir": "work"},
    "simulate": {},
    "cleaning": {"accel_cap": 13.0, "iqr_k": 1.5},
    "features": {"bin_seconds": 300, "speed_threshold_kmh": 160.9, "accel_threshold": 3.4,
                 "lags": [1, 2, 3], "utc_offset_hours": 0.0, "include_cvs": False,
                 "exclusion_bins": 0, "prune": "paper", "prune_seed": 0},
    "balance": {"train_fraction": 0.7, "ratio": 1.0, "k": 5, "seed": 0,
                "test_mode": "paper", "standardize": False},
    "models": {},
    "report": {"kinds": list(REPORT_KINDS), "threshold": None, "digits": 2},
    "importance": {"metric": "recall", "n_repeats": 5, "seed": 0},
}
SIM_FILES = ("pings", "crashes", "weather", "corridor")


@dataclass
class PipelineConfig:
    """Resolved configuration; ``sections`` mirrors the TOML file."""
    sections: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def workdir(self):
        return self._resolve(self.sections["paths"]["workdir"])

    def _resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else (self.base_dir / p)

    def input_path(self, name):
        """Input file path; defaults to the simulate stage's output."""
        p = self.sections["paths"].get(name)
        if p is None:
            fname = "corridor.json" if name == "corridor" else f"{name}.csv"
            return self.workdir / "simulate" / fname
        return self._resolve(p)

    def feature_config(self):
        f = self.sections["features"]
        return FeatureConfig(int(f["bin_seconds"]), float(f["speed_threshold_kmh"]),
                             float(f["accel_threshold"]), tuple(int(x) for x in f["lags"]),
                             float(f["utc_offset_hours"]), bool(f["include_cvs"]),
                             int(f["exclusion_bins"]))

    def split_spec(self):
        b = self.sections["balance"]
        return SplitSpec(float(b["train_fraction"]), int(b["seed"]), float(b["ratio"]),
                         int(b["k"]), str(b["test_mode"]), bool(b["standardize"]))

    def scenario(self):
        return simgen.scenario_from_dict(self.sections["simulate"])

    def model_config(self, kind):
        return make_config(kind, self.sections["models"].get(kind, {}),
                           seed=self.sections["balance"]["seed"])

    def with_overrides(self, section, **values):
        """Copy with ``values`` (ignoring None) written into ``section``."""
        new = copy.deepcopy(self.sections)
        new[section].update({k: v for k, v in values.items() if v is not None})
        cfg = PipelineConfig(new, self.base_dir)
        validate(cfg)
        return cfg


def _merge(defaults, given, where):
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        if key not in defaults:
            raise ConfigError(f"unknown key {where}{key!r}")
        out[key] = val
    return out


def from_dict(raw, base_dir=None):
    """Build and validate a config from a parsed TOML mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table")
    sections = {}
    for name in raw:
        if name not in DEFAULTS:
            raise ConfigError(f"unknown section [{name}]")
    for name, defaults in DEFAULTS.items():
        given = raw.get(name, {})
        if not isinstance(given, dict):
            raise ConfigError(f"[{name}] must be a table")
        if name in ("simulate", "models"):
            sections[name] = copy.deepcopy(given)
        else:
            sections[name] = _merge(defaults, given, f"[{name}] ")
    cfg = PipelineConfig(sections, Path(base_dir) if base_dir else Path.cwd())
    validate(cfg)
    return cfg


def load_config(path):
    """Read a TOML configuration file; relative paths resolve against it."""
    import tomli

    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomli.loads(path.read_text())
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(raw, path.resolve().parent)


def _positive(section, key, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        raise ConfigError(f"[{section}] {key} must be a positive number, got {value!r}")


def validate(cfg: PipelineConfig):
    s = cfg.sections
    for key in ("accel_cap", "iqr_k"):
        _positive("cleaning", key, s["cleaning"][key])
    f = s["features"]
    for key in ("bin_seconds", "speed_threshold_kmh", "accel_threshold"):
        _positive("features", key, f[key])
    if not isinstance(f["lags"], (list, tuple)) or not f["lags"]:
        raise ConfigError("[features] lags must be a non-empty list")
    for lag in f["lags"]:
        _positive("features", "lags", lag)
    if f["prune"] not in ("paper", "auto", "none"):
        raise ConfigError("[features] prune must be 'paper', 'auto' or 'none'")
    if not isinstance(f["exclusion_bins"], int) or f["exclusion_bins"] < 0:
        raise ConfigError("[features] exclusion_bins must be a non-negative integer")
    try:
        cfg.split_spec()
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[balance] {exc}") from exc
    for kind, over in s["models"].items():
        if kind not in KINDS:
            raise ConfigError(f"unknown model kind [models.{kind}]")
        if not isinstance(over, dict):
            raise ConfigError(f"[models.{kind}] must be a table")
        try:
            cfg.model_config(kind)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[models.{kind}] {exc}") from exc
    r = s["report"]
    bad = [k for k in r["kinds"] if k not in KINDS]
    if bad or not r["kinds"]:
        raise ConfigError(f"[report] kinds must be a non-empty subset of {KINDS}")
    if r["threshold"] is not None and not 0 <= r["threshold"] <= 1:
        raise ConfigError("[report] threshold must lie in [0, 1]")
    imp = s["importance"]
    if imp["metric"] not in METRIC_NAMES:
        raise ConfigError(f"[importance] metric must be one of {METRIC_NAMES}")
    if not isinstance(imp["n_repeats"], int) or imp["n_repeats"] < 1:
        raise ConfigError("[importance] n_repeats must be a positive integer")
    if s["simulate"]:
        try:
            cfg.scenario()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[simulate] {exc}") from exc


# -- hashing and manifests -------------------------------------------------------

def canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable)


def _jsonable(o):
    if dataclasses.is_dataclass(o):
        return dataclasses.asdict(o)
    if isinstance(o, (tuple, set)):
        return list(o)
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not serialisable: {type(o)}")


def sha256_bytes(b):
    return hashlib.sha256(b).hexdigest()


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def stage_config(cfg: PipelineConfig, stage, kind=None):
    """The part of the configuration a stage depends on."""
    s = cfg.sections
    if stage == "simulate":
        return {"scenario": dataclasses.asdict(cfg.scenario())}
    if stage == "ingest":
        return {"cleaning": s["cleaning"]}
    if stage == "features":
        return {"features": s["features"]}
    if stage == "balance":
        return {"balance": dataclasses.asdict(cfg.split_spec())}
    if stage == "train":
        return {"kind": kind, "model": dataclasses.asdict(cfg.model_config(kind))}
    if stage == "evaluate":
        return {"report": s["report"]}
    if stage == "importance":
        return {"importance": s["importance"], "kind": kind}
    raise ValueError(stage)


def config_hash(cfg, stage, kind=None):
    return sha256_bytes(canonical(stage_config(cfg, stage, kind)).encode())


def stage_dir(cfg, stage, kind=None):
    d = cfg.workdir / stage
    return d / kind if (stage == "train" and kind) else d


def manifest_path(cfg, stage, kind=None):
    return stage_dir(cfg, stage, kind) / "manifest.json"


def write_manifest(cfg, stage, inputs, outputs, upstream, seed=None, kind=None, extra=None,
                   overrides=None):
    """Write the manifest; ``inputs``/``outputs`` map names to file paths."""
    out_dir = stage_dir(cfg, stage, kind)
    doc = {
        "format": MANIFEST_FORMAT, "version": MANIFEST_VERSION, "stage": stage,
        "config": stage_config(cfg, stage, kind), "config_hash": config_hash(cfg, stage, kind),
        "seed": seed,
        "inputs": {k: sha256_file(p) for k, p in sorted(inputs.items())},
        "outputs": {k: sha256_file(out_dir / k) for k in sorted(outputs)},
        "upstream": upstream,
    }
    if kind is not None:
        doc["kind"] = kind
    if extra:
        doc["extra"] = extra
    if overrides:
        doc["overrides"] = overrides
    text = json.dumps(doc, sort_keys=True, indent=2, default=_jsonable) + "\n"
    manifest_path(cfg, stage, kind).write_text(text)
    return sha256_bytes(text.encode())


def read_manifest(cfg, stage, kind=None):
    p = manifest_path(cfg, stage, kind)
    label = f"train --model {kind}" if stage == "train" and kind else stage
    if not p.is_file():
        raise ArtifactError(f"missing artifact of stage '{label}' ({p}); run `{label}` first",
                            label)
    text = p.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"corrupt manifest {p}; rerun `{label}`", label) from exc
    if doc.get("format") != MANIFEST_FORMAT or doc.get("version") != MANIFEST_VERSION:
        raise ArtifactError(f"{p} has an unsupported version header; rerun `{label}`", label)
    return doc, sha256_bytes(text.encode())


def check_stage(cfg, stage, kind=None):
    """Verify that a stage's artifacts are present and current.

    Current means: the recorded config hash equals the hash of the present
    configuration, every output file still has its recorded content, and
    every upstream stage is itself current with the recorded digest.
    Returns the manifest digest.
    """
    doc, digest = read_manifest(cfg, stage, kind)
    label = f"train --model {kind}" if stage == "train" and kind else stage
    for section, values in doc.get("overrides", {}).items():
        cfg = cfg.with_overrides(section, **values)
    if doc["config_hash"] != config_hash(cfg, stage, kind):
        raise ArtifactError(f"stage '{label}' is stale: its configuration changed; "
                            f"rerun `{label}`", label)
    out_dir = stage_dir(cfg, stage, kind)
    for name, h in doc["outputs"].items():
        p = out_dir / name
        if not p.is_file() or sha256_file(p) != h:
            raise ArtifactError(f"artifact {p} is missing or modified; rerun `{label}`", label)
    if stage == "ingest":
        for name, h in doc["inputs"].items():
            p = cfg.input_path(name)
            if not p.is_file() or sha256_file(p) != h:
                raise ArtifactError(f"input {p} changed since ingest; rerun `ingest`", "ingest")
    for up, up_digest in doc["upstream"].items():
        up_stage, _, up_kind = up.partition(":")
        if check_stage(cfg, up_stage, up_kind or None) != up_digest:
            raise ArtifactError(f"stage '{label}' is stale: upstream '{up}' was rerun; "
                                f"rerun `{label}`", label)
    return digest


# -- stages ----------------------------------------------------------------------------

def simulate(cfg: PipelineConfig):
    out = stage_dir(cfg, "simulate")
    out.mkdir(parents=True, exist_ok=True)
    scenario = cfg.scenario()
    corpus = simgen.generate(scenario)
    paths = simgen.write_corpus(corpus, out)
    write_manifest(cfg, "simulate", {}, [p.name for p in paths.values()], {},
                   seed=scenario.seed,
                   extra={"n_pings": len(corpus.pings), "n_crashes": len(corpus.crashes)})
    log.info("simulate: %d pings, %d crashes", len(corpus.pings), len(corpus.crashes))
    return paths


def _require_inputs(cfg):
    paths = {n: cfg.input_path(n) for n in SIM_FILES}
    for name, p in paths.items():
        if not p.is_file():
            if cfg.sections["paths"].get(name) is None:
                raise ArtifactError(f"missing input {p}; run `simulate` first", "simulate")
            raise ConfigError(f"[paths] {name} does not exist: {p}")
    return paths


def ingest(cfg: PipelineConfig):
    paths = _require_inputs(cfg)
    corridor = CorridorMap.load(paths["corridor"])
    c = cfg.sections["cleaning"]
    res = run_ingest(paths["pings"], paths["crashes"], paths["weather"], corridor,
                     accel_cap=float(c["accel_cap"]), iqr_k=float(c["iqr_k"]))
    out = stage_dir(cfg, "ingest")
    out.mkdir(parents=True, exist_ok=True)
    res.pings.to_csv(out / "pings.csv", index=False)
    res.crashes.to_csv(out / "crashes.csv", index=False)
    res.weather.to_csv(out / "weather.csv", index=False)
    (out / "summary.json").write_text(json.dumps(res.summary, sort_keys=True, indent=2,
                                                 default=_jsonable) + "\n")
    write_manifest(cfg, "ingest", paths, ["pings.csv", "crashes.csv", "weather.csv",
                                          "summary.json"], {})
    log.info("ingest: %d pings retained, %d crashes matched",
             len(res.pings), len(res.crashes))
    return res.summary


def _read_ingested(cfg):
    d = stage_dir(cfg, "ingest")
    pings = pd.read_csv(d / "pings.csv", dtype={"vehicle_id": str},
                        float_precision="round_trip")
    crashes = pd.read_csv(d / "crashes.csv", float_precision="round_trip")
    weather = pd.read_csv(d / "weather.csv", dtype={"station_id": str},
                          float_precision="round_trip")
    return pings, crashes, weather


def features(cfg: PipelineConfig):
    up = {"ingest": check_stage(cfg, "ingest")}
    paths = _require_inputs(cfg)
    corridor = CorridorMap.load(paths["corridor"])
    pings, crashes, weather = _read_ingested(cfg)
    ds = build_feature_table(pings, crashes, weather, corridor, cfg.feature_config())
    f = cfg.sections["features"]
    out = stage_dir(cfg, "features")
    out.mkdir(parents=True, exist_ok=True)
    outputs = ["dataset.csv", "dataset.bin"]
    if f["prune"] != "none":
        reports = []
        ds = prune_features(ds, f["prune"], seed=int(f["prune_seed"]), importance_out=reports)
        if reports:
            reports[0].to_csv(out / "importance.csv")
            outputs.append("importance.csv")
    ds.to_csv(out / "dataset.csv")
    ds.save_cache(out / "dataset.bin")
    write_manifest(cfg, "features", {"corridor": paths["corridor"]}, outputs, up,
                   seed=int(f["prune_seed"]),
                   extra={"n_rows": len(ds), "n_features": len(ds.feature_names),
                          "n_crash_rows": int(ds.y.sum())})
    log.info("features: %d rows x %d features, %d crash rows",
             len(ds), len(ds.feature_names), int(ds.y.sum()))
    return ds


def load_features(cfg):
    check_stage(cfg, "features")
    return LabeledDataset.load_cache(stage_dir(cfg, "features") / "dataset.bin")


def effective_config(cfg: PipelineConfig):
    """``cfg`` with the command-line overrides recorded by the last balance
    run applied, so that later stages see the split they were given."""
    p = manifest_path(cfg, "balance")
    if not p.is_file():
        return cfg
    try:
        overrides = json.loads(p.read_text()).get("overrides", {})
    except json.JSONDecodeError:
        return cfg
    for section, values in overrides.items():
        cfg = cfg.with_overrides(section, **values)
    return cfg


def balance(cfg: PipelineConfig, overrides=None):
    """``overrides`` (e.g. from command-line flags) replace [balance] keys and
    are recorded in the manifest."""
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    cfg = cfg.with_overrides("balance", **overrides)
    up = {"features": check_stage(cfg, "features")}
    ds = LabeledDataset.load_cache(stage_dir(cfg, "features") / "dataset.bin")
    spec = cfg.split_spec()
    split = balance_protocol(ds, spec)
    out = stage_dir(cfg, "balance")
    out.mkdir(parents=True, exist_ok=True)
    split.train.save_cache(out / "train.bin")
    split.test.save_cache(out / "test.bin")
    split.test_raw.save_cache(out / "test_raw.bin")
    write_manifest(cfg, "balance", {}, ["train.bin", "test.bin", "test_raw.bin"], up,
                   seed=spec.seed, overrides={"balance": overrides} if overrides else None,
                   extra={"n_train": len(split.train), "n_test": len(split.test),
                          "n_test_raw": len(split.test_raw)})
    log.info("balance: train %d rows, test %d rows", len(split.train), len(split.test))
    return split


def _load_split(cfg, name):
    return LabeledDataset.load_cache(stage_dir(cfg, "balance") / f"{name}.bin")


def train(cfg: PipelineConfig, kind):
    if kind not in KINDS:
        raise ConfigError(f"unknown model kind {kind!r}; expected one of {KINDS}")
    up = {"balance": check_stage(cfg, "balance")}
    model_cfg = cfg.model_config(kind)
    model = train_model(kind, _load_split(cfg, "train"), model_cfg)
    out = stage_dir(cfg, "train", kind)
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "model.json")
    write_manifest(cfg, "train", {}, ["model.json"], up, kind=kind,
                   seed=getattr(model_cfg, "seed", None))
    log.info("train: %s model written", kind)
    return model


def _trained(cfg, kind):
    digest = check_stage(cfg, "train", kind)
    return load_model(stage_dir(cfg, "train", kind) / "model.json"), digest


def evaluate_stage(cfg: PipelineConfig, kinds=None):
    """Score every trained model on the balanced and the clean test split."""
    kinds = list(kinds or cfg.sections["report"]["kinds"])
    models, up = {}, {}
    for k in kinds:
        models[k], up[f"train:{k}"] = _trained(cfg, k)
    up["balance"] = check_stage(cfg, "balance")
    test, test_raw = _load_split(cfg, "test"), _load_split(cfg, "test_raw")
    thr = cfg.sections["report"]["threshold"]
    ratio = cfg.split_spec().smote_ratio
    main = {k: evaluate(m, test, thr) for k, m in models.items()}
    clean = {k: evaluate(m, test_raw, thr) for k, m in models.items()}
    table = report({ratio: main}, (ratio,), kinds)
    table_clean = report({ratio: clean}, (ratio,), kinds)
    out = stage_dir(cfg, "evaluate")
    out.mkdir(parents=True, exist_ok=True)
    digits = int(cfg.sections["report"]["digits"])
    mode = cfg.split_spec().test_mode
    text = table.to_text(digits, title=f"Test split ({mode} mode)") + "\n" + \
        table_clean.to_text(digits, title="Unbalanced test split (clean mode)")
    (out / "report.txt").write_text(text)
    table.to_csv(out / "report.csv")
    table_clean.to_csv(out / "report_clean.csv")
    metrics_doc = {"test": _plain(main), "clean": _plain(clean), "threshold": thr}
    (out / "metrics.json").write_text(json.dumps(metrics_doc, sort_keys=True, indent=2) + "\n")
    write_manifest(cfg, "evaluate", {}, ["report.txt", "report.csv", "report_clean.csv",
                                         "metrics.json"], up)
    return text


def _plain(results):
    from .explain import is_defined
    return {k: {m: (v if is_defined(v) else "undefined") for m, v in ms.items()}
            for k, ms in results.items()}


def experiment(cfg: PipelineConfig, n_runs=10, ratios=(1.0,), kinds=None):
    """Repeated resplit/retrain runs on the feature table, one table cell per
    (ratio, kind), in both test modes.  Returns (paper table, clean table)."""
    ds = load_features(cfg)
    kinds = list(kinds or cfg.sections["report"]["kinds"])
    spec = cfg.split_spec()
    seeds = [spec.seed + i for i in range(n_runs)]
    res, res_clean = {}, {}
    for r in ratios:
        res[r], res_clean[r] = {}, {}
        for k in kinds:
            overrides = cfg.sections["models"].get(k, {})
            fit = (lambda tr, s, k=k, o=overrides: train_model(k, tr, make_config(k, o, s)))
            summ = repeat_runs(fit, ds, n_runs, seeds,
                               dataclasses.replace(spec, smote_ratio=float(r)),
                               evaluate_raw=True)
            res[r][k] = {m: summ.mean[m] for m in METRIC_NAMES}
            res_clean[r][k] = {m: summ.mean[f"clean_{m}"] for m in METRIC_NAMES}
    return report(res, ratios, kinds), report(res_clean, ratios, kinds)


def importance(cfg: PipelineConfig, kind):
    model, digest = _trained(cfg, kind)
    up = {f"train:{kind}": digest, "balance": check_stage(cfg, "balance")}
    imp = cfg.sections["importance"]
    test = _load_split(cfg, "test_raw" if cfg.split_spec().test_mode == "clean" else "test")
    out = stage_dir(cfg, "importance")
    out.mkdir(parents=True, exist_ok=True)
    perm = permutation_importance(model, test, imp["metric"], int(imp["n_repeats"]),
                                  int(imp["seed"]))
    perm.to_csv(out / f"{kind}_permutation.csv")
    outputs = [f"{kind}_permutation.csv"]
    result = {"permutation": perm}
    if kind in TREE_KINDS:
        sh = shap_importance(model, test)
        sh.to_csv(out / f"{kind}_shap.csv")
        outputs.append(f"{kind}_shap.csv")
        result["shap"] = sh
    # one manifest per kind keeps stages for different models independent
    mpath = manifest_path(cfg, "importance")
    write_manifest(cfg, "importance", {}, outputs, up, kind=kind, seed=int(imp["seed"]))
    mpath.replace(out / f"{kind}_manifest.json")
    return result


def score(model_path, features_path, out_path):
    """Risk probability per (segment, bin) row of a feature CSV."""
    model = load_model(model_path)
    df = pd.read_csv(features_path, dtype={"segment_id": str}, float_precision="round_trip")
    for col in ("segment_id", "bin_start"):
        if col not in df.columns:
            raise ValueError(f"{features_path}: missing column {col!r}")
    missing = [n for n in model.feature_names if n not in df.columns]
    if missing:
        raise ValueError(f"{features_path}: missing feature columns {missing[:5]}")
    X = df[model.feature_names].to_numpy(dtype=float)
    groups = df["segment_id"].to_numpy(dtype=object)
    prob = np.asarray(model.score(X, model.feature_names, groups), dtype=float)
    if model.kind == "linsvm":
        # the SVM score is a signed margin; report it on the probability scale
        from .models import sigmoid
        prob = sigmoid(prob)
    out = pd.DataFrame({"segment_id": df["segment_id"], "bin_start": df["bin_start"],
                        "probability": prob})
    lines = ["segment_id,bin_start,probability"]
    lines += [f"{s},{int(b)},{p!r}" for s, b, p in
              zip(out["segment_id"], out["bin_start"], out["probability"].astype(float))]
    Path(out_path).write_text("\n".join(lines) + "\n")
    return out
