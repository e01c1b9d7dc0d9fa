"""Command-line entry point: ``crashrisk <subcommand> --config FILE``.

Subcommands follow the data flow: simulate, ingest, features, balance,
train, evaluate, importance and score.  Exit codes: 0 success, 2
configuration error, 3 missing or stale artifact, 4 data validation failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .corridor import CorridorError
from .dataset import DatasetError
from .ingest import IngestError
from .models import KINDS, ModelError

EXIT_OK, EXIT_CONFIG, EXIT_ARTIFACT, EXIT_DATA = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="crashrisk", description="Crash-risk prediction pipeline.")
    p.add_argument("--config", default="crashrisk.toml",
                   help="TOML configuration file (default: crashrisk.toml)")
    p.add_argument("--workdir", help="override [paths] workdir")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("simulate", help="generate a synthetic corpus into workdir/simulate")
    sub.add_parser("ingest", help="parse, clean and map-match the input files")
    sub.add_parser("features", help="aggregate pings into the labelled feature table")
    b = sub.add_parser("balance", help="stratified split plus SMOTE")
    b.add_argument("--smote-ratio", type=float)
    b.add_argument("--smote-k", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--test-mode", choices=("paper", "clean"))
    t = sub.add_parser("train", help="fit one model kind on the balanced training split")
    t.add_argument("--model", choices=KINDS, action="append",
                   help="model kind; repeatable (default: every kind in [report] kinds)")
    e = sub.add_parser("evaluate", help="metrics table for the trained models")
    e.add_argument("--model", choices=KINDS, action="append")
    e.add_argument("--repeats", type=int, default=0,
                   help="instead run N seeded resplit/retrain runs per model and ratio")
    e.add_argument("--ratios", default="1.0",
                   help="comma-separated SMOTE ratios for --repeats (default: 1.0)")
    i = sub.add_parser("importance", help="permutation and SHAP importance of a model")
    i.add_argument("--model", choices=KINDS, required=True)
    s = sub.add_parser("score", help="risk probability for each row of a feature CSV")
    s.add_argument("--model", required=True, help="model JSON file")
    s.add_argument("--features", required=True, help="feature CSV")
    s.add_argument("--out", required=True, help="output CSV")
    return p


def _config(args):
    cfg = pipeline.load_config(args.config)
    if args.workdir:
        cfg = cfg.with_overrides("paths", workdir=args.workdir)
    return cfg


def run(args):
    cmd = args.command
    if cmd == "score":
        out = pipeline.score(args.model, args.features, args.out)
        print(f"scored {len(out)} rows -> {args.out}")
        return EXIT_OK
    cfg = _config(args)
    if cmd in ("train", "evaluate", "importance"):
        cfg = pipeline.effective_config(cfg)
    if cmd == "simulate":
        paths = pipeline.simulate(cfg)
        print(f"corpus written to {paths['pings'].parent}")
    elif cmd == "ingest":
        summary = pipeline.ingest(cfg)
        for k, v in sorted(summary.items()):
            print(f"{k}: {v}")
    elif cmd == "features":
        ds = pipeline.features(cfg)
        print(f"{len(ds)} rows, {len(ds.feature_names)} features, {int(ds.y.sum())} crash rows")
    elif cmd == "balance":
        split = pipeline.balance(cfg, {"ratio": args.smote_ratio, "k": args.smote_k,
                                       "seed": args.seed, "test_mode": args.test_mode})
        print(f"train {len(split.train)} rows, test {len(split.test)} rows")
    elif cmd == "train":
        for kind in args.model or cfg.sections["report"]["kinds"]:
            pipeline.train(cfg, kind)
            print(f"trained {kind}")
    elif cmd == "evaluate":
        if args.repeats > 0:
            ratios = tuple(float(r) for r in args.ratios.split(","))
            table, clean = pipeline.experiment(cfg, args.repeats, ratios, args.model)
            print(table.to_text(title=f"Mean over {args.repeats} runs (test split, "
                                      f"{cfg.split_spec().test_mode} mode)"))
            print(clean.to_text(title=f"Mean over {args.repeats} runs (unbalanced test split)"))
        else:
            print(pipeline.evaluate_stage(cfg, args.model), end="")
    elif cmd == "importance":
        res = pipeline.importance(cfg, args.model)
        for method, rep in res.items():
            print(f"{method} importance, top 10:")
            for name, v in rep.ranked()[:10]:
                print(f"  {name:<24s} {v: .4f}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except pipeline.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except pipeline.ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    except (IngestError, DatasetError, CorridorError, ModelError, ValueError,
            FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
