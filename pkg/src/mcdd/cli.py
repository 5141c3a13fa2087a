"""Command line entry point: ``mcdd <command> [--config file.json] [--key value ...]``.

Every ExperimentConfig field is also a flag (``--batch-size 64``); flags win
over the config file.  Exit codes: 0 success, 1 validation or check failure,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .data import load_csv
from .errors import NumericError, ValidationError
from .experiment import (ExperimentConfig, ScenarioError, export_latent, markdown_table,
                         run_benchmark, score_rows, sweep_nu, train_single)
from .gradcheck import TOLERANCE, gradcheck, passed
from .metrics import METRIC_NAMES
from .models import load_checkpoint, save_checkpoint

DEFAULT_NU_GRID = [0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0]


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    group = parser.add_argument_group("config overrides")
    for f in fields(ExperimentConfig):
        group.add_argument("--" + f.name.replace("_", "-"), dest="cfg_" + f.name,
                           type=_parse_value, default=None, metavar="VALUE")


def _config_from_args(args) -> ExperimentConfig:
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    if "dataset" in overrides:
        overrides["dataset"] = str(overrides["dataset"])
    if args.config:
        return ExperimentConfig.from_file(args.config, overrides)
    return ExperimentConfig.from_dict(overrides)


def cmd_benchmark(args) -> int:
    config = _config_from_args(args)
    result = run_benchmark(config)
    print(markdown_table(result), end="")
    print(f"results written to {Path(config.output_dir) / 'results.json'}")
    return 0


def cmd_sweep_nu(args) -> int:
    config = _config_from_args(args)
    grid = args.nu_values or DEFAULT_NU_GRID
    table = sweep_nu(config, grid)
    print("nu," + ",".join(METRIC_NAMES))
    for nu, report in table:
        print(f"{nu:g}," + ",".join("" if getattr(report, m) is None else f"{getattr(report, m):.6f}"
                                   for m in METRIC_NAMES))
    return 0


def cmd_export_latent(args) -> int:
    config = _config_from_args(args)
    out = args.out or str(Path(config.output_dir) / "latent.csv")
    path, records = export_latent(config, out, ood_class=args.ood_class, fold=args.fold)
    print(f"wrote {len(records)} rows to {path}")
    return 0


def cmd_gradcheck(args) -> int:
    errors = gradcheck(args.seed, corrupt=args.corrupt)
    width = max(len(k) for k in errors)
    for group, err in errors.items():
        status = "ok" if err <= TOLERANCE else "FAIL"
        print(f"{group:<{width}}  {err:.3e}  {status}")
    if passed(errors):
        return 0
    bad = [g for g, e in errors.items() if e > TOLERANCE]
    print(f"gradient check failed for: {', '.join(bad)}", file=sys.stderr)
    return 1


def cmd_train(args) -> int:
    config = _config_from_args(args)
    model = train_single(config)
    save_checkpoint(model, args.checkpoint)
    print(f"saved {config.method} checkpoint to {args.checkpoint}")
    return 0


def cmd_score(args) -> int:
    model = load_checkpoint(args.checkpoint)
    label_column = None if args.label_column is None else _parse_value(args.label_column)
    if label_column is None:
        features = np.loadtxt(args.data, delimiter=",", skiprows=0 if args.no_header else 1, ndmin=2)
    else:
        features = load_csv(args.data, label_column, not args.no_header).features
    predictions, scores = score_rows(model, features)
    names = model.metadata.get("class_names")
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["row", "prediction", "score"])
        for i, s in enumerate(scores):
            pred = "" if predictions is None else (names[predictions[i]] if names else int(predictions[i]))
            writer.writerow([i, pred, repr(float(s))])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcdd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-scenario progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("benchmark", help="leave-one-class-out benchmark of one method")
    _add_config_flags(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("sweep-nu", help="benchmark deep-mcdd over a grid of nu values")
    _add_config_flags(p)
    p.add_argument("--nu-values", type=float, nargs="+", help=f"default: {DEFAULT_NU_GRID}")
    p.set_defaults(func=cmd_sweep_nu)

    p = sub.add_parser("export-latent", help="train with latent_dim=2 and dump coordinates")
    _add_config_flags(p)
    p.add_argument("--out", help="CSV path (default: <output_dir>/latent.csv)")
    p.add_argument("--ood-class", type=int, default=None)
    p.add_argument("--fold", type=int, default=0)
    p.set_defaults(func=cmd_export_latent)

    p = sub.add_parser("gradcheck", help="finite-difference check of all gradients")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt", help=argparse.SUPPRESS)  # negative-control hook
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("train", help="train on a whole dataset and save a checkpoint")
    _add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="predict and score rows of a CSV with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-column", default=None, help="column to drop before scoring, if any")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ScenarioError, NumericError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
