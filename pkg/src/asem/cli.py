"""Command-line interface.

Subcommands: generate (synthetic dataset), train (one run), eval (checkpoint
against a dataset split), compare (objectives x seeds grid, optionally over
several batch sizes), validate (dataset/checkpoint sanity check).

Configuration is a flat JSON file; ``--set key=value`` overrides individual
entries (values parsed as JSON when possible, otherwise taken as strings).
Unknown keys are rejected by name. Exit codes: 0 success, 2 configuration
error, 3 data error, 4 numeric error. All output files are written atomically;
timestamps appear only in the per-command log file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from .data import SyntheticSpec, generate_synthetic, load_dataset, save_dataset
from .exceptions import (
    AsemError,
    BatchTooSmallError,
    CacheMismatchError,
    ConfigError,
    DimMismatchError,
    EpochOutOfRangeError,
    NonFiniteLossError,
    ZeroNormRowError,
)
from .fileio import atomic_write_text
from .losses import OBJECTIVE_NAMES
from .mlp import load_checkpoint, save_checkpoint
from .reports import (
    comparison_csv,
    comparison_markdown,
    epoch_metrics_csv,
    recall_report_csv,
    recall_report_table,
)
from .retrieval import sum_of_recalls
from .train import TrainConfig, evaluate_heads, run_comparison, train_one

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_CONFIG_ERRORS = (ConfigError, DimMismatchError, BatchTooSmallError, EpochOutOfRangeError)
_NUMERIC_ERRORS = (NonFiniteLossError, ZeroNormRowError, CacheMismatchError)

GENERATE_KEYS = {
    "name", "n_concepts", "captions_per_audio", "d_latent", "d_audio", "d_text",
    "noise_sigma", "seed", "identity_maps", "val_fraction", "test_fraction",
    "file_format",
}
TRAIN_KEYS = {
    "dataset", "objective", "margin", "temperature", "pos_coeffs", "neg_coeffs",
    "batch_size", "epochs", "base_lr", "lr_decay_factor", "lr_decay_every",
    "embedding_dim", "hidden_dim", "seeds", "beta1", "beta2", "eps",
}
COMPARE_KEYS = (TRAIN_KEYS - {"objective"}) | {"objectives", "batch_sizes"}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, _CONFIG_ERRORS):
        return EXIT_CONFIG
    if isinstance(exc, _NUMERIC_ERRORS):
        return EXIT_NUMERIC
    if isinstance(exc, AsemError):
        return EXIT_DATA
    if isinstance(exc, (ValueError, KeyError, TypeError, json.JSONDecodeError)):
        return EXIT_CONFIG
    if isinstance(exc, OSError):
        return EXIT_DATA
    raise exc


def parse_override(item: str) -> tuple[list[str], object]:
    """'a.b=1' -> (['a', 'b'], 1). Values parse as JSON, falling back to string."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {item!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def apply_override(config: dict, path: list[str], value) -> None:
    node = config
    for part in path[:-1]:
        nxt = node.get(part)
        if not isinstance(nxt, dict):
            nxt = {}
            node[part] = nxt
        node = nxt
    node[path[-1]] = value


def load_config(path: str | None, overrides, known_keys: set[str]) -> dict:
    """Config file plus ``--set`` overrides, validated against ``known_keys``."""
    config: dict = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            try:
                config = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(config, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
    for item in overrides or ():
        key_path, value = parse_override(item)
        apply_override(config, key_path, value)
    for key in config:
        if key not in known_keys:
            raise ConfigError(f"unknown config key {key!r}")
    return config


def _setup_log(out_dir: str, command: str) -> logging.Logger:
    os.makedirs(out_dir, exist_ok=True)
    logger = logging.getLogger(f"asem.cli.{command}.{id(object())}")
    logger.setLevel(logging.INFO)
    handler = logging.FileHandler(os.path.join(out_dir, f"{command}.log"))
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    logger.addHandler(handler)
    logger.propagate = False
    return logger


def _close_log(logger: logging.Logger) -> None:
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)


def _train_config_from(config: dict) -> TrainConfig:
    kwargs = dict(config)
    for key in ("pos_coeffs", "neg_coeffs", "seeds"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    try:
        return TrainConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def cmd_generate(args) -> int:
    config = load_config(args.config, args.set, GENERATE_KEYS)
    if args.seed is not None:
        config["seed"] = args.seed
    name = config.pop("name", "synthetic")
    file_format = config.pop("file_format", "binary")
    try:
        spec = SyntheticSpec(**config)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    logger = _setup_log(args.out, "generate")
    try:
        logger.info("generating dataset %s: %s", name, spec)
        bundle = generate_synthetic(spec, name=name)
        manifest = save_dataset(bundle, args.out, file_format=file_format)
        logger.info("wrote %s", manifest)
        print(manifest)
        return EXIT_OK
    finally:
        _close_log(logger)


def cmd_train(args) -> int:
    config = load_config(args.config, args.set, TRAIN_KEYS)
    train_config = _train_config_from(config)
    if args.seed is not None:
        seed = args.seed
    else:
        seed = train_config.seeds[0]
    logger = _setup_log(args.out, "train")
    try:
        logger.info("training objective=%s seed=%d", train_config.objective, seed)
        bundle = load_dataset(train_config.dataset) if train_config.dataset else None
        if bundle is None:
            raise ConfigError("config must name a dataset manifest")
        result = train_one(train_config, seed, bundle)
        logger.info("finished: best epoch %s", result.best_epoch)

        checkpoint_path = os.path.join(args.out, "model.asem")
        save_checkpoint(
            checkpoint_path,
            [result.audio_head, result.text_head],
            meta={
                "objective": train_config.objective,
                "seed": seed,
                "best_epoch": result.best_epoch,
                "embedding_dim": train_config.embedding_dim,
                "dataset": bundle.name,
            },
        )
        if train_config.epochs == 0:
            # nothing was trained; the initialized checkpoint is the artifact
            print(checkpoint_path)
            return EXIT_OK
        atomic_write_text(
            os.path.join(args.out, "epochs.csv"), epoch_metrics_csv(result.metrics)
        )
        eval_split = bundle.test if bundle.test is not None else bundle.val
        if eval_split is not None:
            report = evaluate_heads(result.audio_head, result.text_head, eval_split)
            atomic_write_text(os.path.join(args.out, "report.csv"), recall_report_csv(report))
            atomic_write_text(os.path.join(args.out, "report.txt"), recall_report_table(report))
            logger.info("%s sum of recalls: %f", eval_split.split, sum_of_recalls(report))
            print(recall_report_table(report), end="")
        print(checkpoint_path)
        return EXIT_OK
    finally:
        _close_log(logger)


def cmd_eval(args) -> int:
    heads, meta = load_checkpoint(args.checkpoint)
    if len(heads) != 2:
        raise ConfigError(
            f"checkpoint holds {len(heads)} heads; evaluation needs audio and text heads"
        )
    bundle = load_dataset(args.data)
    dataset = bundle.split(args.split)
    if dataset is None:
        raise ConfigError(f"dataset has no {args.split!r} split")
    audio_head, text_head = heads
    if audio_head.d_in != dataset.audio_dim or text_head.d_in != dataset.text_dim:
        raise DimMismatchError(
            f"checkpoint expects dims ({audio_head.d_in}, {text_head.d_in}); "
            f"dataset has ({dataset.audio_dim}, {dataset.text_dim})"
        )
    report = evaluate_heads(audio_head, text_head, dataset)
    print(recall_report_table(report), end="")
    if args.out:
        logger = _setup_log(args.out, "eval")
        try:
            logger.info("evaluated %s on %s[%s]", args.checkpoint, args.data, args.split)
            atomic_write_text(os.path.join(args.out, "report.csv"), recall_report_csv(report))
            atomic_write_text(os.path.join(args.out, "report.txt"), recall_report_table(report))
        finally:
            _close_log(logger)
    return EXIT_OK


def cmd_compare(args) -> int:
    config = load_config(args.config, args.set, COMPARE_KEYS)
    objectives = tuple(config.pop("objectives", OBJECTIVE_NAMES))
    batch_sizes = config.pop("batch_sizes", None)
    for name in objectives:
        if name not in OBJECTIVE_NAMES:
            raise ConfigError(
                f"unknown objective {name!r}; expected one of {OBJECTIVE_NAMES}"
            )
    if args.seed is not None:
        config["seeds"] = [args.seed]
    base = _train_config_from(config)
    if batch_sizes is None:
        batch_sizes = [base.batch_size]
    batch_sizes = [int(b) for b in batch_sizes]
    if not batch_sizes:
        raise ConfigError("batch_sizes must be non-empty")

    logger = _setup_log(args.out, "compare")
    try:
        if base.dataset is None:
            raise ConfigError("config must name a dataset manifest")
        bundle = load_dataset(base.dataset)
        all_reports = []
        for bs in batch_sizes:
            logger.info(
                "comparing %s at batch size %d over seeds %s",
                ",".join(objectives), bs, list(base.seeds),
            )
            reports = run_comparison(
                replace(base, batch_size=bs), objectives, bundle, jobs=args.jobs
            )
            all_reports.extend(reports)
            for rep in reports:
                for run in rep.runs:
                    logger.info(
                        "objective=%s batch=%d seed=%d %s",
                        rep.objective, bs, run.seed,
                        "ok" if run.ok else f"failed: {run.error}",
                    )
        atomic_write_text(os.path.join(args.out, "comparison.csv"), comparison_csv(all_reports))
        atomic_write_text(
            os.path.join(args.out, "comparison.md"), comparison_markdown(all_reports)
        )
        print(comparison_markdown(all_reports), end="")
        n_ok = sum(1 for rep in all_reports for run in rep.runs if run.ok)
        if n_ok == 0:
            print("error: no run succeeded", file=sys.stderr)
            return EXIT_NUMERIC
        return EXIT_OK
    finally:
        _close_log(logger)


def cmd_validate(args) -> int:
    bundle = load_dataset(args.data)
    for split_name in ("train", "val", "test"):
        ds = bundle.split(split_name)
        if ds is None:
            print(f"{split_name}: absent")
            continue
        print(
            f"{split_name}: {ds.n_audio} audio x {ds.n_text} text"
            f" ({ds.audio_dim}/{ds.text_dim} dims, {ds.n_pairs} pairs)"
        )
    if args.checkpoint:
        heads, _ = load_checkpoint(args.checkpoint)
        ref = bundle.train or bundle.val or bundle.test
        if len(heads) == 2 and ref is not None:
            audio_head, text_head = heads
            if audio_head.d_in != ref.audio_dim or text_head.d_in != ref.text_dim:
                raise DimMismatchError(
                    f"checkpoint dims ({audio_head.d_in}, {text_head.d_in}) do not match "
                    f"dataset dims ({ref.audio_dim}, {ref.text_dim})"
                )
        print(f"checkpoint: {len(heads)} heads, dims ok")
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asem",
        description="Metric-learning toolkit for cross-modal retrieval over paired features.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True, out_required=True):
        if config:
            p.add_argument("--config", help="JSON config file")
            p.add_argument(
                "--set", action="append", default=[], metavar="KEY=VALUE",
                help="override a config entry (repeatable, dotted paths allowed)",
            )
        p.add_argument("--out", required=out_required, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="seed override")

    p = sub.add_parser("generate", help="generate a synthetic paired-feature dataset")
    add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train one objective on a dataset")
    add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="dataset manifest path")
    p.add_argument("--split", default="test", choices=["train", "val", "test"])
    p.add_argument("--out", default=None, help="optional output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="train objectives x seeds and tabulate results")
    add_common(p)
    p.add_argument("--jobs", type=int, default=1, help="concurrent training runs")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="validate a dataset manifest (and checkpoint)")
    p.add_argument("--data", required=True, help="dataset manifest path")
    p.add_argument("--checkpoint", default=None)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # mapped to documented exit codes
        code = exit_code_for(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
