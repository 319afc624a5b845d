"""Command-line experiment runner: ``offlang <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import sys

from .commands import (
    EXIT_USAGE, cmd_evaluate, cmd_gradcheck, cmd_predict, cmd_preprocess, cmd_synth, cmd_train,
    handle_errors, load_model, preprocess_dataset,
)
from .config import ConfigError, ExperimentConfig, config_from_dict, load_config


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="offlang", description="Offensive-language experiment runner")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("preprocess", help="apply a preprocessing regime to a TSV")
    pp.add_argument("input")
    pp.add_argument("output")
    pp.add_argument("--regime", choices=("classical", "transformer"), required=True)
    pp.add_argument("--keep-case", action="store_true", help="classical regime: skip lowercasing")

    tr = sub.add_parser("train", help="train the configured model and report on validation data")
    tr.add_argument("--config", required=True)
    tr.add_argument("--output-dir")
    tr.add_argument("--seed", type=int, help="replace the config seeds with seed, seed+1, ...")
    tr.add_argument("--threads", type=int, default=1)
    tr.add_argument("--force", action="store_true", help="overwrite results of a different config")

    ev = sub.add_parser("evaluate", help="score one or more trained models on a labeled TSV")
    ev.add_argument("models", nargs="+", help="run directories, ensemble directories or .ckpt files")
    ev.add_argument("--data", required=True)
    ev.add_argument("--output", help="also write the structured report here")

    pr = sub.add_parser("predict", help="label an unlabeled TSV")
    pr.add_argument("model")
    pr.add_argument("input")
    pr.add_argument("output")

    gc = sub.add_parser("gradcheck", help="compare analytic and numerical encoder gradients")
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--strict", type=float, nargs="?", const=1e-5, default=None,
                    help="tighter tolerance (default 1e-5 when given without a value)")
    gc.add_argument("--objective", choices=("classify", "mlm"), default="classify")

    sy = sub.add_parser("synth", help="write a synthetic source/target code-switch benchmark")
    sy.add_argument("--config")
    sy.add_argument("--seed", type=int)
    sy.add_argument("--output-dir")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE

    from threadpoolctl import threadpool_limits

    # BLAS stays single-threaded so results do not depend on the machine
    with threadpool_limits(limits=1):
        if args.command == "preprocess":
            return handle_errors(cmd_preprocess, args.input, args.regime, args.output,
                                 lowercase=not args.keep_case)
        if args.command == "train":
            return handle_errors(cmd_train, args.config, args.output_dir, args.threads, args.force,
                                 args.seed)
        if args.command == "evaluate":
            return handle_errors(cmd_evaluate, args.models, args.data, args.output)
        if args.command == "predict":
            return handle_errors(cmd_predict, args.model, args.input, args.output)
        if args.command == "gradcheck":
            tol = args.strict if args.strict is not None else 1e-4
            return handle_errors(cmd_gradcheck, args.seed, tol, args.objective)
        return handle_errors(cmd_synth, args.config, args.seed, args.output_dir)


__all__ = [
    "ConfigError", "ExperimentConfig", "build_parser", "cmd_evaluate", "cmd_gradcheck",
    "cmd_predict", "cmd_preprocess", "cmd_synth", "cmd_train", "config_from_dict",
    "load_config", "load_model", "main", "preprocess_dataset",
]
