"""Command line entry point: ``alicectl run | preset | compare``."""
from __future__ import annotations

import argparse
import logging
import sys

from ..linear_env import ConfigError
from ..oracles import NotStabilizableError
from .compare import compare, format_table
from .config import load_config, preset
from .runner import run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ALL_DIVERGED = 3


def _build_parser():
    parser = argparse.ArgumentParser(prog="alicectl", description="Alice online controller benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out-dir", default=None, help="override out_dir from the config")

    p_pre = sub.add_parser("preset", help="run a built-in experiment")
    p_pre.add_argument("name", choices=["exp1", "exp2", "exp3", "exp1_noiseless"])
    p_pre.add_argument("--seeds", type=int, default=100)
    p_pre.add_argument("--horizon", type=int, default=None)
    p_pre.add_argument("--base-seed", type=int, default=0)
    p_pre.add_argument("--out-dir", default=None)
    p_pre.add_argument("--svg", action="store_true")

    p_cmp = sub.add_parser("compare", help="summarize a finished run directory")
    p_cmp.add_argument("--run-dir", required=True)
    return parser


def _execute(cfg):
    res = run(cfg)
    print(f"wrote {cfg.out_dir}")
    print(format_table(compare(cfg.out_dir)))
    return EXIT_ALL_DIVERGED if res["all_diverged"] else EXIT_OK


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.out_dir:
                cfg.out_dir = args.out_dir
            return _execute(cfg)
        if args.command == "preset":
            if args.seeds < 1:
                raise ConfigError("--seeds must be >= 1")
            cfg = preset(args.name, seeds=args.seeds, horizon=args.horizon,
                         base_seed=args.base_seed, out_dir=args.out_dir, emit_svg=args.svg)
            return _execute(cfg)
        print(format_table(compare(args.run_dir)))
        return EXIT_OK
    except (ConfigError, NotStabilizableError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
