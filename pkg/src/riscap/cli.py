"""Command-line entry point: ``riscap {sweep-snr,sweep-res,validate,optimize}``.

Exit status is 0 on success, 1 when a computation fails and 2 for a bad
configuration or bad arguments.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import sys

from . import matrix_analysis
from .config import ExperimentConfig, load_config, with_overrides
from .errors import ConfigError, RisCapError
from .experiments import cmd_optimize, cmd_sweep_res, cmd_sweep_snr
from .validation import SUITES, run_suites

EXIT_OK, EXIT_COMPUTE, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riscap", description="Ergodic capacity of RIS-aided Rician MIMO links.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    common.add_argument("--out", help="output CSV path, '-' for stdout")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    snr = sub.add_parser("sweep-snr", parents=[common], help="capacity, bounds and asymptote versus SNR")
    snr.add_argument("--format", choices=("wide", "long"), default="wide")
    res = sub.add_parser("sweep-res", parents=[common], help="capacity versus number of RIS elements")
    res.add_argument("--mode", choices=("a", "b"), default="a")
    val = sub.add_parser("validate", parents=[common], help="run the oracle suites")
    val.add_argument("--suite", action="append", choices=sorted(SUITES), help="run only this suite (repeatable)")
    val.add_argument("--inject-j-scale", type=float, default=None, help=argparse.SUPPRESS)
    opt = sub.add_parser("optimize", parents=[common], help="GA phase optimization")
    opt.add_argument("--phases-out", help="file for the optimized phases, one per line")
    return parser


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as handle:
            yield handle


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return with_overrides(cfg, seed=args.seed, trials=args.trials, out=args.out, threads=args.threads)


def _validate(args, cfg, handle):
    previous = matrix_analysis._J_SCALE
    if args.inject_j_scale is not None:
        matrix_analysis._J_SCALE = args.inject_j_scale
    def echo(line):
        handle.write(line + "\n")
        handle.flush()

    try:
        results = run_suites(args.suite, seed=cfg.seed, trials=args.trials, echo=echo)
    finally:
        matrix_analysis._J_SCALE = previous
    failed = [r.name for r in results if not r.passed]
    handle.write(f"{len(results) - len(failed)}/{len(results)} suites passed\n")
    return EXIT_COMPUTE if failed else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _load(args)
        with _output(cfg.output_path) as handle:
            if args.command == "sweep-snr":
                cmd_sweep_snr(cfg, handle, long_format=args.format == "long")
            elif args.command == "sweep-res":
                cmd_sweep_res(cfg, args.mode, handle)
            elif args.command == "validate":
                return _validate(args, cfg, handle)
            else:
                phases = None
                if args.phases_out:
                    phases = open(args.phases_out, "w")
                try:
                    cmd_optimize(cfg, handle, phases)
                finally:
                    if phases is not None:
                        phases.close()
    except ConfigError as exc:
        print(f"riscap: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RisCapError, ArithmeticError) as exc:
        print(f"riscap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except OSError as exc:
        print(f"riscap: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
