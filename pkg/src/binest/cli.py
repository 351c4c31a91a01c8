"""Command-line entry point: ``binest <command> --config FILE --seed N [--out DIR]``.

Exit codes: 0 success, 2 configuration / input error, 3 numeric or
convergence failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import experiments as ex
from .errors import (BinestError, CapacityError, ConfigError, ConvergenceError, NumericError,
                     ParameterError, ParseError, PreconditionError, UnsupportedModelError)

COMMANDS = {
    "consistency": "consistency",
    "rate": "rate",
    "bn": "bn_recovery",
    "sensitivity": "sensitivity",
    "simulate": "simulate",
    "estimate": "estimate",
}
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="binest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment document")
        p.add_argument("--seed", type=_u64, required=name != "estimate",
                       help="master seed (unsigned 64-bit)")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--trials", type=int, help="override the number of trials")
        p.add_argument("--horizon", type=int, help="override the horizon T")
        p.add_argument("--workers", type=int, help="worker processes for trial chunks")
    return parser


def _summary(command: str, result) -> str:
    if command == "consistency":
        return (f"wrote {result.csv_path} and {result.svg_path}; "
                f"median final error {np.median(result.final_errors):.4g}")
    if command in ("rate", "sensitivity"):
        parts = [f"{lab}: terminal MSE {m:.4g}" for lab, m in zip(result.labels, result.mse[:, -1])]
        return f"wrote {result.csv_path}, {result.json_path}, {result.svg_path}\n" + "\n".join(parts)
    if command == "bn":
        return f"wrote {result.csv_path}; median F1 {result.median_f1:.4g}"
    if command == "simulate":
        seq, path = result
        return f"wrote {path} ({seq.T} transitions, n={seq.n})"
    tr, path = result
    return f"wrote {path} ({len(tr.k)} records)"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ex.ExperimentConfig.from_file(args.config)
        expected = COMMANDS[args.command]
        if cfg.experiment != expected:
            raise ConfigError(f"config describes experiment {cfg.experiment!r}, "
                              f"command expects {expected!r}")
        cfg = cfg.override(seed=args.seed, output_dir=args.out, trials=args.trials,
                           horizon=args.horizon, workers=args.workers)
        result = ex.run(cfg)
    except (ConfigError, ParseError, ParameterError, CapacityError, UnsupportedModelError,
            PreconditionError) as exc:
        print(f"binest: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, ConvergenceError) as exc:
        print(f"binest: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BinestError as exc:
        print(f"binest: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"binest: I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(_summary(args.command, result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
