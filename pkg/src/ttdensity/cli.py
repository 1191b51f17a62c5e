"""Command line entry point: ``ttdensity <experiment> [options]``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run_experiment
from .matdecomp import DegeneratePivotError

log = logging.getLogger("ttdensity")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _override(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ttdensity", description=__doc__.splitlines()[0])
    p.add_argument("experiment", help=f"one of: {', '.join(EXPERIMENTS)}")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-5, help="TT precision (default: 1e-5)")
    p.add_argument("--grid-step", type=float, default=None,
                   help="spacing of the source grid (default: 0.2)")
    p.add_argument("--root", choices=["symmetric", "cholesky", "eigen"], default=None,
                   help="square root for grid-transform (default: all three)")
    p.add_argument("--pivot", choices=["full", "stochastic"], default="full")
    p.add_argument("--set", dest="overrides", type=_override, action="append", default=[],
                   metavar="KEY=VALUE", help="experiment parameter override, repeatable")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = ExperimentConfig(
            name=args.experiment, out=args.out, seed=args.seed, eps=args.eps,
            grid_step=args.grid_step, root=args.root, pivot=args.pivot,
            overrides=dict(args.overrides),
        )
        summary = run_experiment(cfg)
    except ConfigError as exc:
        print(f"ttdensity: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, DegeneratePivotError, MemoryError, FloatingPointError,
            ValueError) as exc:
        print(f"ttdensity: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"ttdensity: I/O failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path in summary.get("files", []):
        log.info("wrote %s", path)
    print(f"{cfg.name}: wrote {len(summary.get('files', []))} files to {cfg.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
