"""Command-line entry point ``burgerlab``.

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical failure.
``BURGERS_OUT`` overrides ``--out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .config import EXPERIMENTS, ConfigError, default_config, load
from .experiments import ExperimentError, run_experiment
from .forcing import ForcingError
from .torus import GridError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("burgerlab")

_HELP = {
    "evolve": "evolve initial data and track convergence to the stationary set",
    "stationary": "enumerate stationary entropy solutions and check their jumps",
    "hbar": "tabulate the effective Hamiltonian over a momentum scan",
    "spectrum": "Fourier decay exponents of stationary and evolving fields",
    "resonance": "scan traveling-forcing speeds and classify resonance",
    "rescale": "check that the fast-forcing and long-time problems coincide",
    "waveconv": "convergence of the potential to a wave solution",
}


class _ArgParser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors count as configuration errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default,
                        help="experiment configuration file (INI)")
    parser.add_argument("--out", metavar="DIR", default=default,
                        help="output directory (BURGERS_OUT takes precedence)")
    parser.add_argument("--workers", metavar="N", type=int,
                        default=argparse.SUPPRESS if suppress else 1,
                        help="parallel runs for scans")
    parser.add_argument("--plot", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="also write gnuplot-ready data and a script")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgParser(prog="burgerlab",
                        description="Forced inviscid Burgers on the torus: experiments.")
    _global_flags(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgParser)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=_HELP[name], description=_HELP[name])
        _global_flags(sp, suppress=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load(args.config, experiment=args.command) if args.config \
            else default_config(args.command)
        if args.workers < 1:
            raise ConfigError(f"--workers must be at least 1, got {args.workers}")
        out = os.environ.get("BURGERS_OUT") or args.out or cfg.out_dir
        log.info("running %s into %s", cfg.experiment, out)
        record = run_experiment(cfg, out_dir=out, workers=args.workers,
                                plot=args.plot or cfg.plot)
    except (ConfigError, GridError, ForcingError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps({"experiment": record.experiment, "out_dir": record.out_dir,
                      "metrics": record.metrics}, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
