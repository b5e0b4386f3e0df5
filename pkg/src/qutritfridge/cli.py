"""Command-line scenario runner.

Exit codes: 0 success, 2 configuration error, 3 convergence failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .exceptions import (ConfigurationError, ContractViolation, ConvergenceError,
                         InvalidSystemError, NonUniqueSteadyState, NumericalError)
from .io import ResultCache, load_config, write_csv
from .scenarios import SCENARIOS, run, scenario_from_config

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 2, 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qutritfridge",
        description="Steady-state currents of collectively coupled qutrit refrigerators.")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", help="TOML file with scenario fields")
        p.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
        p.add_argument("--seed", type=int, help="ensemble seed (overrides config)")
        p.add_argument("--threads", type=int, help="worker threads (overrides config)")
        p.add_argument("--no-cache", action="store_true", help="ignore and do not write the cache")
        p.add_argument("--cache-dir", help="cache directory")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config) if args.config else {}
        if not isinstance(config, dict):
            raise ConfigurationError("config must be a table")
        scenario = scenario_from_config(args.scenario, config, seed=args.seed,
                                        threads=args.threads)
        cache = ResultCache(args.cache_dir, enabled=not args.no_cache)
        rows = run(scenario, cache)
        if args.out == "-":
            write_csv(rows, sys.stdout)
        else:
            write_csv(rows, args.out)
    except (ConfigurationError, InvalidSystemError, ContractViolation) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, NonUniqueSteadyState, NumericalError) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
