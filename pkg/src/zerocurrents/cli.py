"""Command line runner: ``python -m zerocurrents --config FILE [--seed U64] [--workers N]``.

Exit codes: 0 all rows pass, 1 some row or check fails, 2 invalid or unreadable
configuration, 3 numerical contract failure inside a module.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import (
    BranchOverflowError,
    EmbeddingTooCoarseError,
    NumericalContractError,
    QuantizationError,
)
from .experiments import ConfigError, load_config, run_experiment

log = logging.getLogger("zerocurrents")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (NumericalContractError, EmbeddingTooCoarseError, BranchOverflowError, QuantizationError)


def _seed(text):
    try:
        seed = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return seed


def _workers(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("workers must be >= 1")
    return n


def build_parser():
    p = argparse.ArgumentParser(
        prog="zerocurrents",
        description="Run a zero-current experiment from a key=value config file.",
    )
    p.add_argument("--config", required=True, metavar="PATH",
                   help="config file (bare names also resolve to the bundled configs)")
    p.add_argument("--seed", type=_seed, metavar="U64", help="override master_seed from the config")
    p.add_argument("--workers", type=_workers, default=1, metavar="N", help="sampling threads (default 1)")
    p.add_argument("--output-dir", metavar="DIR", help="override output_dir from the config")
    p.add_argument("-q", "--quiet", action="store_true", help="only print the summary line")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)

    try:
        report, out = run_experiment(cfg, workers=args.workers, output_dir=args.output_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical contract failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    for row in report["rows"]:
        log.info("%-4s %-32s lhs=%-12.6g stderr=%-10.3g rhs=%-12.6g gap=%.3g slack=%.3g",
                 "PASS" if row["pass"] else "FAIL", row["label"], _num(row["lhs"]), row["lhs_stderr"],
                 row["rhs"], _num(row["abs_gap"]), row["slack"])
    for check in report["checks"]:
        log.info("%-4s %s %s", "PASS" if check["pass"] else "FAIL", check["name"], check["values"])
    status = "all rows pass" if report["all_pass"] else "some rows FAIL"
    print(f"{cfg.experiment}: {status}; wrote {out}")
    return EXIT_OK if report["all_pass"] else EXIT_FAIL


def _num(x):
    return float("nan") if x is None else x


if __name__ == "__main__":
    sys.exit(main())
