"""Command line entry point: one subcommand per experiment."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import EXPERIMENTS, build_config, parse_config_text
from .errors import ConfigurationError
from .experiments import render, run
from .selftest import format_report, run_selftest

log = logging.getLogger("donsker_forms")


def _common(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--experiment", help="experiment name (subcommand 'run' only)")
    p.add_argument("--structure", help="ou_gauss, weighted_uniform or custom")
    p.add_argument("--n", dest="n_list", help="walk sizes, comma separated")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--m", type=int, help="Brownian grid size for limits")
    p.add_argument("--workers", type=int)
    p.add_argument("--functional")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--fixtures", help="oracle constants file")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="donsker-forms",
        description="Erroneous random walks and their Dirichlet-form limits.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS + ("run",):
        _common(sub.add_parser(name, help=f"run the {name} experiment"))
    o = sub.add_parser("oracle", help="regenerate the fine-grid oracle constants")
    o.add_argument("--m", type=int, default=None)
    o.add_argument("--samples", type=int, default=None)
    o.add_argument("--workers", type=int, default=None)
    o.add_argument("--out", help="fixtures file to write")
    return parser


def _oracle(args):
    from . import oracle

    data = oracle.run_oracle(
        m=args.m or oracle.ORACLE_M,
        samples=args.samples or oracle.ORACLE_SAMPLES,
        workers=args.workers,
    )
    oracle.write_fixtures(data, args.out or oracle.FIXTURE_PATH)
    for name, entry in data["constants"].items():
        print(f"{name} = {entry['value']:.6f} +- {entry['stderr']:.6f}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.command == "oracle":
        return _oracle(args)
    try:
        file_values = parse_config_text(Path(args.config).read_text()) if args.config else {}
        overrides = {
            k: getattr(args, k)
            for k in ("structure", "n_list", "samples", "seed", "m", "workers",
                      "functional", "out", "format", "fixtures")
        }
        overrides["experiment"] = args.experiment if args.command == "run" else args.command
        cfg = build_config(file_values, overrides)
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if cfg.experiment == "selftest":
        results = run_selftest(cfg)
        text = format_report(results)
        status = 0 if all(r.ok for r in results) else 1
    else:
        log.info("running %s", cfg)
        try:
            text = render(run(cfg), cfg.format)
        except ConfigurationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        status = 0
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
