"""Command-line entry point.

Exit status: 0 when every verdict passes, 1 when any fails, 2 on an oracle
breach (two independent computations disagree).
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .experiments import RUNNERS, run_assemble
from .report import summarize

log = logging.getLogger("degenlab")

COMMANDS = ("weights", "assemble", "scaling", "hls", "lorentz", "sharpness", "calculus",
            "coeff", "riesz", "gaussian")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="degenlab",
        description="Verify weighted fractional-integration inequalities on lattices.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="TOML experiment file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--refine", type=int, default=None,
                        help="number of h-halvings in the refinement ladder")
    rp = sub.add_parser("report", help="summarise all reports in a directory")
    rp.add_argument("--out", default="reports")
    rp.add_argument("--config", default=None, help="ignored; accepted for uniformity")
    rp.add_argument("--seed", type=int, default=None)
    rp.add_argument("--refine", type=int, default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "report":
        rows, status = summarize(args.out)
        for fname, exp, name, verdict in rows:
            print(f"[{verdict}] {exp}: {name} ({fname})")
        return status

    cfg = load_config(args.config, seed=args.seed, refine=args.refine)
    if cfg.experiment != args.command:
        log.info("config experiment %r run as %r", cfg.experiment, args.command)
    out = args.out or cfg.out
    if args.command == "assemble":
        rep = run_assemble(cfg, out_dir=out)
    else:
        rep = RUNNERS[args.command](cfg)
    path = rep.write(out, stem=f"{args.command}_{_stem(args.config)}")
    for line in rep.summary_lines():
        print(line)
    print(f"report: {path} ({rep.wallclock:.1f} s)")
    return rep.status


def _stem(path):
    import os
    return os.path.splitext(os.path.basename(path))[0]


if __name__ == "__main__":
    sys.exit(main())
