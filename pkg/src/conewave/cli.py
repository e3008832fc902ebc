"""Command-line front end.

    conewave run --scenario <path> --out <dir> [--oracle] [--refine] [--svg]
                 [--timings]
    conewave check --scenario <path>
    conewave families

Exit codes: 0 success (run: all suites passed), 1 a suite failed,
2 a module error interrupted the run, 64 usage error (unknown flag or
subcommand), 65 invalid scenario content, 66 scenario file not found.
"""
from __future__ import annotations

import argparse
import os
import sys

from .errors import ConewaveError
from .metric import FAMILIES
from .scenario import load_scenario, run_scenario

__all__ = ["main"]

EX_USAGE = 64
EX_DATAERR = 65
EX_NOINPUT = 66


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; the CLI contract wants 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="conewave",
                     description="cone-structure wavefront toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    run = sub.add_parser("run", help="run a scenario and write artifacts")
    run.add_argument("--scenario", required=True, help="scenario JSON file")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--oracle", action="store_true",
                     help="run the lattice-oracle comparison (needs /oracle)")
    run.add_argument("--refine", action="store_true",
                     help="refine the final slice (needs /refinement)")
    run.add_argument("--svg", action="store_true",
                     help="emit scene.svg even if not in outputs")
    run.add_argument("--timings", action="store_true",
                     help="fill report timings (breaks byte-determinism)")

    chk = sub.add_parser("check", help="validate a scenario without running")
    chk.add_argument("--scenario", required=True, help="scenario JSON file")

    sub.add_parser("families", help="list metric families and parameters")
    return parser


def _load(path):
    if not os.path.exists(path):
        print(f"conewave: scenario file not found: {path}", file=sys.stderr)
        return None, EX_NOINPUT
    try:
        return load_scenario(path), 0
    except ConewaveError as exc:
        print(f"conewave: invalid scenario: {exc}", file=sys.stderr)
        return None, EX_DATAERR


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error("a subcommand is required (run, check, families)")

    if args.command == "families":
        for fam in sorted(FAMILIES):
            print(fam)
            for key, desc in FAMILIES[fam].items():
                print(f"  {key}: {desc}")
        return 0

    scenario, code = _load(args.scenario)
    if scenario is None:
        return code

    if args.command == "check":
        print(f"{scenario.name}: ok ({len(scenario.rings)} ring(s), "
              f"{len(scenario.t_grid)} slice times)")
        return 0

    code, report = run_scenario(scenario, args.out,
                                use_oracle=args.oracle,
                                use_refine=args.refine,
                                want_svg=args.svg,
                                timings=args.timings)
    if code == 2:
        err = report.get("error", {})
        print(f"conewave: run failed: {err.get('type')}: {err.get('message')}",
              file=sys.stderr)
    else:
        for su in report["suites"]:
            print(f"{'PASS' if su['pass'] else 'FAIL'} {su['name']}")
    return code


if __name__ == "__main__":
    sys.exit(main())
