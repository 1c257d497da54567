"""
Main Entry Point for holocenter.

This module is the command-line front end: it parses arguments, loads and
validates the scenario document, runs the requested analysis and reports the
exit status (also published as a GitHub Actions output when run as an action).

Usage:
    holocenter <command> --scenario <file> [--out <dir>] [--strict] [--seed <u64>]
    holocenter selftest [--out <dir>] [--seed <u64>]

Commands:
    spectrum, index, iterated-index, disk, verify, orbit, probe, scan, selftest

Environment Variables:
    HOLOCENTER_THREADS: Worker thread cap (default 4).
    HOLOCENTER_SEED: Default seed when --seed is not given (default 0).

Exit Codes:
    0: Success.
    1: Analysis failure (failed verdict, blowup, undetermined under --strict).
    2: Input error (invalid scenario, unknown command).
"""

import argparse
import os
import sys
import time

from scripts.errors import HolocenterError
from scripts.harness import COMMANDS, EXIT_ANALYSIS, EXIT_INPUT, EXIT_OK, exit_status_for, load_scenario, run_scenario
from scripts.holocenter_config import get_default_seed
from scripts.reporting import print_summary, write_meta, write_report
from scripts.selftest import run_selftest


def write_github_output(name: str, value: str) -> None:
    """
    Append a key-value pair to the GITHUB_OUTPUT file when it is set.

    Args:
        name: The output variable name.
        value: The output variable value.
    """
    github_output = os.getenv("GITHUB_OUTPUT")
    if github_output:
        with open(github_output, "a") as f:
            f.write(f"{name}={value}\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"::error::{message}")
        sys.exit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="holocenter", description="Holomorphic vector field analysis")
    parser.add_argument("command", help=f"one of: {', '.join(COMMANDS)}")
    parser.add_argument("--scenario", help="scenario JSON document")
    parser.add_argument("--out", default="holocenter-out", help="report directory (default: holocenter-out)")
    parser.add_argument("--strict", action="store_true", help="treat undetermined results as failures")
    parser.add_argument("--seed", type=int, default=None, help="random seed (default: HOLOCENTER_SEED or 0)")
    return parser


def _run_selftest(out_dir: str, seed: int, argv: list[str]) -> int:
    results = run_selftest(seed)
    failed = [r.name for r in results if not r.passed]
    status = EXIT_ANALYSIS if failed else EXIT_OK
    path = write_report(out_dir, "selftest", {"seed": seed, "checks": results, "passed": not failed})
    write_meta(out_dir, "selftest", argv, seed, status)
    print_summary("selftest", status, {"checks": len(results), "failed": ", ".join(failed) or "none"}, path)
    return status


def main(argv: list[str] | None = None) -> int:
    """
    Parse arguments, run one scenario and return the exit status.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:]).

    Returns:
        Exit code (0 success, 1 analysis failure, 2 input error).
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)

    if args.command not in COMMANDS:
        print(f"::error::unknown command: {args.command}")
        return EXIT_INPUT
    try:
        seed = args.seed if args.seed is not None else get_default_seed()
        if not 0 <= seed < 2 ** 64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    except ValueError as e:
        print(f"::error::{e}")
        return EXIT_INPUT

    start = time.time()
    if args.command == "selftest":
        status = _run_selftest(args.out, seed, argv)
    elif not args.scenario:
        print(f"::error::command '{args.command}' needs --scenario <file>")
        status = EXIT_INPUT
    else:
        try:
            spec = load_scenario(args.scenario, args.command, args.out)
        except (HolocenterError, ValueError) as e:
            print(f"::error::{e}")
            status = exit_status_for(e)
        else:
            status = run_scenario(spec, seed, strict=args.strict, argv=argv)

    print(f"Total execution time: {time.time() - start:.2f} seconds")
    write_github_output("status", "success" if status == EXIT_OK else "failed")
    write_github_output("exit_code", str(status))
    return status


if __name__ == "__main__":
    sys.exit(main())
