"""Command line entry point: ``oamwalk run | list-scenarios | show-config | verify``."""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from .config import dump_config, load_config, log_level
from .exceptions import ConfigValidationError, OamWalkError
from .invariants import run_checks
from .scenarios import default_config, list_scenarios, run_scenario

logger = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oamwalk",
        description=(
            "OAM quantum walk in a q-plate ring resonator: "
            "simulation, readout and sorter modelling"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a scenario from a YAML file or the registry")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("config", nargs="?", help="Path to a scenario YAML file")
    source.add_argument("--scenario", help="Name of a registered scenario")
    run.add_argument("--output-dir", type=Path,
                     help="Output root (overrides config and OAMWALK_OUTPUT_DIR)")

    sub.add_parser("list-scenarios", help="List registered scenarios")

    show = sub.add_parser("show-config", help="Print the default YAML of a registered scenario")
    show.add_argument("name")

    verify = sub.add_parser("verify", help="Run the self-check suite")
    verify.add_argument("--quick", action="store_true", help="Skip the sorter checks")
    return parser


def _lookup(name: str):
    try:
        return default_config(name)
    except KeyError:
        available = ", ".join(list_scenarios())
        print(f"Unknown scenario '{name}'. Available: {available}", file=sys.stderr)
        return None


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _lookup(args.scenario) if args.scenario else load_config(args.config)
    if cfg is None:
        return 1
    result = run_scenario(cfg, args.output_dir)
    print(f"{result.scenario}: wrote {len(result.files)} file(s) to {result.directory}")
    return 0


def _cmd_list(args: argparse.Namespace) -> int:
    for name in list_scenarios():
        print(f"{name:22s} {default_config(name).description}")
    return 0


def _cmd_show(args: argparse.Namespace) -> int:
    cfg = _lookup(args.name)
    if cfg is None:
        return 1
    print(dump_config(cfg), end="")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    results = run_checks(quick=args.quick)
    for r in results:
        print(f"{'✅' if r.passed else '❌'} {r.name}: {r.detail}")
    failed = [r for r in results if not r.passed]
    print(f"\n{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


COMMANDS = {
    "run": _cmd_run,
    "list-scenarios": _cmd_list,
    "show-config": _cmd_show,
    "verify": _cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Exit status: 0 success, 1 runtime or check failure, 2 invalid configuration."""
    load_dotenv()
    logging.basicConfig(
        level=log_level(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )
    args = _build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigValidationError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        for err in e.errors:
            print(f"  {err}", file=sys.stderr)
        logger.debug(e.log_details)
        return 2
    except OamWalkError as e:
        print(f"Error: {e.message}", file=sys.stderr)
        if e.log_details:
            logger.debug(e.log_details)
        return 1


if __name__ == "__main__":
    sys.exit(main())
