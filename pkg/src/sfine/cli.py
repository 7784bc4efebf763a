"""Command-line entry point ``verify-cli``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigInvalid
from .harness import SUITES, HarnessConfig, emit, run

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="verify-cli", description="Run the verification suites and write a report.")
    p.add_argument("suite", choices=[*SUITES, "all"], help="suite to run")
    p.add_argument("--config", type=Path, help="JSON file mirroring HarnessConfig")
    p.add_argument("--seed", type=int, help="random seed (overrides the config)")
    p.add_argument("--d", type=int, action="append", help="module rank; repeat for several ranks")
    p.add_argument("--nodes", type=int, help="quadrature nodes per contour")
    p.add_argument("--tol", type=float, help="tolerance for the identity suite")
    p.add_argument("--json-out", type=Path, help="write the JSON report here")
    p.add_argument("--format", choices=["text", "json", "csv"], default="text", help="stdout format")
    p.add_argument("--negative-controls", action="store_true", help="add expected-fail control records")
    p.add_argument("--parallel", action="store_true", help="run checks concurrently")
    p.add_argument("--timings", action="store_true", help="include wall times in JSON (breaks byte-identity)")
    return p


def make_config(args: argparse.Namespace) -> HarnessConfig:
    cfg = HarnessConfig.from_json(args.config.read_text()) if args.config else HarnessConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.d:
        cfg.d = args.d
    if args.nodes is not None:
        cfg.nodes = args.nodes
    if args.tol is not None:
        cfg.tol_identities = args.tol
    if args.negative_controls:
        cfg.negative_controls = True
    if args.parallel:
        cfg.parallel = True
    if args.timings:
        cfg.timings = True
    if args.json_out is not None:
        cfg.output = str(args.json_out)
    cfg.suites = list(SUITES) if args.suite == "all" else [args.suite]
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
    except (ConfigInvalid, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = run(cfg)
    if cfg.output:
        Path(cfg.output).write_bytes(emit(report, "json"))
    sys.stdout.write(emit(report, args.format).decode())
    return EXIT_OK if report.exit_code == 0 else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
