"""Command line entry point: ``twr-qos <command> [options]``.

Exit status is 0 on success, 1 when a validation or post-run check fails and
2 on a configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig, parse_config
from .experiments import SweepSpec, emit_results, run_sweep

DEFAULT_GRIDS = {
    "sweep-power": ("power_db", "0 3 6 9 12 15 18 21 24 27 30"),
    "sweep-theta": ("theta", "0.01 0.1 1 10 100"),
    "sweep-relay": ("relay_distance", "0.25 0.5 0.75 1 1.25 1.5 1.75"),
    "region": ("weight_a", "0.1 0.2 0.3 0.4 0.5 0.6 0.7 0.8 0.9"),
}


def _load(args) -> ScenarioConfig:
    text = Path(args.config).read_text(encoding="utf-8") if args.config else ""
    cfg = parse_config(text)
    changes = {}
    if args.samples is not None:
        changes["samples"] = args.samples
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.schemes:
        changes["protocols"] = tuple(args.schemes.replace(",", " ").split())
    return cfg.replace(**changes) if changes else cfg


def _grid(text: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"cannot read grid {text!r}") from None
    if not grid:
        raise ConfigError("grid is empty")
    return grid


def _write(doc: str, output: str | None) -> None:
    if output:
        Path(output).write_text(doc, encoding="utf-8")
    else:
        sys.stdout.write(doc)


def _report(result) -> int:
    status = 0
    for row in result.unconverged():
        print(f"warning: {row.scheme} did not converge at {result.variable} = {row.value:g}", file=sys.stderr)
    if result.variable == "theta":
        for scheme, a, b in result.monotonicity_violations(tol=1e-9):
            print(f"check failed: {scheme} objective increases from theta = {a:g} to {b:g}", file=sys.stderr)
            status = 1
    return status


def _sweep(args, variable: str) -> int:
    cfg = _load(args)
    grid = _grid(args.grid or DEFAULT_GRIDS[args.command][1])
    result = run_sweep(cfg, SweepSpec(variable, grid))
    _write(emit_results(result, args.format), args.output)
    return _report(result)


def _optimize(args) -> int:
    cfg = _load(args)
    result = run_sweep(cfg, SweepSpec("power_db", (cfg.power_a_db,)))
    _write(emit_results(result, args.format), args.output)
    return _report(result)


def _validate(args) -> int:
    from .validation import run_all

    checks = run_all(quick=not args.full)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twr-qos", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value scenario file (defaults when omitted)")
        p.add_argument("--samples", type=int, help="override the sample count")
        p.add_argument("--seed", type=int, help="override the seed")
        p.add_argument("--schemes", help="override the scheme list, e.g. 'three_phase two_phase'")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output", "-o", help="write here instead of stdout")

    common(sub.add_parser("optimize", help="run the configured schemes once"))
    for name, (variable, grid) in DEFAULT_GRIDS.items():
        p = sub.add_parser(name, help=f"sweep {variable} (default grid: {grid})")
        common(p)
        p.add_argument("--grid", help="space- or comma-separated grid values")
    v = sub.add_parser("validate", help="oracle, stationarity and feasibility self-checks")
    v.add_argument("--full", action="store_true", help="more oracle draws and a larger feasibility run")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _validate(args)
        if args.command == "optimize":
            return _optimize(args)
        return _sweep(args, DEFAULT_GRIDS[args.command][0])
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
