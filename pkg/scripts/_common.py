"""Shared plumbing for the sweep scripts."""

import argparse
from pathlib import Path

from twr_qos.config import ScenarioConfig
from twr_qos.experiments import emit_results


def parser(description: str, samples: int = 20_000) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--samples", type=int, default=samples)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("results"))
    return p


def base_config(args, **changes) -> ScenarioConfig:
    return ScenarioConfig(samples=args.samples, seed=args.seed, **changes)


def save(result, out: Path, name: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    path.write_text(emit_results(result, "csv"), encoding="utf-8")
    return path


def table(result, schemes) -> str:
    head = f"{result.variable:>14} " + " ".join(f"{s:>22}" for s in schemes)
    lines = [head]
    for v in result.grid:
        cells = []
        for s in schemes:
            row = next(r for r in result.rows if r.value == v and r.scheme == s)
            cells.append(f"{row.objective:>21.4f}{'' if row.converged else '*'}")
        lines.append(f"{v:>14g} " + " ".join(cells))
    return "\n".join(lines)
