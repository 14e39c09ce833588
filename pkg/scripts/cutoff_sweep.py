"""Tune under ERT and AUC at cutoffs between 0.5 and 2 times the EA's ERT.

Writes sweep.csv and selected.csv under ``<out>/F<id>/sweep-cutoff-<tuner>/``.
The defaults are a desk-scale version of the full sweep (20 repetitions, all
16 cutoffs, 5000 target runs); pass --full for that.
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field

from gatune.harness import CUTOFF_STEPS, ExperimentSpec, cmd_sweep_cutoff


@dataclass
class SweepConfig:
    problems: list[int] = field(default_factory=lambda: [1])
    tuner: str = "race"
    budget: int = 500
    repetitions: int = 5
    points: list[int] = field(default_factory=lambda: [0, 2, 5, 10, 15])
    validation_runs: int = 100
    validation_cutoff: int = 50_000
    seed: int = 0
    out: str = "runs/cutoff-sweep"


def main(argv=None) -> None:
    cfg = SweepConfig()
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--problems", type=int, nargs="+", default=cfg.problems)
    parser.add_argument("--tuner", default=cfg.tuner)
    parser.add_argument("--budget", type=int, default=cfg.budget)
    parser.add_argument("--repetitions", type=int, default=cfg.repetitions)
    parser.add_argument("--points", type=int, nargs="+", default=cfg.points)
    parser.add_argument("--validation-runs", type=int, default=cfg.validation_runs)
    parser.add_argument("--validation-cutoff", type=int, default=cfg.validation_cutoff)
    parser.add_argument("--seed", type=int, default=cfg.seed)
    parser.add_argument("--out", default=cfg.out)
    parser.add_argument("--full", action="store_true", help="20 repetitions, 16 cutoffs, 5000 target runs")
    args = vars(parser.parse_args(argv))
    full = args.pop("full")
    cfg = SweepConfig(**args)
    if full:
        cfg.repetitions, cfg.points, cfg.budget = 20, list(range(CUTOFF_STEPS)), 5000

    spec = ExperimentSpec(
        problem=tuple(cfg.problems), tuner=cfg.tuner, budget=cfg.budget, cutoff=cfg.validation_cutoff,
        validation_runs=cfg.validation_runs, seed=cfg.seed, out=cfg.out, paper_scale=full,
    )
    rows = cmd_sweep_cutoff(spec, cfg.repetitions, cfg.points, cfg.validation_cutoff)
    print(f"{len(rows)} tuning runs written under {spec.out_path}")


if __name__ == "__main__":
    main()
