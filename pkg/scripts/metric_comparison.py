"""Tune every listed problem under both ERT and AUC, validate, and build the report tables.

Each problem gets a full campaign per metric (tuning, 100-run validation of the
tuned configuration and of the EA, Mann-Whitney comparison), then
``gatune report`` style tables are written to ``<out>/report``.
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field

from gatune.harness import ExperimentSpec, cmd_report, run_campaign


@dataclass
class ComparisonConfig:
    problems: list[int] = field(default_factory=lambda: [1, 2, 3])
    dim: int = 100
    tuner: str = "race"
    budget: int = 500
    cutoff: int = 50_000
    validation_runs: int = 100
    seed: int = 0
    out: str = "runs/metric-comparison"


def main(argv=None) -> None:
    cfg = ComparisonConfig()
    parser = argparse.ArgumentParser(description=__doc__)
    for name, value in vars(cfg).items():
        flag = "--" + name.replace("_", "-")
        if isinstance(value, list):
            parser.add_argument(flag, type=int, nargs="+", default=value)
        else:
            parser.add_argument(flag, type=type(value), default=value)
    parser.add_argument("--paper-scale", action="store_true")
    args = vars(parser.parse_args(argv))
    paper_scale = args.pop("paper_scale")
    cfg = ComparisonConfig(**args)

    for metric in ("ert", "auc"):
        spec = ExperimentSpec(
            problem=tuple(cfg.problems), dim=cfg.dim, tuner=cfg.tuner, metric=metric, budget=cfg.budget,
            cutoff=cfg.cutoff, validation_runs=cfg.validation_runs, seed=cfg.seed, out=cfg.out, paper_scale=paper_scale,
        )
        run_campaign(spec)
    for name, path in cmd_report(cfg.out).items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
