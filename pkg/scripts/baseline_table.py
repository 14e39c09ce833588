"""ERT and AUC of the (1+1) EA on a set of problems, one row per problem."""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field

from gatune.harness import BASELINE, validate
from gatune.metrics import fmt_number
from gatune.pbo import make_problem


@dataclass
class BaselineConfig:
    problems: list[int] = field(default_factory=lambda: [1, 2, 3])
    dim: int = 100
    runs: int = 500
    cutoff: int = 50_000
    seed: int = 2024


def main(argv=None) -> None:
    cfg = BaselineConfig()
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--problems", type=int, nargs="+", default=cfg.problems)
    parser.add_argument("--dim", type=int, default=cfg.dim)
    parser.add_argument("--runs", type=int, default=cfg.runs)
    parser.add_argument("--cutoff", type=int, default=cfg.cutoff)
    parser.add_argument("--seed", type=int, default=cfg.seed)
    cfg = BaselineConfig(**vars(parser.parse_args(argv)))

    print("problem,target,ert,auc,successes")
    for pid in cfg.problems:
        problem = make_problem(pid, cfg.dim)
        rep = validate(BASELINE, problem, cfg.runs, cfg.cutoff, cfg.seed, label="EA")
        successes = sum(r.hitting_time is not None for r in rep.runs)
        print(f"F{pid},{fmt_number(problem.final_target)},{fmt_number(rep.ert)},{fmt_number(rep.auc)},{successes}", flush=True)


if __name__ == "__main__":
    main()
