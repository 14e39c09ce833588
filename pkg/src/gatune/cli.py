"""Command-line entry point: ``gatune <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .ga import GAConfig
from .tuner import TUNERS
from .tuner.core import METRICS

SUBCOMMANDS = ("tune", "validate", "compare", "sweep-cutoff", "sweep-budget", "grid", "report", "campaign")


def _config(text: str) -> GAConfig:
    """``mu,lambda,p_m,p_c`` or a JSON object with those keys."""
    text = text.strip()
    if text.startswith("{"):
        return GAConfig.from_dict(json.loads(text))
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected mu,lambda,p_m,p_c")
    try:
        return GAConfig(int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", help="JSON experiment file; flags override its values")
    p.add_argument("--problem", nargs="+", help="problem ids, e.g. 1 2 or F1")
    p.add_argument("--dim", type=int)
    p.add_argument("--metric", choices=METRICS)
    p.add_argument("--tuner", choices=TUNERS)
    p.add_argument("--budget", type=int)
    p.add_argument("--cutoff", type=int)
    p.add_argument("--runs-per-eval", type=int, dest="runs_per_eval")
    p.add_argument("--validation-runs", type=int, dest="validation_runs")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--paper-scale", action="store_true", default=None, dest="paper_scale")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gatune", description="Tune a (mu + lambda) GA on PBO problems.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("tune", "grid", "campaign"):
        _common(sub.add_parser(name))
    p = sub.add_parser("validate")
    _common(p)
    p.add_argument("--config", type=_config, required=True, help="mu,lambda,p_m,p_c")
    p.add_argument("--label")
    p = sub.add_parser("compare")
    p.add_argument("baseline", help="validation directory of the baseline")
    p.add_argument("others", nargs="+", help="validation directories to compare")
    p.add_argument("--out", help="CSV file to write; stdout when omitted")
    p = sub.add_parser("sweep-cutoff")
    _common(p)
    p.add_argument("--repetitions", type=int, default=20)
    p.add_argument("--points", type=int, nargs="+", help="grid indices t to run (default all 16)")
    p = sub.add_parser("sweep-budget")
    _common(p)
    p.add_argument("--points", type=int, nargs="+", help="grid indices t to run (default all 5)")
    p = sub.add_parser("report")
    p.add_argument("root", nargs="?", help="results directory")
    p.add_argument("--out")
    return parser


def spec_from_args(args) -> harness.ExperimentSpec:
    data = {}
    if args.spec:
        data = harness.ExperimentSpec.load(args.spec).to_dict()
    else:
        data["out"] = harness.default_out_root()
    for key in ("problem", "dim", "metric", "tuner", "budget", "cutoff", "runs_per_eval", "validation_runs", "seed", "out", "paper_scale"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    return harness.ExperimentSpec.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"gatune {args.command}: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "compare":
        base = harness.ValidationReport.read(args.baseline)
        others = [harness.ValidationReport.read(d) for d in args.others]
        text = harness.comparison_csv(harness.comparison_rows(base, others))
        if args.out:
            harness.write_text(args.out, text)
        else:
            sys.stdout.write(text)
        return 0
    if args.command == "report":
        root = args.root or harness.default_out_root()
        for name, path in harness.cmd_report(root, args.out).items():
            print(f"{name}: {path}")
        return 0

    spec = spec_from_args(args)
    if args.command == "tune":
        for pid, result in zip(spec.problem, harness.cmd_tune(spec)):
            print(f"F{pid}: {result.best_config.label()} cost={result.best_cost.value!r} spent={result.spent}")
    elif args.command == "grid":
        for pid, result in zip(spec.problem, harness.cmd_grid(spec)):
            print(f"F{pid}: {result.best_config.label()} cost={result.best_cost.value!r}")
    elif args.command == "validate":
        for report in harness.cmd_validate(spec, args.config, args.label):
            print(f"F{report.problem.id} {report.label}: ERT={report.ert!r} AUC={report.auc!r}")
    elif args.command == "campaign":
        for pid, rows in harness.run_campaign(spec).items():
            sys.stdout.write(harness.comparison_csv(rows))
    elif args.command == "sweep-cutoff":
        harness.cmd_sweep_cutoff(spec, args.repetitions, args.points)
        print(f"wrote cutoff sweep under {spec.out}")
    elif args.command == "sweep-budget":
        harness.cmd_sweep_budget(spec, args.points)
        print(f"wrote budget sweep under {spec.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
