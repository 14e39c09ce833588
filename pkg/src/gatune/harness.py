"""Experiment orchestration: tuning campaigns, validation, comparisons, sweeps and reports.

Every artifact is written atomically and indexed in ``manifest.json`` under the
output root.  Numbers are written in shortest round-trip form, so replaying a
campaign with the same specification reproduces the files byte for byte.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .ga import GAConfig, RunBudget, RunLog, check_feasible, run_ga
from .metrics import (
    BudgetGrid,
    auc,
    auc_per_run,
    default_target_grid,
    ert_from_times,
    fixed_target_curve,
    fmt_number,
    runs_from_csv,
    runs_to_csv,
)
from .pbo import Problem, make_problem, parse_problem_id
from .seeding import config_digest, derive_seed
from .stats import bh_adjust, format_improvement, mann_whitney_u, relative_ert_across_metrics, stars
from .stats import relative_improvement_auc, relative_improvement_ert
from .tuner import TUNERS, CostSpec, GAObjective, TuneResult, tune
from .tuner.core import METRICS

BASELINE = GAConfig(1, 1, 0.01, 0.0)
# budget x runs_per_eval x cutoff above this needs paper_scale
SMOKE_LIMIT = 10**9
BASELINE_RUNS = 200
CUTOFF_STEPS = 16
BUDGET_STEPS = 5
OUT_ENV = "GATUNE_OUT"


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    problem: tuple = (1,)
    dim: int = 100
    tuner: str = "race"
    metric: str = "auc"
    budget: int = 5000
    cutoff: int = 50_000
    runs_per_eval: int = 10
    validation_runs: int = 100
    seed: int = 0
    out: str = "results"
    instance_seed: int = 0
    target: float | None = None
    paper_scale: bool = False

    def __post_init__(self):
        problems = self.problem if isinstance(self.problem, (list, tuple)) else (self.problem,)
        try:
            problems = tuple(parse_problem_id(p) for p in problems)
        except ValueError as exc:
            raise SpecError(str(exc)) from None
        if not problems:
            raise SpecError("at least one problem is required")
        object.__setattr__(self, "problem", problems)
        if self.tuner not in TUNERS:
            raise SpecError(f"tuner must be one of {TUNERS}, got {self.tuner!r}")
        if self.metric not in METRICS:
            raise SpecError(f"metric must be one of {METRICS}, got {self.metric!r}")
        for name in ("dim", "budget", "cutoff", "runs_per_eval", "validation_runs"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise SpecError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise SpecError("seed must be a non-negative integer")
        if self.target is not None and len(problems) > 1:
            raise SpecError("an explicit target only makes sense for a single problem")
        work = self.budget * self.runs_per_eval * self.cutoff * len(problems)
        if work > SMOKE_LIMIT and not self.paper_scale:
            raise SpecError(
                f"worst case of {work:.3g} evaluations exceeds {SMOKE_LIMIT:.0e}; set paper_scale to run it"
            )

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise SpecError(f"unknown keys in experiment spec: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["problem"] = list(self.problem)
        return d

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise SpecError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    def dump(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def replace(self, **changes) -> "ExperimentSpec":
        return dataclasses.replace(self, **changes)

    def make_problem(self, pid: int) -> Problem:
        return make_problem(pid, self.dim, self.instance_seed, self.target)

    @property
    def out_path(self) -> Path:
        return Path(self.out)


def default_out_root() -> str:
    return os.environ.get(OUT_ENV, "results")


# ---------------------------------------------------------------- file output


def write_text(path, text: str) -> Path:
    """Write through a temporary file and rename, so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return fmt_number(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    return value


def write_json(path, data) -> Path:
    return write_text(path, json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def _float(value) -> float:
    return float(value) if not isinstance(value, str) else float(value.replace("Inf", "inf"))


def write_manifest(root) -> Path:
    """Index every file under ``root`` with its size and sha256."""
    root = Path(root)
    entries = []
    for path in sorted(root.rglob("*")):
        if path.is_file() and path.name != "manifest.json" and not path.name.endswith(".tmp"):
            data = path.read_bytes()
            entries.append(
                {"path": path.relative_to(root).as_posix(), "bytes": len(data), "sha256": hashlib.sha256(data).hexdigest()}
            )
    return write_json(root / "manifest.json", {"artifacts": entries})


def _csv(header: Sequence[str], rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_number(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return out.getvalue()


# ------------------------------------------------------------------ validation


@dataclass
class ValidationReport:
    """Validation runs of one configuration and the statistics derived from them."""

    problem: Problem
    config: GAConfig
    cutoff: int
    runs: list[RunLog]
    label: str = "config"
    tuner: str = ""
    metric: str = ""
    master_seed: int = 0

    @property
    def hitting_times(self) -> np.ndarray:
        return np.array([math.inf if r.hitting_time is None else r.hitting_time for r in self.runs], dtype=float)

    @property
    def capped_times(self) -> np.ndarray:
        return np.minimum(self.hitting_times, self.cutoff)

    @property
    def ert(self) -> float:
        return ert_from_times(self.hitting_times, self.cutoff)

    @property
    def auc(self) -> float:
        return auc(self.runs, default_target_grid(self.problem), BudgetGrid.up_to(self.cutoff))

    def auc_samples(self) -> np.ndarray:
        return auc_per_run(self.runs, default_target_grid(self.problem), BudgetGrid.up_to(self.cutoff))

    def summary(self) -> dict:
        return {
            "label": self.label,
            "tuner": self.tuner,
            "metric": self.metric,
            "problem": self.problem.id,
            "dim": self.problem.dimension,
            "instance_seed": self.problem.instance_seed,
            "final_target": self.problem.final_target,
            "cutoff": self.cutoff,
            "master_seed": self.master_seed,
            "config": self.config.as_dict(),
            "runs": len(self.runs),
            "successes": int(np.isfinite(self.hitting_times).sum()),
            "ert": self.ert,
            "auc": self.auc,
        }

    def write(self, directory) -> Path:
        directory = Path(directory)
        trace, summary = runs_to_csv(self.runs)
        write_text(directory / "runs.csv", trace)
        write_text(directory / "summary.csv", summary)
        write_json(directory / "report.json", self.summary())
        return directory

    @classmethod
    def read(cls, directory) -> "ValidationReport":
        """Rebuild a report from its CSV files; statistics are recomputed, not loaded."""
        directory = Path(directory)
        meta = json.loads((directory / "report.json").read_text())
        problem = make_problem(meta["problem"], meta["dim"], meta["instance_seed"], _float(meta["final_target"]))
        runs = runs_from_csv(
            (directory / "runs.csv").read_text(),
            (directory / "summary.csv").read_text(),
            meta["cutoff"],
            problem.final_target,
        )
        return cls(
            problem,
            GAConfig.from_dict(meta["config"]),
            meta["cutoff"],
            runs,
            meta["label"],
            meta["tuner"],
            meta["metric"],
            meta["master_seed"],
        )


def validation_seed(master_seed: int, problem_id: int, config: GAConfig, i: int) -> int:
    return derive_seed(master_seed, problem_id, config_digest(config), i)


def validate(
    config: GAConfig,
    problem: Problem,
    runs: int = 100,
    cutoff: int = 50_000,
    master_seed: int = 0,
    label: str = "config",
    tuner: str = "",
    metric: str = "",
) -> ValidationReport:
    check_feasible(config)
    if runs < 1:
        raise ValueError("need at least one validation run")
    budget = RunBudget(cutoff, problem.final_target)
    logs = [run_ga(config, problem, budget, validation_seed(master_seed, problem.id, config, i)) for i in range(runs)]
    return ValidationReport(problem, config, cutoff, logs, label, tuner, metric, master_seed)


# ------------------------------------------------------------------ comparison


def comparison_rows(baseline: ValidationReport, reports: Sequence[ValidationReport]) -> list[dict]:
    """Relative improvements over ``baseline`` with BH-adjusted MWU p-values.

    ERT p-values compare capped hitting times and AUC p-values per-run AUCs;
    each metric forms its own family for the adjustment.  The baseline object
    itself may appear in ``reports``; its row is a reference and is not tested.
    """
    for r in reports:
        if r.problem.id != baseline.problem.id or r.problem.dimension != baseline.problem.dimension:
            raise ValueError(f"report {r.label!r} is on F{r.problem.id}, baseline on F{baseline.problem.id}")
    base_auc = baseline.auc_samples()
    rows = []
    for r in reports:
        if r is baseline:
            pe = pa = math.nan
        else:
            pe = mann_whitney_u(r.capped_times, baseline.capped_times)[1]
            pa = mann_whitney_u(r.auc_samples(), base_auc)[1]
        rows.append(
            {
                "problem": r.problem.id,
                "label": r.label,
                "tuner": r.tuner,
                "metric": r.metric,
                "ert": r.ert,
                "auc": r.auc,
                "ert_improvement": relative_improvement_ert(baseline.ert, r.ert),
                "auc_improvement": relative_improvement_auc(baseline.auc, r.auc),
                "ert_p": pe,
                "auc_p": pa,
            }
        )
    return adjust_family(rows)


def adjust_family(rows: list[dict]) -> list[dict]:
    """BH-adjust every tested row at once, one family per metric, and record the family size."""
    tested = [r for r in rows if not math.isnan(r["ert_p"])]
    for key in ("ert", "auc"):
        adjusted = bh_adjust([r[f"{key}_p"] for r in tested]) if tested else []
        for r in rows:
            r[f"{key}_p_adjusted"] = math.nan
            r[f"{key}_stars"] = ""
        for r, q in zip(tested, adjusted):
            r[f"{key}_p_adjusted"] = float(q)
            r[f"{key}_stars"] = stars(q)
    for r in rows:
        r["family_size"] = len(tested)
    return rows


COMPARISON_HEADER = (
    "problem", "label", "tuner", "metric", "ert", "auc", "ert_improvement", "ert_stars",
    "auc_improvement", "auc_stars", "ert_p_adjusted", "auc_p_adjusted", "family_size",
)


def comparison_csv(rows: list[dict]) -> str:
    def cell(row, key):
        if key in ("ert_improvement", "auc_improvement"):
            return format_improvement(row[key])
        return row[key]

    return _csv(COMPARISON_HEADER, ([cell(row, k) for k in COMPARISON_HEADER] for row in rows))


def cross_metric_ratio(ert_tuned: ValidationReport, auc_tuned: ValidationReport) -> float:
    """Capped (ERT_ert - ERT_auc) / ERT_auc for configurations tuned under each metric."""
    if ert_tuned.problem.id != auc_tuned.problem.id:
        raise ValueError("cross-metric ratio needs reports on the same problem")
    return relative_ert_across_metrics(ert_tuned.ert, auc_tuned.ert)


# -------------------------------------------------------------------- tuning


def tuning_seed(spec: ExperimentSpec, pid: int, *keys) -> int:
    return derive_seed(spec.seed, "tune", pid, spec.tuner, spec.metric, *keys)


def run_tuning(spec: ExperimentSpec, pid: int, cutoff: int | None = None, budget: int | None = None, rep: int = 0) -> TuneResult:
    problem = spec.make_problem(pid)
    cutoff = spec.cutoff if cutoff is None else cutoff
    budget = spec.budget if budget is None else budget
    cost = CostSpec.for_problem(problem, spec.metric, cutoff, spec.runs_per_eval)
    seed = tuning_seed(spec, pid, cutoff, budget, rep)
    return tune(spec.tuner, GAObjective(problem, cost, seed), budget, seed)


def write_tune_result(result: TuneResult, directory) -> Path:
    directory = Path(directory)
    write_json(directory / "tune_result.json", result.to_dict())
    write_text(directory / "trajectory.csv", result.trajectory_csv())
    return directory


def run_directory(spec: ExperimentSpec, pid: int) -> Path:
    return spec.out_path / f"F{pid}" / f"{spec.tuner}-{spec.metric}"


def cmd_tune(spec: ExperimentSpec) -> list[TuneResult]:
    results = []
    for pid in spec.problem:
        result = run_tuning(spec, pid)
        write_tune_result(result, run_directory(spec, pid))
        results.append(result)
    write_manifest(spec.out_path)
    return results


def cmd_validate(spec: ExperimentSpec, config: GAConfig, label: str | None = None) -> list[ValidationReport]:
    check_feasible(config)
    reports = []
    for pid in spec.problem:
        label_ = label or config_label(config)
        report = validate(config, spec.make_problem(pid), spec.validation_runs, spec.cutoff, spec.seed, label_)
        report.write(spec.out_path / f"F{pid}" / "validation" / label_)
        reports.append(report)
    write_manifest(spec.out_path)
    return reports


def config_label(config: GAConfig) -> str:
    return f"mu{config.mu}-lam{config.lam}-pm{config.p_m!r}-pc{config.p_c!r}"


def run_campaign(spec: ExperimentSpec) -> dict[int, list[dict]]:
    """Tune, validate the tuned configuration and the (1+1) EA, and compare them."""
    tables = {}
    for pid in spec.problem:
        problem = spec.make_problem(pid)
        result = run_tuning(spec, pid)
        directory = run_directory(spec, pid)
        write_tune_result(result, directory)
        label = f"{spec.tuner}-{spec.metric}"
        tuned = validate(result.best_config, problem, spec.validation_runs, spec.cutoff, spec.seed, label, spec.tuner, spec.metric)
        tuned.write(spec.out_path / f"F{pid}" / "validation" / label)
        base = validate(BASELINE, problem, spec.validation_runs, spec.cutoff, spec.seed, "EA")
        base.write(spec.out_path / f"F{pid}" / "validation" / "EA")
        rows = comparison_rows(base, [base, tuned])
        write_text(spec.out_path / f"F{pid}" / "comparison.csv", comparison_csv(rows))
        tables[pid] = rows
    write_json(spec.out_path / "spec.json", spec.to_dict())
    write_manifest(spec.out_path)
    return tables


# -------------------------------------------------------------------- sweeps


def cutoff_grid(ert_ea: float, steps: int = CUTOFF_STEPS) -> list[int]:
    """Cutoffs ceil((0.5 + 0.1 t) * ERT_EA) for t = 0 .. steps - 1."""
    if not (math.isfinite(ert_ea) and ert_ea > 0):
        raise ValueError("the cutoff grid needs a finite positive baseline ERT")
    # the integer form keeps 0.5 + 0.1 t exact
    return [math.ceil((5 + t) * ert_ea / 10 - 1e-9) for t in range(steps)]


def budget_grid(base_budget: int, steps: int = BUDGET_STEPS) -> list[int]:
    """Budgets (0.5 + 0.25 t) * base for t = 0 .. steps - 1, rounded up."""
    return [math.ceil((2 + t) * base_budget / 4) for t in range(steps)]


def baseline_ert(spec: ExperimentSpec, pid: int, runs: int = BASELINE_RUNS) -> float:
    """ERT of the (1+1) EA from ``runs`` runs, cached beside its seed."""
    path = spec.out_path / f"F{pid}" / "baseline_ert.json"
    problem = spec.make_problem(pid)
    key = {"problem": pid, "dim": spec.dim, "instance_seed": spec.instance_seed, "target": problem.final_target,
           "cutoff": spec.cutoff, "runs": runs, "seed": spec.seed}
    if path.exists():
        cached = json.loads(path.read_text())
        if cached.get("key") == _jsonable(key):
            return _float(cached["ert"])
    report = validate(BASELINE, problem, runs, spec.cutoff, derive_seed(spec.seed, "baseline"), "EA")
    write_json(path, {"key": key, "ert": report.ert})
    return report.ert


SWEEP_HEADER = ("point", "cutoff", "budget", "metric", "rep", "mu", "lambda", "p_m", "p_c", "tuning_cost", "validation_ert")


def _sweep_row(t, cutoff, budget, metric, rep, result: TuneResult, val_ert):
    c = result.best_config
    return [t, cutoff, budget, metric, rep, c.mu, c.lam, c.p_m, c.p_c, float(result.best_cost.value), float(val_ert)]


def select_rows(rows: list[list]) -> list[list]:
    """Per (point, metric): the best repetition by tuning cost, the best by
    validation ERT, and the median validation ERT."""
    groups: dict[tuple, list[list]] = {}
    for row in rows:
        groups.setdefault((row[0], row[3]), []).append(row)
    out = []
    for (t, metric), group in groups.items():
        by_cost = min(group, key=lambda r: (r[9], r[4]))
        by_val = min(group, key=lambda r: (r[10], r[4]))
        out.append(["tuning_cost", *by_cost])
        out.append(["validation_ert", *by_val])
        med = float(np.median([r[10] for r in group]))
        out.append(["median", t, group[0][1], group[0][2], metric, "", "", "", "", "", "", med])
    return out


def cmd_sweep_cutoff(
    spec: ExperimentSpec, repetitions: int = 20, points: Sequence[int] | None = None, validation_cutoff: int | None = None
) -> list[list]:
    """Tune under both metrics at each cutoff of the grid and validate at ``spec.cutoff``."""
    validation_cutoff = spec.cutoff if validation_cutoff is None else validation_cutoff
    all_rows = []
    for pid in spec.problem:
        problem = spec.make_problem(pid)
        grid = cutoff_grid(baseline_ert(spec, pid))
        rows = []
        for t in points if points is not None else range(CUTOFF_STEPS):
            for metric in METRICS:
                s = spec.replace(metric=metric)
                for rep in range(repetitions):
                    result = run_tuning(s, pid, cutoff=grid[t], rep=rep)
                    report = validate(result.best_config, problem, spec.validation_runs, validation_cutoff, spec.seed)
                    rows.append(_sweep_row(t, grid[t], spec.budget, metric, rep, result, report.ert))
        d = spec.out_path / f"F{pid}" / f"sweep-cutoff-{spec.tuner}"
        write_text(d / "sweep.csv", _csv(SWEEP_HEADER, rows))
        write_text(d / "selected.csv", _csv(("selection", *SWEEP_HEADER), select_rows(rows)))
        all_rows.extend(rows)
    write_manifest(spec.out_path)
    return all_rows


def cmd_sweep_budget(spec: ExperimentSpec, points: Sequence[int] | None = None) -> list[list]:
    all_rows = []
    for pid in spec.problem:
        problem = spec.make_problem(pid)
        grid = budget_grid(spec.budget)
        rows = []
        for t in points if points is not None else range(BUDGET_STEPS):
            for metric in METRICS:
                result = run_tuning(spec.replace(metric=metric), pid, budget=grid[t])
                report = validate(result.best_config, problem, spec.validation_runs, spec.cutoff, spec.seed)
                rows.append(_sweep_row(t, spec.cutoff, grid[t], metric, 0, result, report.ert))
        write_text(spec.out_path / f"F{pid}" / f"sweep-budget-{spec.tuner}" / "sweep.csv", _csv(SWEEP_HEADER, rows))
        all_rows.extend(rows)
    write_manifest(spec.out_path)
    return all_rows


def cmd_grid(spec: ExperimentSpec) -> list[TuneResult]:
    return cmd_tune(spec.replace(tuner="grid"))


# -------------------------------------------------------------------- report


def find_reports(root) -> list[ValidationReport]:
    return [ValidationReport.read(p.parent) for p in sorted(Path(root).rglob("report.json"))]


def cmd_report(root, out=None) -> dict[str, Path]:
    """Configuration and improvement tables, fixed-target curves and violin data."""
    root = Path(root)
    out = Path(out) if out is not None else root / "report"
    reports = find_reports(root)
    if not reports:
        raise FileNotFoundError(f"no validation reports under {root}")
    by_problem: dict[int, list[ValidationReport]] = {}
    for r in reports:
        by_problem.setdefault(r.problem.id, []).append(r)

    config_rows, improvement_rows, violin_rows, curve_rows, ratio_rows = [], [], [], [], []
    for pid in sorted(by_problem):
        group = by_problem[pid]
        for r in group:
            c = r.config
            config_rows.append([pid, r.label, r.tuner, r.metric, c.mu, c.lam, c.p_m, c.p_c])
            for i, t in enumerate(r.capped_times):
                violin_rows.append([pid, r.label, i, float(t)])
            for phi, e in fixed_target_curve(r.runs, default_target_grid(r.problem), r.cutoff):
                curve_rows.append([pid, r.label, float(phi), float(e)])
        base = next((r for r in group if r.config == BASELINE), None)
        if base is not None:
            improvement_rows.extend(comparison_rows(base, [base, *(r for r in group if r is not base)]))
        tuned = {(r.tuner, r.metric): r for r in group if r.tuner}
        for tuner in sorted({t for t, _ in tuned}):
            if (tuner, "ert") in tuned and (tuner, "auc") in tuned:
                ratio = cross_metric_ratio(tuned[(tuner, "ert")], tuned[(tuner, "auc")])
                ratio_rows.append([pid, tuner, ratio])

    # one BH family across every problem and configuration in the report
    adjust_family(improvement_rows)
    files = {
        "configurations": write_text(
            out / "configurations.csv", _csv(("problem", "label", "tuner", "metric", "mu", "lambda", "p_m", "p_c"), config_rows)
        ),
        "improvements": write_text(out / "improvements.csv", comparison_csv(improvement_rows)),
        "curves": write_text(out / "fixed_target_curves.csv", _csv(("problem", "label", "target", "ert"), curve_rows)),
        "cross_metric": write_text(out / "cross_metric.csv", _csv(("problem", "tuner", "ert_ratio"), ratio_rows)),
        "violin": write_text(out / "hitting_times.csv", _csv(("problem", "label", "run_id", "capped_hitting_time"), violin_rows)),
    }
    write_manifest(out)
    return files
