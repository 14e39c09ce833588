"""Tuning a (mu + lambda) GA on pseudo-Boolean benchmarks with ERT and AUC costs."""
from .ga import GAConfig, RunBudget, RunLog, run_ga
from .pbo import Problem, make_problem

__all__ = ["GAConfig", "Problem", "RunBudget", "RunLog", "make_problem", "run_ga"]
