"""Nested sampling for evidences, posterior weights, error bars and diagnostics."""

__version__ = "0.1.0"

from .core import RunTrace, RngStream, TraceError, check_trace, log_sum
from .problems import Problem, make_problem, standard_suite
from .samplers import SamplerConfig
from .engine import DynamicGoal, RunConfig, merge, run, run_dynamic
from .estimators import (assign_volumes, evidence_report, kl_divergence, log_evidence,
                         posterior_weights, simulate_evidence)
from .diagnostics import insertion_test, two_run_consistency, volume_check
from . import kernels

__all__ = ["RunTrace", "RngStream", "TraceError", "check_trace", "log_sum", "Problem",
           "make_problem", "standard_suite", "SamplerConfig", "DynamicGoal", "RunConfig",
           "merge", "run", "run_dynamic", "assign_volumes", "evidence_report",
           "kl_divergence", "log_evidence", "posterior_weights", "simulate_evidence",
           "insertion_test", "two_run_consistency", "volume_check", "kernels"]
