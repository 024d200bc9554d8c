"""Benchmark harness: rule policies, ablation runs, metrics and reports."""
from .bench import (
    ABLATION_ROWS,
    FULL,
    AblationMode,
    Backends,
    BenchResult,
    TaskOutcome,
    run_ablation,
    run_benchmark,
    run_task,
    simulated_backends,
)
from .metrics import RunMetrics, compute_metrics, metrics_from_events, parse_csv_report, report
from .policies import executor_policy, planner_policy, policy_backends

__all__ = [
    "ABLATION_ROWS", "FULL", "AblationMode", "Backends", "BenchResult", "RunMetrics", "TaskOutcome",
    "compute_metrics", "executor_policy", "metrics_from_events", "parse_csv_report", "planner_policy",
    "policy_backends", "report", "run_ablation", "run_benchmark", "run_task", "simulated_backends",
]
