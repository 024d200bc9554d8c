"""Benchmark runner and the four-row ablation grid."""
from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..corpus import Corpus, CorpusFetcher, SyntheticTask, judge_answer
from ..llm import CompletionBackend, CompletionParams
from ..orchestrator import Executor, RunConfig, run_executor_only, run_planner
from ..sandbox import ResourceLimits
from ..toolkit import Toolkit
from ..tools.search import SimulatedSearch
from ..trace import Actor, Kind, TraceSink
from .metrics import RunMetrics, metrics_from_events
from .policies import policy_backends

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AblationMode:
    primitives_enabled: bool
    planner_enabled: bool
    executor_enabled: bool = True

    def __post_init__(self):
        if not self.executor_enabled:
            raise ValueError("the executor is always enabled")

    @property
    def name(self) -> str:
        if self.primitives_enabled and self.planner_enabled:
            return "full"
        if self.primitives_enabled:
            return "primitives"
        if self.planner_enabled:
            return "planner"
        return "executor"

    @classmethod
    def from_name(cls, name: str) -> "AblationMode":
        for mode in ABLATION_ROWS:
            if mode.name == name:
                return mode
        raise ValueError(f"unknown mode {name!r}; expected one of {', '.join(m.name for m in ABLATION_ROWS)}")


# report row order: baseline executor first, full system last
ABLATION_ROWS = (
    AblationMode(primitives_enabled=False, planner_enabled=False),
    AblationMode(primitives_enabled=False, planner_enabled=True),
    AblationMode(primitives_enabled=True, planner_enabled=False),
    AblationMode(primitives_enabled=True, planner_enabled=True),
)
FULL = ABLATION_ROWS[-1]


@dataclass
class Backends:
    planner: CompletionBackend
    executor: CompletionBackend
    toolkit: Toolkit
    limits: ResourceLimits = field(default_factory=ResourceLimits)
    params: CompletionParams = field(default_factory=CompletionParams)


def simulated_backends(corpus: Corpus, **toolkit_kwargs) -> Backends:
    """Rule policies over the simulated search engine and corpus fetcher."""
    planner, executor = policy_backends()
    return Backends(planner, executor,
                    Toolkit(SimulatedSearch(corpus.documents), CorpusFetcher(corpus), **toolkit_kwargs))


@dataclass
class TaskOutcome:
    run_id: str
    answer: str
    gold: str
    correct: bool
    error: str | None = None


@dataclass
class BenchResult:
    metrics: RunMetrics
    outcomes: list[TaskOutcome]
    trace_paths: list[Path]
    events: list = field(default_factory=list, repr=False)


def run_task(question: str, mode: AblationMode, cfg: RunConfig, backends: Backends, trace: TraceSink,
             run_id: str) -> str:
    toolkit = dataclasses.replace(backends.toolkit, primitives=mode.primitives_enabled)
    executor = Executor(backends.executor, toolkit.registry(), cfg, trace, run_id=run_id,
                        params=backends.params, limits=backends.limits)
    if mode.planner_enabled:
        answer, _, _ = run_planner(question, backends.planner, executor, cfg, trace, run_id=run_id,
                                   params=backends.params)
        return answer
    answer, _ = run_executor_only(question, executor, trace, run_id=run_id)
    return answer


def run_benchmark(tasks: Sequence[SyntheticTask], mode: AblationMode, cfg: RunConfig, backends: Backends,
                  trace_dir: str | Path | None = None, parallelism: int = 1) -> BenchResult:
    if not tasks:
        raise ValueError("no tasks to run")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    root = Path(trace_dir) if trace_dir is not None else None
    if root is not None:
        root.mkdir(parents=True, exist_ok=True)

    def one(i: int) -> tuple[TaskOutcome, TraceSink]:
        task = tasks[i]
        run_id = f"task-{i:04d}"
        path = root / f"{run_id}.jsonl" if root is not None else None
        if path is not None and path.exists():
            path.unlink()
        sink = TraceSink(path)
        error = None
        try:
            answer = run_task(task.question, mode, cfg, backends, sink, run_id)
        except Exception as exc:  # noqa: BLE001
            logger.exception("task %s failed", run_id)
            error = f"{type(exc).__name__}: {exc}"
            answer = ""
            sink.emit(run_id, Actor.BACKEND, Kind.FINAL, {"error": error})
        correct = error is None and judge_answer(answer, task.gold_answer)
        sink.emit(run_id, Actor.PLANNER, Kind.FINAL,
                  {"judged": True, "answer": answer, "gold": task.gold_answer, "correct": correct})
        return TaskOutcome(run_id, answer, task.gold_answer, correct, error), sink

    if parallelism == 1:
        done = [one(i) for i in range(len(tasks))]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            done = list(pool.map(one, range(len(tasks))))
    events = [e for _, sink in done for e in sink.events]
    paths = [sink.path for _, sink in done if sink.path is not None]
    return BenchResult(metrics_from_events(events, mode.name), [o for o, _ in done], paths, events)


def run_ablation(tasks: Sequence[SyntheticTask], cfg: RunConfig, backends: Backends,
                 trace_dir: str | Path | None = None, parallelism: int = 1) -> list[BenchResult]:
    out = []
    for mode in ABLATION_ROWS:
        sub = Path(trace_dir) / mode.name if trace_dir is not None else None
        out.append(run_benchmark(tasks, mode, cfg, backends, sub, parallelism))
    return out
