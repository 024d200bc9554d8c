import json
from collections import Counter

import pytest

from planexec.corpus import generate_task
from planexec.harness import (
    ABLATION_ROWS,
    FULL,
    AblationMode,
    RunMetrics,
    compute_metrics,
    metrics_from_events,
    parse_csv_report,
    report,
    run_ablation,
    run_benchmark,
    simulated_backends,
)
from planexec.harness.metrics import COLUMNS
from planexec.orchestrator import RunConfig
from planexec.toolkit import PRIMITIVE_NAMES
from planexec.trace import Actor, Kind, TraceSink


def _run_with_scripts(sink, run_id, counts, sub_task=1):
    sink.emit(run_id, Actor.PLANNER, Kind.DELEGATE, {"sub_task_id": sub_task})
    for run, n in enumerate(counts, 1):
        sink.emit(run_id, Actor.SANDBOX, Kind.SCRIPT_RUN, {"sub_task_id": sub_task, "run": run})
        for i in range(n):
            sink.emit(run_id, Actor.TOOL, Kind.TOOL_CALL, {
                "sub_task_id": sub_task, "script_run": run, "name": "web_search" if i % 2 else "parse_page",
                "urls": [f"https://x/{run}/{i}"]})


def test_metrics_arithmetic():
    sink = TraceSink()
    _run_with_scripts(sink, "r1", [3, 5])
    sink.emit("r1", Actor.PLANNER, Kind.FINAL, {"correct": True})
    m = metrics_from_events(sink.events, "x")
    assert m.mean_tool_calls_per_invocation == 4.0 and m.max_tool_calls_per_invocation == 5.0
    assert (m.runs, m.accuracy, m.mean_search_calls, m.mean_interactions, m.unique_pages) == (1, 1.0, 3.0, 1.0, 8)


def test_zero_call_script_runs_count():
    sink = TraceSink()
    _run_with_scripts(sink, "r1", [0, 4])
    assert metrics_from_events(sink.events).mean_tool_calls_per_invocation == 2.0


def test_metrics_against_counting_oracle():
    import random
    rng = random.Random(3)
    sink = TraceSink()
    per_script = []
    searches = 0
    for r in range(5):
        for st in range(1, rng.randint(2, 4)):
            counts = [rng.randint(0, 6) for _ in range(rng.randint(1, 3))]
            per_script.extend(counts)
            searches += sum(n // 2 for n in counts)
            _run_with_scripts(sink, f"r{r}", counts, st)
        sink.emit(f"r{r}", Actor.PLANNER, Kind.REPLAN, {})
        sink.emit(f"r{r}", Actor.PLANNER, Kind.FINAL, {"correct": r % 2 == 0})
    m = metrics_from_events(sink.events)
    delegates = len(sink.of_kind(Kind.DELEGATE))
    assert m.accuracy == 3 / 5
    assert m.mean_tool_calls_per_invocation == sum(per_script) / len(per_script)
    assert m.max_tool_calls_per_invocation == max(per_script)
    assert m.mean_search_calls == searches / 5
    assert m.mean_interactions == (delegates + 5) / 5


def test_empty_trace_set_errors(tmp_path):
    with pytest.raises(ValueError):
        compute_metrics([tmp_path])
    (tmp_path / "empty.jsonl").write_text("")
    with pytest.raises(ValueError):
        compute_metrics([tmp_path])


def test_malformed_lines_skipped(tmp_path):
    sink = TraceSink(tmp_path / "a.jsonl")
    _run_with_scripts(sink, "r", [2])
    with (tmp_path / "a.jsonl").open("a") as fh:
        fh.write("{not json\n" + json.dumps({"run_id": "r"}) + "\n")
    m = compute_metrics(tmp_path, "lbl")
    assert m.skipped_lines == 2 and m.mean_tool_calls_per_invocation == 2.0


def test_report_formats():
    m = RunMetrics("full", 2, 0.5, 1.0, 10.0, 2.0, 3.25, 7.0, 4)
    table = report([m]).splitlines()
    assert len(table) == 3 and table[0].split() == list(COLUMNS)
    csv_text = report([m], "csv")
    assert csv_text.count("\n") == 2
    assert parse_csv_report(csv_text) == [m]
    assert report(parse_csv_report(csv_text), "csv") == csv_text
    with pytest.raises(ValueError):
        report([m], "xml")
    with pytest.raises(ValueError):
        RunMetrics("x", 1, 1.5, 0, 0, 0, 0, 0, 0)


def test_ablation_modes():
    assert [m.name for m in ABLATION_ROWS] == ["executor", "planner", "primitives", "full"]
    assert FULL == AblationMode(True, True)
    assert AblationMode.from_name("planner") == AblationMode(False, True)
    with pytest.raises(ValueError):
        AblationMode(True, True, executor_enabled=False)
    with pytest.raises(ValueError):
        AblationMode.from_name("none")


@pytest.fixture(scope="module")
def tasks(corpus):
    return [generate_task(corpus, 3, s) for s in range(6)]


def test_single_task_full_mode(corpus, tasks):
    res = run_benchmark(tasks[:1], FULL, RunConfig(), simulated_backends(corpus))
    assert res.metrics.accuracy == 1.0 and res.outcomes[0].correct


def test_primitives_disabled_means_no_primitive_calls(corpus, tasks):
    for mode in ABLATION_ROWS:
        res = run_benchmark(tasks[:2], mode, RunConfig(), simulated_backends(corpus))
        names = Counter(e.payload["name"] for e in res.events if e.kind is Kind.TOOL_CALL)
        used = any(n in names for n in PRIMITIVE_NAMES)
        assert used == mode.primitives_enabled, (mode.name, names)
        has_planner_turns = any(e.actor is Actor.PLANNER and e.kind is Kind.TURN for e in res.events)
        assert has_planner_turns == mode.planner_enabled


def test_benchmark_deterministic_and_traces_written(tmp_path, corpus, tasks):
    a = run_benchmark(tasks, FULL, RunConfig(), simulated_backends(corpus), tmp_path / "a")
    b = run_benchmark(tasks, FULL, RunConfig(), simulated_backends(corpus), tmp_path / "b")
    assert a.metrics == b.metrics
    assert [p.read_bytes() for p in a.trace_paths] == [p.read_bytes() for p in b.trace_paths]
    assert compute_metrics(tmp_path / "a", "full") == a.metrics


def test_parallelism_does_not_change_results(tmp_path, corpus, tasks):
    serial = run_benchmark(tasks, FULL, RunConfig(), simulated_backends(corpus), tmp_path / "s")
    par = run_benchmark(tasks, FULL, RunConfig(), simulated_backends(corpus), tmp_path / "p", parallelism=4)
    assert serial.metrics == par.metrics
    assert [p.read_bytes() for p in serial.trace_paths] == [p.read_bytes() for p in par.trace_paths]


def test_zero_tasks_errors(corpus):
    with pytest.raises(ValueError):
        run_benchmark([], FULL, RunConfig(), simulated_backends(corpus))


def test_ablation_report_rows(tmp_path, corpus, tasks):
    results = run_ablation(tasks[:2], RunConfig(), simulated_backends(corpus), tmp_path)
    lines = report([r.metrics for r in results], "csv").splitlines()
    assert [ln.split(",")[0] for ln in lines[1:]] == ["executor", "planner", "primitives", "full"]
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(m.name for m in ABLATION_ROWS)


def test_task_exception_becomes_error_event(corpus, tasks):
    backends = simulated_backends(corpus)

    class Boom:
        def complete(self, messages, params):
            raise ZeroDivisionError("boom")

    backends.planner = Boom()
    res = run_benchmark(tasks[:1], FULL, RunConfig(), backends)
    assert not res.outcomes[0].correct and "boom" in res.outcomes[0].error
    assert any(e.actor is Actor.BACKEND and "error" in e.payload for e in res.events)
