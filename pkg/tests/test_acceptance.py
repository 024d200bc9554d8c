"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records a PASS/FAIL line shown in the pytest terminal summary.
"""
import random
import time

import pytest

from planexec.corpus import CorpusFetcher, CorpusSpec, build_corpus, generate_task
from planexec.harness import ABLATION_ROWS, FULL, metrics_from_events, report, run_ablation, run_benchmark
from planexec.harness.bench import Backends
from planexec.harness.policies import policy_backends
from planexec.llm import RecordingBackend, ScriptedBackend, record_replay
from planexec.orchestrator import ExecResult, RunConfig, run_planner
from planexec.primitives import PredicateEvaluator, batch_search, check_condition
from planexec.protocol import Tag, extract_blocks, parse_executor_turn, parse_planner_turn, truncate_after_code, wrap_block
from planexec.sandbox import ResourceLimits, create_session, execute
from planexec.toolkit import Toolkit
from planexec.tools import SimulatedSearch, web_search
from planexec.trace import Kind, TraceSink

from predgen import cases, oracle
from rankoracle import exhaustive_rank, random_queries
from scriptgen import script_pair
from test_sandbox import _shift

pytestmark = pytest.mark.acceptance

FRAGMENTS = ["<task>", "</task>", "<result>", "</result>", "<code>", "</code>", "<execution_results>",
             "</execution_results>", "\x00ESC", "FINAL ANSWER:", "CONFIDENCE:", "<think>", "</think>",
             "0.7", "%", "\n", " ", "a", "é", "<", ">", "/"]


def _random_content(rng):
    parts = []
    for _ in range(rng.randint(0, 12)):
        if rng.random() < 0.4:
            parts.append(rng.choice(FRAGMENTS))
        else:
            parts.append("".join(chr(rng.randint(1, 0x2FF)) for _ in range(rng.randint(0, 6))))
    return "".join(parts)


def test_1_protocol_round_trip_and_fuzz(criterion):
    with criterion(1, "protocol round trip on 10,000 pairs and parser fuzz on 100,000 strings under 1 min"):
        rng = random.Random(1)
        start = time.monotonic()
        tags = list(Tag)
        for _ in range(10_000):
            tag, content = rng.choice(tags), _random_content(rng)
            assert [b.content for b in extract_blocks(wrap_block(tag, content), tag)] == [content]
        for _ in range(100_000):
            text = _random_content(rng)
            parse_planner_turn(text)
            parse_executor_turn(text)
            truncate_after_code(text)
        assert time.monotonic() - start < 60


def test_2_sandbox_state_isolation_and_termination(criterion):
    with criterion(2, "concatenation equivalence and isolation over 1,000 script pairs; infinite loops end with "
                      "a limit error within max_wall_time + 1 s"):
        for seed in range(1000):
            s1, s2 = script_pair(seed)
            a = create_session()
            o1 = execute(a, s1)
            assert o1.error is None, (seed, o1.error)
            o2 = execute(a, s2)
            b = create_session()
            oc = execute(b, s1 + "\n" + s2)
            assert o1.stdout + o2.stdout == oc.stdout
            assert _shift(o2.error, s1.count("\n") + 1) == oc.error
            assert a.bindings == b.bindings
            # isolation: interleaving with another session changes nothing
            other, fresh = create_session(), create_session()
            execute(other, s2)
            r1 = execute(fresh, s1)
            execute(other, s1)
            r2 = execute(fresh, s2)
            assert (r1.stdout, r2.stdout, r2.error) == (o1.stdout, o2.stdout, o2.error)
            assert fresh.bindings == a.bindings
        for limits in (ResourceLimits(), ResourceLimits(max_wall_time=2.0, max_loop_iterations=10**12)):
            start = time.monotonic()
            out = execute(create_session(limits), "i = 0\nwhile true { i += 1 }")
            assert time.monotonic() - start < limits.max_wall_time + 1
            assert out.error.startswith("limit exceeded")


def test_3_primitive_oracles(criterion, corpus):
    with criterion(3, "check_condition equals the scan oracle on 500 cases; batch_search invariant "
                      "across concurrency 1, 4, 16"):
        ev = PredicateEvaluator()
        for page, text, tree in cases(500, seed=30):
            assert check_condition([page], text, ev)[0].value == oracle(tree, page), (page, text)
        search = SimulatedSearch(corpus.documents)
        queries = random_queries(corpus.documents, 40, seed=3)
        outs = [[r.to_dict() for r in batch_search(queries, search, c, 5)] for c in (1, 4, 16)]
        assert outs[0] == outs[1] == outs[2]


def test_4_ranking_oracle(criterion):
    with criterion(4, "web_search top-k equals exhaustive scoring for k in 1, 5, 10 on 200 documents "
                      "and 100 queries"):
        c = build_corpus(CorpusSpec(n_entities=50, docs_per_entity=4), seed=11)
        assert len(c.documents) == 200
        search = SimulatedSearch(c.documents)
        mismatches = [(k, q) for q in random_queries(c.documents, 100, seed=4) for k in (1, 5, 10)
                      if web_search(q, k, search).urls() != exhaustive_rank(c.documents, q, k)]
        assert mismatches == []


@pytest.fixture(scope="module")
def suite():
    c = build_corpus(CorpusSpec(n_entities=60, docs_per_entity=3, distractor_density=0.3), seed=0)
    tasks = []
    seed = 0
    while len(tasks) < 20:
        try:
            tasks.append(generate_task(c, 3, seed))
        except ValueError:
            pass
        seed += 1
    return c, tasks


def _backends(c):
    planner, executor = policy_backends()
    return Backends(planner, executor, Toolkit(SimulatedSearch(c.documents), CorpusFetcher(c)))


def test_5_closed_world_end_to_end(criterion, suite, tmp_path):
    with criterion(5, "20-task suite in full mode is 100% accurate with byte-identical traces "
                      "across two runs under 5 min"):
        c, tasks = suite
        start = time.monotonic()
        a = run_benchmark(tasks, FULL, RunConfig(), _backends(c), tmp_path / "a")
        b = run_benchmark(tasks, FULL, RunConfig(), _backends(c), tmp_path / "b")
        assert a.metrics.accuracy == 1.0 and b.metrics.accuracy == 1.0
        assert len(a.trace_paths) == 20
        assert [p.read_bytes() for p in a.trace_paths] == [p.read_bytes() for p in b.trace_paths]
        assert time.monotonic() - start < 300


def test_6_ablation_shape(criterion, suite, tmp_path):
    with criterion(6, "all four ablation rows run on the same suite and give a four-row report"):
        c, tasks = suite
        results = run_ablation(tasks, RunConfig(), _backends(c), tmp_path)
        text = report([r.metrics for r in results], "csv")
        rows = text.splitlines()[1:]
        assert [r.split(",")[0] for r in rows] == [m.name for m in ABLATION_ROWS]
        assert [m.name for m in ABLATION_ROWS] == ["executor", "planner", "primitives", "full"]
        print(report([r.metrics for r in results]))


def test_7_tool_call_amplification(criterion, suite):
    with criterion(7, "at least one end-to-end task has mean tool calls per invocation >= 10"):
        c, tasks = suite
        res = run_benchmark(tasks, FULL, RunConfig(), _backends(c))
        per_task = [metrics_from_events([e for e in res.events if e.run_id == o.run_id]) for o in res.outcomes]
        best = max(m.mean_tool_calls_per_invocation for m in per_task)
        print(f"highest per-task mean tool calls per invocation: {best}")
        assert best >= 10


class _Echo:
    def __call__(self, task):
        return ExecResult(task.id, "nothing")


def test_8_replanning(criterion):
    with criterion(8, "confidences 0.4 then 0.8 at threshold 0.7 give one Replan and two attempts; "
                      "max_replans 0 gives none"):
        turns = ["FINAL ANSWER: A\nCONFIDENCE: 0.4", "FINAL ANSWER: B\nCONFIDENCE: 0.8"]
        trace = TraceSink()
        answer, conf, ep = run_planner("q", ScriptedBackend(turns), _Echo(),
                                       RunConfig(confidence_threshold=0.7), trace)
        assert len(trace.of_kind(Kind.REPLAN)) == 1 and ep.attempts == 2 and (answer, conf) == ("B", 0.8)
        trace = TraceSink()
        _, _, ep = run_planner("q", ScriptedBackend(turns), _Echo(),
                               RunConfig(confidence_threshold=0.7, max_replans=0), trace)
        assert len(trace.of_kind(Kind.REPLAN)) == 0 and ep.attempts == 1


def test_9_replay_fidelity(criterion, suite, tmp_path):
    with criterion(9, "a recorded cassette replays to a byte-identical trace file"):
        c, tasks = suite
        cassette = tmp_path / "cassette.jsonl"
        rec = _backends(c)
        rec.planner = RecordingBackend(rec.planner, cassette)
        rec.executor = RecordingBackend(rec.executor, cassette, rec.planner._lock)
        recorded = run_benchmark(tasks[:3], FULL, RunConfig(), rec, tmp_path / "rec")
        replay = _backends(c)
        replay.planner = replay.executor = record_replay(cassette)
        replayed = run_benchmark(tasks[:3], FULL, RunConfig(), replay, tmp_path / "rep")
        assert cassette.stat().st_size > 0
        assert [p.read_bytes() for p in recorded.trace_paths] == [p.read_bytes() for p in replayed.trace_paths]
