"""Command line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import threading
from pathlib import Path

from .config import ConfigError, Settings, load_config, override
from .corpus import CorpusFetcher, build_corpus, generate_task, load_corpus, load_tasks, save_corpus, save_tasks
from .harness import ABLATION_ROWS, AblationMode, Backends, compute_metrics, report, run_benchmark
from .harness.bench import run_task
from .harness.policies import policy_backends
from .llm import HttpChatBackend, RecordingBackend, record_replay
from .toolkit import Toolkit
from .tools import HttpFetcher, SerpApiSearch, SimulatedSearch, TokenBucket
from .trace import TraceSink

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

logger = logging.getLogger("planexec")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="planexec", description="Planner/executor web research agent and benchmark harness.")
    p.add_argument("--config", help="TOML config file (all parameters)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="answer a single question")
    r.add_argument("question")
    r.add_argument("--corpus", help="corpus directory (simulated tools)")
    r.add_argument("--mode", choices=[m.name for m in ABLATION_ROWS])
    r.add_argument("--trace", help="trace file to write")

    b = sub.add_parser("bench", help="run a task file and report metrics")
    b.add_argument("tasks", help="task JSONL file")
    b.add_argument("--corpus", help="corpus directory (simulated tools)")
    b.add_argument("--mode", choices=[m.name for m in ABLATION_ROWS] + ["all"])
    b.add_argument("--trace-dir")
    b.add_argument("--parallelism", type=int)
    b.add_argument("--format", choices=["table", "csv"])

    m = sub.add_parser("metrics", help="compute metrics from trace files or directories")
    m.add_argument("traces", nargs="+")
    m.add_argument("--label", default="")
    m.add_argument("--format", choices=["table", "csv"])

    gc = sub.add_parser("gen-corpus", help="generate a synthetic corpus directory")
    gc.add_argument("out")
    gc.add_argument("--seed", type=int)
    gc.add_argument("--n-entities", type=int)
    gc.add_argument("--docs-per-entity", type=int)
    gc.add_argument("--distractor-density", type=float)

    gt = sub.add_parser("gen-tasks", help="generate uniquely answerable tasks over a corpus")
    gt.add_argument("corpus")
    gt.add_argument("out")
    gt.add_argument("--count", type=int)
    gt.add_argument("--constraint-count", type=int)
    gt.add_argument("--seed", type=int)
    return p


def make_backends(settings: Settings, corpus_dir: str | None) -> Backends:
    tools = settings.tools
    corpus_dir = corpus_dir or tools.corpus_dir
    if tools.search == "simulated":
        if not corpus_dir:
            raise UsageError("simulated tools need a corpus directory (--corpus or tools.corpus_dir)")
        corpus = load_corpus(corpus_dir)
        search, fetcher = SimulatedSearch(corpus.documents), CorpusFetcher(corpus)
    else:
        limiter = TokenBucket(tools.requests_per_second)
        search, fetcher = SerpApiSearch(limiter=limiter), HttpFetcher(limiter=limiter)
    toolkit = Toolkit(search, fetcher, concurrency=tools.concurrency, default_k=tools.default_k,
                      max_variants=tools.max_variants)

    cfg = settings.backend
    if cfg.kind == "replay":
        replay = record_replay(cfg.cassette)
        planner = executor = replay
    else:
        if cfg.kind == "http" or (cfg.kind == "record" and cfg.base_url):
            kwargs = {"timeout": cfg.timeout, "max_retries": cfg.max_retries}
            if cfg.base_url and cfg.model:
                planner = HttpChatBackend(cfg.base_url, cfg.model, **kwargs)
            else:
                planner = HttpChatBackend.from_env(**kwargs)
            executor = planner
            if cfg.executor_base_url or cfg.executor_model:
                executor = HttpChatBackend(cfg.executor_base_url or planner.base_url,
                                           cfg.executor_model or planner.model,
                                           api_key=planner.api_key, **kwargs)
        else:
            planner, executor = policy_backends()
        if cfg.kind == "record":
            lock = threading.Lock()
            planner = RecordingBackend(planner, cfg.cassette, lock)
            executor = RecordingBackend(executor, cfg.cassette, lock)
    return Backends(planner, executor, toolkit, settings.limits, settings.completion)


def _cmd_run(args, settings: Settings) -> int:
    try:
        mode = AblationMode.from_name(args.mode or settings.bench.mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    backends = make_backends(settings, args.corpus)
    trace = TraceSink(args.trace)
    answer = run_task(args.question, mode, settings.run, backends, trace, "run")
    finals = [e for e in trace.events if e.kind.value == "final"]
    confidence = next((e.payload.get("confidence") for e in reversed(finals)
                       if e.payload.get("answer") == answer and "confidence" in e.payload), None)
    print(json.dumps({"answer": answer, "confidence": confidence}, ensure_ascii=False))
    errors = [e.payload["error"] for e in finals if "error" in e.payload]
    if errors:
        print(f"error: {errors[-1]}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_bench(args, settings: Settings) -> int:
    settings = override(settings, "bench", mode=args.mode, trace_dir=args.trace_dir,
                        parallelism=args.parallelism, report_format=args.format)
    tasks = load_tasks(args.tasks)
    if not tasks:
        raise UsageError(f"{args.tasks} contains no tasks")
    backends = make_backends(settings, args.corpus)
    bench = settings.bench
    modes = ABLATION_ROWS if bench.mode == "all" else (AblationMode.from_name(bench.mode),)
    rows = []
    for mode in modes:
        result = run_benchmark(tasks, mode, settings.run, backends, Path(bench.trace_dir) / mode.name,
                               bench.parallelism)
        rows.append(result.metrics)
    sys.stdout.write(report(rows, bench.report_format))
    return EXIT_OK


def _cmd_metrics(args, settings: Settings) -> int:
    fmt = args.format or settings.bench.report_format
    for t in args.traces:
        if not Path(t).exists():
            raise UsageError(f"no such trace file or directory: {t}")
    sys.stdout.write(report([compute_metrics(args.traces, args.label)], fmt))
    return EXIT_OK


def _cmd_gen_corpus(args, settings: Settings) -> int:
    settings = override(settings, "corpus", seed=args.seed, n_entities=args.n_entities,
                        docs_per_entity=args.docs_per_entity, distractor_density=args.distractor_density)
    corpus = build_corpus(settings.corpus.spec(), settings.corpus.seed)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus.documents)} documents for {len(corpus.entities)} entities to {args.out}")
    return EXIT_OK


def _cmd_gen_tasks(args, settings: Settings) -> int:
    settings = override(settings, "tasks", count=args.count, constraint_count=args.constraint_count,
                        seed=args.seed)
    t = settings.tasks
    corpus = load_corpus(args.corpus)
    tasks = []
    seed = t.seed
    while len(tasks) < t.count and seed < t.seed + 10 * t.count:
        try:
            tasks.append(generate_task(corpus, t.constraint_count, seed))
        except ValueError as exc:
            logger.info("seed %d skipped: %s", seed, exc)
        seed += 1
    if len(tasks) < t.count:
        print(f"error: only {len(tasks)} of {t.count} tasks could be generated", file=sys.stderr)
        return EXIT_RUNTIME
    save_tasks(tasks, args.out)
    print(f"wrote {len(tasks)} tasks to {args.out}")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run, "bench": _cmd_bench, "metrics": _cmd_metrics,
    "gen-corpus": _cmd_gen_corpus, "gen-tasks": _cmd_gen_tasks,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = load_config(args.config)
        return COMMANDS[args.command](args, settings)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        logger.debug("command failed", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
