"""Offline metrics over trace files, and table/csv reports."""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable

from ..trace import Kind, TraceEvent, read_trace

logger = logging.getLogger(__name__)

SEARCH_TOOLS = ("web_search", "batch_search")


@dataclass(frozen=True)
class RunMetrics:
    label: str
    runs: int
    accuracy: float
    mean_search_calls: float
    mean_tokens: float
    mean_interactions: float
    mean_tool_calls_per_invocation: float
    max_tool_calls_per_invocation: float
    unique_pages: int
    skipped_lines: int = 0

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must be in [0, 1]")
        means = (self.mean_search_calls, self.mean_tokens, self.mean_interactions,
                 self.mean_tool_calls_per_invocation, self.max_tool_calls_per_invocation)
        if min(means) < 0 or self.runs < 0 or self.unique_pages < 0:
            raise ValueError("metrics must be non-negative")


def _trace_files(traces) -> list[Path]:
    if isinstance(traces, (str, Path)):
        traces = [traces]
    files: list[Path] = []
    for t in traces:
        p = Path(t)
        files.extend(sorted(p.glob("*.jsonl")) if p.is_dir() else [p])
    return files


def compute_metrics(traces, label: str = "") -> RunMetrics:
    """Metrics over trace files or directories of ``*.jsonl`` traces."""
    files = _trace_files(traces)
    if not files:
        raise ValueError("no trace files given")
    events: list[TraceEvent] = []
    skipped = 0
    for f in files:
        evs, bad = read_trace(f)
        events.extend(evs)
        skipped += bad
    if skipped:
        logger.warning("skipped %d malformed trace lines", skipped)
    return metrics_from_events(events, label, skipped)


def metrics_from_events(events: Iterable[TraceEvent], label: str = "", skipped: int = 0) -> RunMetrics:
    events = list(events)
    runs = sorted({e.run_id for e in events})
    if not runs:
        raise ValueError("trace set contains no events")
    correct: dict[str, bool] = {}
    search = tokens = interactions = 0
    per_run_script: dict[tuple, int] = {}
    pages: set[str] = set()
    for e in events:
        if e.tokens is not None:
            tokens += e.tokens.total
        if e.kind in (Kind.DELEGATE, Kind.REPLAN):
            interactions += 1
        elif e.kind is Kind.SCRIPT_RUN:
            per_run_script.setdefault((e.run_id, e.payload.get("sub_task_id"), e.payload.get("run")), 0)
        elif e.kind is Kind.TOOL_CALL:
            if e.payload.get("name") in SEARCH_TOOLS:
                search += 1
            pages.update(e.payload.get("urls", ()))
            key = (e.run_id, e.payload.get("sub_task_id"), e.payload.get("script_run"))
            per_run_script[key] = per_run_script.get(key, 0) + 1
        elif e.kind is Kind.FINAL and "correct" in e.payload:
            correct[e.run_id] = bool(e.payload["correct"])
    n = len(runs)
    counts = list(per_run_script.values())
    return RunMetrics(
        label=label,
        runs=n,
        accuracy=sum(correct.values()) / n,
        mean_search_calls=search / n,
        mean_tokens=tokens / n,
        mean_interactions=interactions / n,
        mean_tool_calls_per_invocation=sum(counts) / len(counts) if counts else 0.0,
        max_tool_calls_per_invocation=float(max(counts)) if counts else 0.0,
        unique_pages=len(pages),
        skipped_lines=skipped,
    )


COLUMNS = tuple(f.name for f in fields(RunMetrics))


def _cell(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def report(metrics: list[RunMetrics], fmt: str = "table") -> str:
    if not metrics:
        raise ValueError("nothing to report")
    rows = [[_cell(getattr(m, c)) for c in COLUMNS] for m in metrics]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        writer.writerows(rows)
        return buf.getvalue()
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")
    widths = [max(len(c), *(len(r[i]) for r in rows)) for i, c in enumerate(COLUMNS)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(COLUMNS, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in rows)
    return "\n".join(line.rstrip() for line in lines) + "\n"


def parse_csv_report(text: str) -> list[RunMetrics]:
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for row in reader:
        kwargs = {}
        for f in fields(RunMetrics):
            raw = row[f.name]
            kwargs[f.name] = raw if f.type == "str" else (int(raw) if f.type == "int" else float(raw))
        out.append(RunMetrics(**kwargs))
    return out
