"""Append-only, line-delimited event trace.

``timestamp`` is a per-run sequence number rather than wall-clock time, so a
replayed run produces a byte-identical file.
"""
from __future__ import annotations

import enum
import json
import threading
from dataclasses import dataclass
from pathlib import Path

from .llm import TokenUsage


class Actor(str, enum.Enum):
    PLANNER = "planner"
    EXECUTOR = "executor"
    SANDBOX = "sandbox"
    TOOL = "tool"
    BACKEND = "backend"


class Kind(str, enum.Enum):
    TURN = "turn"
    DELEGATE = "delegate"
    RESULT = "result"
    SCRIPT_RUN = "script_run"
    TOOL_CALL = "tool_call"
    REPLAN = "replan"
    FINAL = "final"


@dataclass(frozen=True)
class TraceEvent:
    run_id: str
    timestamp: int
    actor: Actor
    kind: Kind
    payload: dict
    tokens: TokenUsage | None = None

    def to_json(self) -> str:
        d = {
            "run_id": self.run_id,
            "timestamp": self.timestamp,
            "actor": self.actor.value,
            "kind": self.kind.value,
            "payload": self.payload,
            "tokens": self.tokens.to_dict() if self.tokens is not None else None,
        }
        return json.dumps(d, sort_keys=True, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "TraceEvent":
        d = json.loads(line)
        tokens = TokenUsage(**d["tokens"]) if d.get("tokens") else None
        return cls(d["run_id"], int(d["timestamp"]), Actor(d["actor"]), Kind(d["kind"]), d["payload"], tokens)


class TraceSink:
    """Collects events in memory and, if ``path`` is given, appends them to a file.

    Safe for concurrent emitters; each ``run_id`` keeps its own sequence.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.events: list[TraceEvent] = []
        self._seq: dict[str, int] = {}
        self._lock = threading.Lock()
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def emit(self, run_id: str, actor: Actor, kind: Kind, payload: dict,
             tokens: TokenUsage | None = None) -> TraceEvent:
        with self._lock:
            seq = self._seq.get(run_id, 0)
            self._seq[run_id] = seq + 1
            event = TraceEvent(run_id, seq, Actor(actor), Kind(kind), payload, tokens)
            self.events.append(event)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(event.to_json() + "\n")
        return event

    def of_kind(self, kind: Kind) -> list[TraceEvent]:
        return [e for e in self.events if e.kind is kind]


def read_trace(path: str | Path) -> tuple[list[TraceEvent], int]:
    """Parse a trace file; returns (events, number of malformed lines skipped)."""
    events, bad = [], 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                events.append(TraceEvent.from_json(line))
            except (ValueError, KeyError, TypeError):
                bad += 1
    return events, bad
