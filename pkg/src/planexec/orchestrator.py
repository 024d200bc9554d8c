"""Planner and executor loops.

The planner sees only the question, its own reasoning and the executor's
distilled ``<result>`` blocks. The executor sees one sub-task, its own
scripts and their ``<execution_results>``. Raw tool output never reaches
the planner.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

from .errors import SessionClosed
from .llm import CompletionBackend, CompletionParams, LLMError, Message, Role, TokenUsage, complete
from .protocol import (
    Continue,
    Delegate,
    FinalResult,
    Finalize,
    Tag,
    extract_blocks,
    parse_executor_turn,
    parse_planner_turn,
    truncate_after_code,
    wrap_block,
)
from .sandbox import BuiltinRegistry, ResourceLimits, SandboxSession, create_session, destroy_session, execute
from .trace import Actor, Kind, TraceSink

logger = logging.getLogger(__name__)

CARRYOVER_TOKENS = 500
DEGRADED_PREFIX = "[degraded: script run limit reached]"


@dataclass(frozen=True)
class RunConfig:
    confidence_threshold: float = 0.7
    max_replans: int = 3
    max_planner_turns: int = 16
    max_executor_turns: int = 12
    max_script_runs_per_subtask: int = 8
    token_budget: int = 4_000_000
    answer_marker: str = "FINAL ANSWER:"

    def __post_init__(self):
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError("confidence_threshold must be in [0, 1]")
        if self.max_replans < 0:
            raise ValueError("max_replans must be >= 0")
        if min(self.max_planner_turns, self.max_executor_turns, self.max_script_runs_per_subtask,
               self.token_budget) < 1:
            raise ValueError("turn, run and token limits must be positive")


@dataclass(frozen=True)
class SubTask:
    id: int
    description: str
    issued_at_turn: int = 0


@dataclass
class ExecResult:
    sub_task_id: int
    summary: str
    evidence: list[tuple[str, str]] = field(default_factory=list)
    degraded: bool = False
    tokens: TokenUsage = field(default_factory=TokenUsage)


@dataclass
class PlannerEpisode:
    question: str
    context: list[Message] = field(default_factory=list)
    attempts: int = 0
    answer: tuple[str, float] | None = None
    sub_tasks: list[SubTask] = field(default_factory=list)
    results: list[ExecResult] = field(default_factory=list)
    error: str | None = None


def load_prompt(name: str) -> str:
    text = resources.files("planexec.prompts").joinpath(f"{name}.txt").read_text("utf-8")
    lines = text.splitlines()
    if lines and lines[0].startswith("#"):
        lines = lines[1:]
    return "\n".join(lines).strip() + "\n"


def executor_prompt(registry: BuiltinRegistry) -> str:
    return load_prompt("executor").replace("{builtins}", registry.describe())


def should_replan(confidence: float, attempts: int, cfg: RunConfig) -> bool:
    return confidence < cfg.confidence_threshold and attempts < cfg.max_replans + 1


def _without_blocks(text: str, *tags: Tag) -> str:
    for tag in tags:
        for block in reversed(extract_blocks(text, tag)):
            a, b = block.span
            text = text[:a] + text[b:]
    return text


def _clip_tokens(text: str, tokens: int) -> str:
    limit = tokens * 4
    return text if len(text) <= limit else text[: limit - 3] + "..."


# --- executor ---------------------------------------------------------------------

def run_executor(sub_task: SubTask, llm: CompletionBackend, sandbox: SandboxSession, cfg: RunConfig,
                 trace: TraceSink, *, run_id: str = "run", params: CompletionParams | None = None,
                 system_prompt: str | None = None) -> ExecResult:
    params = params or CompletionParams()
    prompt = system_prompt or executor_prompt(sandbox.registry)
    messages = [Message(Role.SYSTEM, prompt), Message(Role.USER, sub_task.description)]
    evidence: dict[str, str] = {}
    runs = 0
    usage_total = TokenUsage()
    last_output = ""
    for turn in range(cfg.max_executor_turns):
        text, usage = complete(messages, params, llm)
        usage_total += usage
        trace.emit(run_id, Actor.EXECUTOR, Kind.TURN,
                   {"sub_task_id": sub_task.id, "turn": turn, "text": text}, usage)
        action = parse_executor_turn(text)
        if isinstance(action, FinalResult):
            summary = action.summary or last_output.strip() or "(executor returned no summary)"
            return ExecResult(sub_task.id, summary, list(evidence.items()), False, usage_total)
        if runs >= cfg.max_script_runs_per_subtask:
            break
        runs += 1
        try:
            output = execute(sandbox, action.script)
            rendered = output.render()
            tool_calls = output.tool_calls
            error = output.error
            truncated = output.truncated
        except (SessionClosed, RuntimeError) as exc:
            rendered, tool_calls, error, truncated = f"sandbox error: {exc}", [], f"sandbox error: {exc}", False
        trace.emit(run_id, Actor.SANDBOX, Kind.SCRIPT_RUN, {
            "sub_task_id": sub_task.id, "run": runs, "script": action.script, "error": error,
            "truncated": truncated, "tool_calls": len(tool_calls), "output": rendered,
        })
        for tc in tool_calls:
            trace.emit(run_id, Actor.TOOL, Kind.TOOL_CALL,
                       {"sub_task_id": sub_task.id, "script_run": runs, **tc.to_dict()})
            for url in tc.urls:
                evidence.setdefault(url, tc.name)
        last_output = rendered
        messages.append(Message(Role.ASSISTANT, truncate_after_code(text)))
        messages.append(Message(Role.USER, wrap_block(Tag.EXECUTION_RESULTS, rendered or "(no output)")))
    tail = last_output.strip()[-1500:] or "no output was produced"
    return ExecResult(sub_task.id, f"{DEGRADED_PREFIX} {tail}", list(evidence.items()), True, usage_total)


class Executor:
    """Runs each delegated sub-task in a fresh sandbox session."""

    def __init__(self, llm: CompletionBackend, registry: BuiltinRegistry, cfg: RunConfig, trace: TraceSink,
                 *, run_id: str = "run", params: CompletionParams | None = None,
                 limits: ResourceLimits | None = None):
        self.llm = llm
        self.registry = registry
        self.cfg = cfg
        self.trace = trace
        self.run_id = run_id
        self.params = params
        self.limits = limits or ResourceLimits()
        self.invocations = 0

    def __call__(self, sub_task: SubTask) -> ExecResult:
        self.invocations += 1
        session = create_session(self.limits, self.registry)
        try:
            return run_executor(sub_task, self.llm, session, self.cfg, self.trace,
                                run_id=self.run_id, params=self.params)
        finally:
            destroy_session(session)


# --- planner ----------------------------------------------------------------------

def _attempt_summary(attempt: int, answer: str, confidence: float, tasks: list[SubTask],
                     results: list[ExecResult]) -> str:
    lines = [f"Attempt {attempt} ended with answer {answer!r} at confidence {confidence:.2f}."]
    by_id = {r.sub_task_id: r for r in results}
    for t in tasks:
        r = by_id.get(t.id)
        found = re.sub(r"\s+", " ", r.summary)[:240] if r else "no result"
        lines.append(f"- sub-task: {t.description[:200]} -> {found}")
    return _clip_tokens("\n".join(lines), CARRYOVER_TOKENS)


def _question_message(question: str, carryover: list[str]) -> str:
    if not carryover:
        return question
    notes = "\n".join(carryover)
    return f"{question}\n\nNotes from earlier attempts (the answers were not confident enough):\n{notes}"


def run_planner(question: str, llm: CompletionBackend, executor: Callable[[SubTask], ExecResult],
                cfg: RunConfig, trace: TraceSink, *, run_id: str = "run",
                params: CompletionParams | None = None,
                system_prompt: str | None = None) -> tuple[str, float, PlannerEpisode]:
    params = params or CompletionParams()
    prompt = system_prompt or load_prompt("planner")
    episode = PlannerEpisode(question)
    best: tuple[str, float] | None = None
    carryover: list[str] = []
    tokens_used = 0
    next_id = 1

    while True:
        episode.attempts += 1
        attempt = episode.attempts
        context = [Message(Role.SYSTEM, prompt), Message(Role.USER, _question_message(question, carryover))]
        episode.context = context
        tasks: list[SubTask] = []
        results: list[ExecResult] = []
        outcome: tuple[str, float] | None = None
        for turn in range(cfg.max_planner_turns):
            if tokens_used >= cfg.token_budget:
                break
            try:
                text, usage = complete(context, params, llm)
            except LLMError as exc:
                return _abort(episode, trace, run_id, attempt, exc, best)
            tokens_used += usage.total
            trace.emit(run_id, Actor.PLANNER, Kind.TURN, {"attempt": attempt, "turn": turn, "text": text}, usage)
            action = parse_planner_turn(text, cfg.answer_marker)
            if isinstance(action, Delegate):
                task = SubTask(next_id, action.sub_task, turn)
                next_id += 1
                tasks.append(task)
                episode.sub_tasks.append(task)
                trace.emit(run_id, Actor.PLANNER, Kind.DELEGATE,
                           {"attempt": attempt, "sub_task_id": task.id, "description": task.description})
                try:
                    result = executor(task)
                except LLMError as exc:
                    return _abort(episode, trace, run_id, attempt, exc, best, sub_task_id=task.id)
                tokens_used += result.tokens.total
                results.append(result)
                episode.results.append(result)
                summary = _without_blocks(result.summary, Tag.CODE, Tag.EXECUTION_RESULTS, Tag.TASK, Tag.RESULT)
                trace.emit(run_id, Actor.EXECUTOR, Kind.RESULT, {
                    "attempt": attempt, "sub_task_id": task.id, "summary": summary,
                    "degraded": result.degraded, "evidence": [u for u, _ in result.evidence],
                })
                head = _without_blocks(text[: _first_task_end(text)], Tag.CODE, Tag.EXECUTION_RESULTS)
                context.append(Message(Role.ASSISTANT, head))
                context.append(Message(Role.USER, wrap_block(Tag.RESULT, summary)))
            elif isinstance(action, Finalize):
                context.append(Message(Role.ASSISTANT, _without_blocks(text, Tag.CODE, Tag.EXECUTION_RESULTS)))
                outcome = (action.answer, action.confidence)
                break
            else:
                context.append(Message(Role.ASSISTANT, _without_blocks(text, Tag.CODE, Tag.EXECUTION_RESULTS)))
                context.append(Message(Role.USER, "Continue."))
        limited = outcome is None
        if limited:
            outcome = (best[0] if best else "", 0.0)
        trace.emit(run_id, Actor.PLANNER, Kind.FINAL, {
            "attempt": attempt, "answer": outcome[0], "confidence": outcome[1], "turn_limited": limited,
        })
        if best is None or outcome[1] > best[1]:
            best = outcome
        if outcome[1] >= cfg.confidence_threshold:
            best = outcome
            break
        if not should_replan(outcome[1], attempt, cfg) or tokens_used >= cfg.token_budget:
            break
        trace.emit(run_id, Actor.PLANNER, Kind.REPLAN, {"attempt": attempt, "confidence": outcome[1]})
        carryover.append(_attempt_summary(attempt, outcome[0], outcome[1], tasks, results))
        carryover = [_clip_tokens("\n".join(carryover), CARRYOVER_TOKENS)]

    episode.answer = best
    return best[0], best[1], episode


def _first_task_end(text: str) -> int:
    for block in extract_blocks(text, Tag.TASK):
        if block.content.strip():
            return block.span[1]
    return len(text)


def _abort(episode, trace, run_id, attempt, exc, best, sub_task_id=None):
    payload = {"attempt": attempt, "error": str(exc)}
    if sub_task_id is not None:
        payload["sub_task_id"] = sub_task_id
    trace.emit(run_id, Actor.BACKEND, Kind.FINAL, payload)
    episode.error = str(exc)
    episode.answer = (best[0] if best else "", 0.0)
    return episode.answer[0], 0.0, episode


def run_executor_only(question: str, executor: Callable[[SubTask], ExecResult], trace: TraceSink,
                      *, run_id: str = "run") -> tuple[str, ExecResult | None]:
    """Hand the whole question to the executor (ablation without a planner)."""
    task = SubTask(1, question, 0)
    trace.emit(run_id, Actor.PLANNER, Kind.DELEGATE,
               {"attempt": 1, "sub_task_id": 1, "description": question, "direct": True})
    try:
        result = executor(task)
    except LLMError as exc:
        trace.emit(run_id, Actor.BACKEND, Kind.FINAL, {"attempt": 1, "error": str(exc), "sub_task_id": 1})
        return "", None
    trace.emit(run_id, Actor.EXECUTOR, Kind.RESULT, {
        "attempt": 1, "sub_task_id": 1, "summary": result.summary, "degraded": result.degraded,
        "evidence": [u for u, _ in result.evidence],
    })
    answer = "" if result.degraded else result.summary
    trace.emit(run_id, Actor.PLANNER, Kind.FINAL,
               {"attempt": 1, "answer": answer, "confidence": None, "turn_limited": False})
    return answer, result
