"""Tagged-block message protocol shared by planner, executor and sandbox.

Blocks look like ``<task>...</task>``. Content is taken verbatim between the
tags, minus at most one leading and one trailing newline. A literal close tag
inside wrapped content is prefixed with :data:`ESCAPE` so it survives the
round trip; :func:`extract_blocks` removes the prefix again.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Union

ESCAPE = "\x00ESC"


class Tag(str, enum.Enum):
    TASK = "task"
    RESULT = "result"
    CODE = "code"
    EXECUTION_RESULTS = "execution_results"

    @property
    def open(self) -> str:
        return f"<{self.value}>"

    @property
    def close(self) -> str:
        return f"</{self.value}>"


@dataclass(frozen=True)
class TagBlock:
    tag: Tag
    content: str
    span: tuple[int, int]


@dataclass(frozen=True)
class Delegate:
    sub_task: str


@dataclass(frozen=True)
class Finalize:
    answer: str
    confidence: float


@dataclass(frozen=True)
class Continue:
    pass


PlannerAction = Union[Delegate, Finalize, Continue]


@dataclass(frozen=True)
class RunScript:
    script: str


@dataclass(frozen=True)
class FinalResult:
    summary: str


ExecutorAction = Union[RunScript, FinalResult]


def _find_close(text: str, close: str, start: int) -> int:
    """Position of the first close tag at or after ``start`` that is not escaped."""
    pos = text.find(close, start)
    while pos != -1:
        if not text.endswith(ESCAPE, 0, pos):
            return pos
        pos = text.find(close, pos + len(close))
    return -1


def _trim(raw: str) -> str:
    if raw.startswith("\n"):
        raw = raw[1:]
    if raw.endswith("\n"):
        raw = raw[:-1]
    return raw


def extract_blocks(text: str, tag: Tag) -> list[TagBlock]:
    """Return every well-formed ``tag`` block in source order.

    An open tag without a matching close yields nothing. A second open tag
    before the close is plain content, so the outermost open tag wins.
    """
    tag = Tag(tag)
    blocks: list[TagBlock] = []
    pos = 0
    while True:
        start = text.find(tag.open, pos)
        if start == -1:
            break
        body = start + len(tag.open)
        end = _find_close(text, tag.close, body)
        if end == -1:
            break
        content = _trim(text[body:end]).replace(ESCAPE + tag.close, tag.close)
        stop = end + len(tag.close)
        blocks.append(TagBlock(tag, content, (start, stop)))
        pos = stop
    return blocks


def wrap_block(tag: Tag, content: str) -> str:
    tag = Tag(tag)
    escaped = content.replace(tag.close, ESCAPE + tag.close)
    return f"{tag.open}\n{escaped}\n{tag.close}"


_CONFIDENCE_RE = re.compile(r"confidence\s*:\s*([-+]?\d+(?:\.\d*)?|[-+]?\.\d+)\s*(%?)", re.IGNORECASE)
_THINK_RE = re.compile(r"<think>.*?</think>", re.DOTALL)


def _parse_confidence(text: str) -> float:
    m = _CONFIDENCE_RE.search(text)
    if not m:
        return 0.0
    value = float(m.group(1))
    if m.group(2):
        value /= 100.0
    return min(1.0, max(0.0, value))


def parse_planner_turn(text: str, answer_marker: str = "FINAL ANSWER:") -> PlannerAction:
    for block in extract_blocks(text, Tag.TASK):
        if block.content.strip():
            return Delegate(block.content.strip())
    idx = text.lower().find(answer_marker.lower())
    if idx == -1:
        return Continue()
    rest = text[idx + len(answer_marker):]
    m = _CONFIDENCE_RE.search(rest)
    if m:
        answer = rest[: m.start()]
        confidence = _parse_confidence(rest[m.start():])
    else:
        # marker without a parseable score is treated as zero confidence
        answer = rest.split("\n")[0] if re.search(r"confidence", rest, re.I) else rest
        confidence = 0.0
    return Finalize(answer.strip(), confidence)


def strip_reasoning(text: str) -> str:
    """Drop ``<think>`` sections that reasoning models put before their answer."""
    text = _THINK_RE.sub("", text)
    if "</think>" in text:
        text = text.split("</think>")[-1]
    return text.strip()


def parse_executor_turn(text: str) -> ExecutorAction:
    for block in extract_blocks(text, Tag.CODE):
        if block.content.strip():
            return RunScript(block.content)
    return FinalResult(strip_reasoning(text))


def truncate_after_code(text: str) -> str:
    """Keep an executor turn only up to the end of its first code block."""
    blocks = [b for b in extract_blocks(text, Tag.CODE) if b.content.strip()]
    if not blocks:
        return text
    return text[: blocks[0].span[1]]
