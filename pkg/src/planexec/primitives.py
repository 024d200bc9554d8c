"""Search primitives exposed to executor scripts: keyword expansion, batch search, condition checks.

Condition predicates in simulated mode use a small boolean language::

    expr   := term ("OR" term)*
    term   := factor ("AND" factor)*
    factor := "NOT" factor | "(" expr ")" | atom
    atom   := "contains" STRING | "word" STRING | STRING

``contains`` is a case-insensitive substring test; ``word`` additionally
requires that the match is not flanked by letters or digits. A bare string
means ``contains``.
"""
from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .tools.search import SearchBackend, web_search
from .tools.types import SearchResponse

logger = logging.getLogger(__name__)

DEFAULT_MAX_VARIANTS = 8
DEFAULT_CONCURRENCY = 8


@dataclass(frozen=True)
class KeywordSet:
    seed: str
    variants: tuple[str, ...]
    degraded: bool = False

    def __post_init__(self):
        if not self.variants or self.variants[0] != self.seed:
            raise ValueError("variants must start with the seed")
        if len(set(self.variants)) != len(self.variants):
            raise ValueError("variants must be distinct")


@dataclass(frozen=True)
class ConditionVerdict:
    page_index: int
    value: bool
    rationale: str | None = None


class KeywordExpander(Protocol):
    def expand(self, seed: str, limit: int) -> list[str]:
        ...


class ConditionEvaluator(Protocol):
    def evaluate(self, page: str, condition: str) -> bool | None:
        """True / False, or None when the page does not settle the condition."""


SYNONYMS = {
    "best": "top", "paper": "article", "studied": "graduated", "born": "birth",
    "award": "prize", "prize": "award", "received": "won", "works": "researcher",
    "lives": "resident", "university": "college", "city": "town", "founded": "established",
    "author": "writer", "film": "movie", "company": "firm",
}


class RuleExpander:
    """Deterministic expansion: quoted phrase, Wikipedia-restricted form, then synonym swaps."""

    def __init__(self, synonyms: dict[str, str] | None = None, site: str = "wikipedia.org"):
        self.synonyms = SYNONYMS if synonyms is None else synonyms
        self.site = site

    def expand(self, seed, limit):
        out = [f'"{seed}"', f"{seed} site:{self.site}"]
        words = seed.split()
        for i, w in enumerate(words):
            alt = self.synonyms.get(w.lower())
            if alt:
                out.append(" ".join(words[:i] + [alt] + words[i + 1:]))
        out.append(f'"{seed}" site:{self.site}')
        return out[:limit]


class LLMExpander:
    """Asks a completion backend for alternative queries, one per line."""

    def __init__(self, backend, params=None):
        from .llm import CompletionParams

        self.backend = backend
        self.params = params or CompletionParams(max_completion_tokens=512, temperature=0.6)

    def expand(self, seed, limit):
        from .llm import Message, Role, complete

        messages = [
            Message(Role.SYSTEM, "You write web search queries. Use operators such as quotes or "
                                 "site: when they help. Output one query per line and nothing else."),
            Message(Role.USER, f"Give up to {limit} alternative queries for: {seed}"),
        ]
        text, _ = complete(messages, self.params, self.backend)
        lines = [re.sub(r"^\s*(?:[-*]|\d+[.)])\s*", "", line).strip() for line in text.splitlines()]
        return [line for line in lines if line][:limit]


def generate_keywords(seed: str, expander: KeywordExpander,
                      max_variants: int = DEFAULT_MAX_VARIANTS) -> KeywordSet:
    if not seed or not seed.strip():
        raise ValueError("seed must be non-empty")
    if max_variants < 1:
        raise ValueError("max_variants must be >= 1")
    try:
        suggestions = list(expander.expand(seed, max_variants - 1)) if max_variants > 1 else []
    except Exception as exc:  # noqa: BLE001
        logger.warning("keyword expansion failed for %r: %s", seed, exc)
        return KeywordSet(seed, (seed,), degraded=True)
    variants = list(dict.fromkeys([seed] + [s for s in suggestions if s and s.strip()]))
    return KeywordSet(seed, tuple(variants[:max_variants]), degraded=len(variants) == 1)


def batch_search(keywords: Sequence[str], backend: SearchBackend,
                 concurrency: int = DEFAULT_CONCURRENCY, k: int = 5) -> list[SearchResponse]:
    """Search every keyword with at most ``concurrency`` requests in flight.

    ``result[i]`` always answers ``keywords[i]``; a failing query yields an
    empty response with ``error`` set and does not affect the others.
    """
    if not keywords:
        raise ValueError("keywords must be non-empty")
    if concurrency < 1:
        raise ValueError("concurrency must be >= 1")
    if concurrency == 1 or len(keywords) == 1:
        return [web_search(q, k, backend) for q in keywords]
    with ThreadPoolExecutor(max_workers=min(concurrency, len(keywords))) as pool:
        return list(pool.map(lambda q: web_search(q, k, backend), keywords))


# --- predicates -----------------------------------------------------------------

class PredicateError(ValueError):
    pass


_PRED_TOKEN = re.compile(r'\s*(?:(\()|(\))|"((?:[^"\\]|\\.)*)"|\'((?:[^\'\\]|\\.)*)\'|([A-Za-z_]+))')


def _lex_predicate(text: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _PRED_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PredicateError(f"unexpected input at {pos}: {text[pos:pos + 10]!r}")
        if m.group(1):
            out.append(("(", "("))
        elif m.group(2):
            out.append((")", ")"))
        elif m.group(3) is not None or m.group(4) is not None:
            raw = m.group(3) if m.group(3) is not None else m.group(4)
            out.append(("str", re.sub(r"\\(.)", r"\1", raw)))
        else:
            out.append(("word", m.group(5).lower()))
        pos = m.end()
    return out


def parse_predicate(text: str):
    """Parse into nested tuples: ("contains"|"word", s), ("not", x), ("and"|"or", [xs])."""
    toks = _lex_predicate(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else (None, None)

    def take():
        nonlocal pos
        tok = peek()
        pos += 1
        return tok

    def expr():
        items = [term()]
        while peek() == ("word", "or"):
            take()
            items.append(term())
        return items[0] if len(items) == 1 else ("or", items)

    def term():
        items = [factor()]
        while peek() == ("word", "and"):
            take()
            items.append(factor())
        return items[0] if len(items) == 1 else ("and", items)

    def factor():
        kind, value = take()
        if (kind, value) == ("word", "not"):
            return ("not", factor())
        if kind == "(":
            node = expr()
            if take()[0] != ")":
                raise PredicateError("missing ')'")
            return node
        if kind == "word" and value in ("contains", "word"):
            k2, s = take()
            if k2 != "str":
                raise PredicateError(f"{value} needs a quoted string")
            return (value, s)
        if kind == "str":
            return ("contains", value)
        raise PredicateError(f"unexpected token {value!r}")

    if not toks:
        raise PredicateError("empty predicate")
    node = expr()
    if pos != len(toks):
        raise PredicateError(f"trailing input {peek()[1]!r}")
    return node


def format_predicate(node) -> str:
    op = node[0]
    if op in ("contains", "word"):
        escaped = node[1].replace("\\", "\\\\").replace('"', '\\"')
        return f'{op} "{escaped}"'
    if op == "not":
        return f"NOT ({format_predicate(node[1])})"
    joiner = f" {op.upper()} "
    return joiner.join(f"({format_predicate(x)})" for x in node[1])


def _eval_predicate(node, page_lower: str) -> bool:
    op = node[0]
    if op == "contains":
        return node[1].lower() in page_lower
    if op == "word":
        needle = re.escape(node[1].lower())
        return re.search(rf"(?<![a-z0-9]){needle}(?![a-z0-9])", page_lower) is not None
    if op == "not":
        return not _eval_predicate(node[1], page_lower)
    if op == "and":
        return all(_eval_predicate(x, page_lower) for x in node[1])
    return any(_eval_predicate(x, page_lower) for x in node[1])


class PredicateEvaluator:
    """Evaluates the boolean predicate language; never undetermined."""

    def __init__(self):
        self._cache: dict[str, object] = {}

    def evaluate(self, page, condition):
        node = self._cache.get(condition)
        if node is None:
            node = self._cache[condition] = parse_predicate(condition)
        return _eval_predicate(node, page.lower())


class LLMConditionEvaluator:
    """Asks a completion backend whether a page satisfies a natural-language condition."""

    def __init__(self, backend, params=None, max_chars: int = 12000):
        from .llm import CompletionParams

        self.backend = backend
        self.params = params or CompletionParams(max_completion_tokens=64, temperature=0.0)
        self.max_chars = max_chars

    def evaluate(self, page, condition):
        from .llm import Message, Role, complete

        messages = [
            Message(Role.SYSTEM, "Decide whether the document satisfies the condition. "
                                 "Answer with exactly one word: TRUE, FALSE or UNDETERMINED."),
            Message(Role.USER, f"Condition: {condition}\n\nDocument:\n{page[:self.max_chars]}"),
        ]
        text, _ = complete(messages, self.params, self.backend)
        word = text.strip().split()[0].upper().strip(".:") if text.strip() else ""
        if word == "TRUE":
            return True
        if word == "FALSE":
            return False
        return None


def check_condition(pages: Sequence[str], condition: str,
                    evaluator: ConditionEvaluator) -> list[ConditionVerdict]:
    verdicts = []
    for i, page in enumerate(pages):
        try:
            value = evaluator.evaluate(page, condition)
        except Exception as exc:  # noqa: BLE001
            verdicts.append(ConditionVerdict(i, False, f"evaluator error: {exc}"))
            continue
        if value is None:
            verdicts.append(ConditionVerdict(i, False, "undetermined"))
        else:
            verdicts.append(ConditionVerdict(i, bool(value)))
    return verdicts
