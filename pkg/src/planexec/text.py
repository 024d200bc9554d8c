"""Tokenisation shared by ranking, relevance selection and answer judging."""
import re

_TOKEN_RE = re.compile(r"[a-z0-9]+")

STOPWORDS = frozenset(
    "a an and are as at be by for from has have in is it its of on or that the this to was "
    "were which who whom whose with".split()
)


def tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def content_tokens(text: str) -> list[str]:
    """Lower-cased tokens minus stopwords, first occurrence order, no duplicates."""
    seen = dict.fromkeys(t for t in tokens(text) if t not in STOPWORDS)
    return list(seen)


def token_spans(text: str):
    """Yield ``(start_offset, token)`` for every token in ``text``."""
    for m in _TOKEN_RE.finditer(text.lower()):
        yield m.start(), m.group(0)


def overlap(query_terms, text: str) -> int:
    present = set(tokens(text))
    return sum(1 for t in query_terms if t in present)
