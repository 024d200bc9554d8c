"""Web search: a simulated engine over an in-memory corpus and a live SERP API client."""
from __future__ import annotations

import heapq
import logging
import os
import re
import threading
import time
from array import array
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence
from urllib.parse import urlparse

import httpx

from .. import _kernels
from ..text import STOPWORDS, content_tokens, token_spans, tokens
from .types import EntityFact, SearchPreview, SearchResponse

logger = logging.getLogger(__name__)

SNIPPET_CHARS = 160
TITLE_WEIGHT = 3
ENV_SERP_KEY = "PLANEXEC_SERP_API_KEY"
ENV_SERP_URL = "PLANEXEC_SERP_URL"

_SITE_RE = re.compile(r"(?:^|\s)site:(\S+)", re.IGNORECASE)
_PHRASE_RE = re.compile(r'"([^"]+)"')


class SearchBackend(Protocol):
    def search(self, query: str, k: int) -> SearchResponse:
        ...


@dataclass(frozen=True)
class ParsedQuery:
    terms: list[str]
    phrases: list[str]
    sites: list[str]


def parse_query(query: str) -> ParsedQuery:
    sites = [s.lower().lstrip(".") for s in _SITE_RE.findall(query)]
    rest = _SITE_RE.sub(" ", query)
    phrases = [" ".join(tokens(p)) for p in _PHRASE_RE.findall(rest)]
    return ParsedQuery(content_tokens(rest), [p for p in phrases if p], sites)


def host_matches(url: str, site: str) -> bool:
    host = (urlparse(url).hostname or "").lower()
    return host == site or host.endswith("." + site)


def static_snippet(body: str) -> str:
    """Query-independent summary used as the snippet field when ranking."""
    return body[:SNIPPET_CHARS]


def query_snippet(body: str, terms: Sequence[str], width: int = SNIPPET_CHARS) -> str:
    """The ``width``-char window, starting at a query-term hit, covering the most distinct terms.

    Ties go to the earliest hit, so without a better window the snippet
    starts at the first hit. No hit at all gives the head of the body.
    """
    ids = {t: i for i, t in enumerate(terms)}
    offsets, term_ids = array("i"), array("i")
    for off, tok in token_spans(body):
        if tok in ids:
            offsets.append(off)
            term_ids.append(ids[tok])
    best = _kernels.best_window(offsets, term_ids, width) if offsets else -1
    start = 0 if best < 0 else offsets[best]
    return body[start:start + width].strip()


class SimulatedSearch:
    """Deterministic ranking over documents with ``doc_id``, ``url``, ``title``, ``body``, ``entity``.

    Score is the sum over distinct query terms of 3 x [term in title] +
    [term in static snippet] + [term in body]; zero-score documents are never
    returned and ties go to the lower ``doc_id``. Supports ``"quoted phrase"``
    and ``site:host`` operators as filters.
    """

    def __init__(self, documents, failing_queries: Sequence[str] = ()):
        self.docs = sorted(documents, key=lambda d: d.doc_id)
        self.failing_queries = set(failing_queries)
        self._vocab: dict[str, int] = {}
        postings: dict[int, list[tuple[int, int]]] = {}
        self._norm_text: list[str] = []
        for idx, doc in enumerate(self.docs):
            title = set(tokens(doc.title))
            snip = set(tokens(static_snippet(doc.body)))
            body = set(tokens(doc.body))
            for term in title | snip | body:
                if term in STOPWORDS:
                    continue
                weight = TITLE_WEIGHT * (term in title) + (term in snip) + (term in body)
                tid = self._vocab.setdefault(term, len(self._vocab))
                postings.setdefault(tid, []).append((idx, weight))
            self._norm_text.append(" " + " ".join(tokens(doc.title + " " + doc.body)) + " ")
        self._offsets = array("i", [0])
        self._post_docs, self._post_weights = array("i"), array("i")
        for tid in range(len(self._vocab)):
            for idx, weight in postings.get(tid, ()):
                self._post_docs.append(idx)
                self._post_weights.append(weight)
            self._offsets.append(len(self._post_docs))
        self._entities = {}
        for doc in self.docs:
            if doc.entity is not None:
                self._entities.setdefault(" ".join(tokens(doc.entity.name)), doc.entity)

    def scores(self, terms: Sequence[str]) -> list[int]:
        ids = array("i", [self._vocab[t] for t in terms if t in self._vocab])
        return _kernels.accumulate_scores(self._offsets, self._post_docs, self._post_weights,
                                          ids, len(self.docs))

    def rank(self, query: str, k: int) -> list[int]:
        """Indices into ``self.docs`` of the top ``k`` documents."""
        pq = parse_query(query)
        scores = self.scores(pq.terms)
        cands = []
        for idx, score in enumerate(scores):
            if score <= 0:
                continue
            doc = self.docs[idx]
            if pq.sites and not any(host_matches(doc.url, s) for s in pq.sites):
                continue
            if pq.phrases and not all(f" {p} " in self._norm_text[idx] for p in pq.phrases):
                continue
            cands.append((-score, doc.doc_id, idx))
        return [idx for _, _, idx in heapq.nsmallest(k, cands)]

    def entity_facts(self, query: str) -> list[EntityFact]:
        norm = " " + " ".join(tokens(query)) + " "
        return [e for key, e in self._entities.items() if f" {key} " in norm]

    def search(self, query: str, k: int) -> SearchResponse:
        if query in self.failing_queries:
            raise RuntimeError(f"simulated failure for query {query!r}")
        terms = parse_query(query).terms
        ranked = self.rank(query, k)
        previews = [
            SearchPreview(self.docs[i].title, self.docs[i].url, query_snippet(self.docs[i].body, terms), r)
            for r, i in enumerate(ranked, start=1)
        ]
        norm_query = " ".join(tokens(query))
        related = []
        for p in previews:
            cand = " ".join(tokens(p.title))
            if cand and cand != norm_query and cand not in related:
                related.append(cand)
            if len(related) == 3:
                break
        return SearchResponse(query, self.entity_facts(query), previews, related)


class TokenBucket:
    """Thread-safe token bucket: ``rate`` tokens per second, bursts up to ``capacity``."""

    def __init__(self, rate: float = 8.0, capacity: float | None = None,
                 clock: Callable[[], float] = time.monotonic, sleep: Callable[[float], None] = time.sleep):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = capacity if capacity is not None else rate
        self.tokens = self.capacity
        self.clock = clock
        self.sleep = sleep
        self.updated = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                wait = (1 - self.tokens) / self.rate
            self.sleep(wait)


class SerpApiSearch:
    """Client for a Serper-style Google SERP API (POST JSON, ``X-API-KEY`` header)."""

    def __init__(self, api_key: str | None = None, endpoint: str | None = None,
                 client: httpx.Client | None = None, limiter: TokenBucket | None = None,
                 timeout: float = 30.0):
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_SERP_KEY, "")
        self.endpoint = endpoint or os.environ.get(ENV_SERP_URL, "https://google.serper.dev/search")
        self.client = client or httpx.Client(timeout=timeout)
        self.limiter = limiter or TokenBucket(8.0)

    def search(self, query: str, k: int) -> SearchResponse:
        if not self.api_key:
            raise RuntimeError(f"{ENV_SERP_KEY} is not set")
        self.limiter.acquire()
        resp = self.client.post(self.endpoint, json={"q": query, "num": k},
                                headers={"X-API-KEY": self.api_key})
        resp.raise_for_status()
        return self.from_json(query, resp.json(), k)

    @staticmethod
    def from_json(query: str, data: dict, k: int) -> SearchResponse:
        facts = []
        kg = data.get("knowledgeGraph")
        if kg and kg.get("title"):
            attrs = {str(a): str(v) for a, v in (kg.get("attributes") or {}).items()}
            facts.append(EntityFact(kg["title"], kg.get("description", ""), attrs))
        previews = []
        for item in data.get("organic", [])[:k]:
            if item.get("link"):
                previews.append(SearchPreview(item.get("title", ""), item["link"], item.get("snippet", ""),
                                              len(previews) + 1))
        related = [r["query"] for r in data.get("relatedSearches", []) if r.get("query")]
        return SearchResponse(query, facts, previews, related)


def web_search(query: str, k: int, backend: SearchBackend) -> SearchResponse:
    """Run one search; failures are reported in ``error`` instead of raised."""
    if not query or not query.strip():
        return SearchResponse.failed(query, "empty query")
    if k < 1:
        return SearchResponse.failed(query, "k must be >= 1")
    try:
        resp = backend.search(query, k)
    except Exception as exc:  # noqa: BLE001 - any backend failure becomes data
        logger.info("search failed for %r: %s", query, exc)
        return SearchResponse.failed(query, f"search failed: {exc}")
    if len(resp.previews) > k:
        previews = [SearchPreview(p.title, p.url, p.snippet, i) for i, p in enumerate(resp.previews[:k], 1)]
        resp = SearchResponse(resp.query, resp.entity_facts, previews, resp.related_queries)
    return resp
