"""Web parse tool: general pages and scientific papers."""
from __future__ import annotations

import io
import logging
import re
from typing import Protocol, Sequence

import httpx

from ..text import content_tokens, overlap
from .extract import collapse, extract
from .search import TokenBucket
from .types import FetchError, FetchResult, ParsedPage, ParseStrategy

logger = logging.getLogger(__name__)

USER_AGENT = "planexec/0.1 (research agent; GET only)"
MIN_HTML_BYTES = 1024
MAX_SECTIONS = 3
MAX_PASSAGES = 5
EXCERPT_CHARS = 300

_ARXIV_NEW = re.compile(r"(\d{4}\.\d{4,5}(?:v\d+)?)")
_ARXIV_OLD = re.compile(r"([a-z\-]+(?:\.[A-Z]{2})?/\d{7}(?:v\d+)?)")


class PageFetcher(Protocol):
    def fetch(self, url: str) -> FetchResult:
        ...


class RelevanceBackend(Protocol):
    def select(self, query: str, sections: Sequence[tuple[str, str]], limit: int) -> list[int]:
        ...


class HttpFetcher:
    """GET-only fetcher with a fixed user agent and a shared rate limiter."""

    def __init__(self, client: httpx.Client | None = None, limiter: TokenBucket | None = None,
                 timeout: float = 30.0):
        self.client = client or httpx.Client(timeout=timeout, follow_redirects=True,
                                             headers={"User-Agent": USER_AGENT})
        self.limiter = limiter or TokenBucket(8.0)

    def fetch(self, url: str) -> FetchResult:
        self.limiter.acquire()
        try:
            resp = self.client.get(url)
        except httpx.HTTPError as exc:
            raise FetchError(str(exc)) from exc
        return FetchResult(resp.status_code, resp.headers.get("content-type", ""), resp.content)


class StaticFetcher:
    """Serves a fixed ``url -> FetchResult`` map; unknown URLs are 404."""

    def __init__(self, pages: dict[str, FetchResult]):
        self.pages = dict(pages)

    def fetch(self, url: str) -> FetchResult:
        return self.pages.get(url, FetchResult(404, "text/plain", b"not found"))


class KeywordRelevance:
    """Ranks sections by how many distinct query terms they contain."""

    def select(self, query, sections, limit):
        terms = content_tokens(query)
        scored = [(-overlap(terms, f"{h} {t}"), i) for i, (h, t) in enumerate(sections)]
        return [i for s, i in sorted(scored) if s < 0][:limit]


class LLMRelevance:
    """Asks a completion backend which numbered sections answer the query."""

    def __init__(self, backend, params=None):
        from ..llm import CompletionParams

        self.backend = backend
        self.params = params or CompletionParams(max_completion_tokens=256, temperature=0.0)

    def select(self, query, sections, limit):
        from ..llm import Message, Role, complete

        listing = "\n".join(f"[{i}] {h}: {t[:EXCERPT_CHARS]}" for i, (h, t) in enumerate(sections))
        messages = [
            Message(Role.SYSTEM, "You pick the passages that help answer a question. "
                                 "Reply with the bracketed numbers only, comma separated, best first."),
            Message(Role.USER, f"Question: {query}\n\nPassages:\n{listing}"),
        ]
        text, _ = complete(messages, self.params, self.backend)
        picks = []
        for m in re.findall(r"\d+", text):
            i = int(m)
            if i < len(sections) and i not in picks:
                picks.append(i)
        return picks[:limit]


def _select(sections, query, extractor, limit):
    if not sections:
        return []
    try:
        picks = extractor.select(query, sections, limit)
    except Exception as exc:  # noqa: BLE001
        logger.warning("relevance selection failed, using keyword overlap: %s", exc)
        picks = KeywordRelevance().select(query, sections, limit)
    return [(sections[i][0], sections[i][1][:EXCERPT_CHARS]) for i in picks]


def _fetch(fetcher: PageFetcher, url: str) -> tuple[FetchResult | None, str | None]:
    try:
        res = fetcher.fetch(url)
    except Exception as exc:  # noqa: BLE001
        return None, f"fetch failed: {exc}"
    if not res.ok:
        return None, f"fetch failed: HTTP {res.status}"
    return res, None


def parse_general(url: str, query: str, fetcher: PageFetcher,
                  extractor: RelevanceBackend | None = None) -> ParsedPage:
    extractor = extractor or KeywordRelevance()
    res, err = _fetch(fetcher, url)
    if res is None:
        return ParsedPage(url, "", strategy=ParseStrategy.GENERAL, error=err,
                          attempts=[(ParseStrategy.GENERAL.value, err)])
    if "html" not in res.content_type.lower() and not res.body.lstrip()[:1] == b"<":
        text = res.text().strip()
        sections = [("", p) for p in _paragraphs(text)]
        return ParsedPage(url, text, _select(sections, query, extractor, MAX_SECTIONS), [],
                          ParseStrategy.GENERAL, attempts=[(ParseStrategy.GENERAL.value, "ok")])
    ex = extract(res.text(), url)
    return ParsedPage(
        url=url,
        main_content=ex.main_content,
        relevant_sections=_select(ex.sections, query, extractor, MAX_SECTIONS),
        sublinks=ex.sublinks,
        strategy=ParseStrategy.GENERAL,
        title=ex.title,
        attempts=[(ParseStrategy.GENERAL.value, "fallback" if ex.used_fallback else "ok")],
        used_fallback=ex.used_fallback,
    )


def arxiv_id(identifier: str) -> str | None:
    m = _ARXIV_NEW.search(identifier) or _ARXIV_OLD.search(identifier)
    return m.group(1) if m else None


def paper_routes(identifier: str) -> tuple[str, str]:
    """(HTML rendition URL, PDF URL) for an arXiv id or paper URL."""
    aid = arxiv_id(identifier)
    if aid is not None and ("arxiv" in identifier or identifier.strip() == aid):
        return f"https://ar5iv.labs.arxiv.org/html/{aid}", f"https://arxiv.org/pdf/{aid}"
    return identifier, identifier


def html_incomplete(res: FetchResult) -> str | None:
    if len(res.body) < MIN_HTML_BYTES:
        return f"incomplete HTML ({len(res.body)} bytes)"
    if b"<body" not in res.body.lower():
        return "incomplete HTML (no body element)"
    return None


def _paragraphs(text: str) -> list[str]:
    paras = [collapse(p) for p in re.split(r"\n\s*\n", text)]
    paras = [p for p in paras if p]
    if len(paras) <= 1:
        paras = [collapse(line) for line in text.splitlines() if line.strip()]
    return paras


def pdf_text(data: bytes) -> str:
    from pypdf import PdfReader

    reader = PdfReader(io.BytesIO(data))
    return "\n\n".join((page.extract_text() or "") for page in reader.pages)


def passages_for(text: str, query: str, limit: int = MAX_PASSAGES) -> list[tuple[str, str]]:
    """Paragraphs of ``text`` that share terms with ``query``, best first."""
    sections = [("", p) for p in _paragraphs(text)]
    return _select(sections, query, KeywordRelevance(), limit)


def parse_paper(identifier: str, query: str, fetcher: PageFetcher) -> ParsedPage:
    html_url, pdf_url = paper_routes(identifier)
    attempts = []
    res, err = _fetch(fetcher, html_url)
    if res is not None:
        err = html_incomplete(res)
    if err is None:
        ex = extract(res.text(), html_url)
        if ex.main_content:
            attempts.append((ParseStrategy.PAPER_HTML.value, "ok"))
            return ParsedPage(html_url, ex.main_content,
                              _select(ex.sections, query, KeywordRelevance(), MAX_PASSAGES),
                              ex.sublinks, ParseStrategy.PAPER_HTML, ex.title, attempts=attempts,
                              used_fallback=ex.used_fallback)
        err = "HTML rendition has no extractable text"
    attempts.append((ParseStrategy.PAPER_HTML.value, err))

    res, pdf_err = _fetch(fetcher, pdf_url)
    if res is not None:
        try:
            text = pdf_text(res.body)
        except Exception as exc:  # noqa: BLE001
            pdf_err = f"PDF extraction failed: {exc}"
        else:
            if text.strip():
                attempts.append((ParseStrategy.PAPER_PDF.value, "ok"))
                return ParsedPage(pdf_url, text, passages_for(text, query), [], ParseStrategy.PAPER_PDF,
                                  attempts=attempts)
            pdf_err = "PDF has no extractable text"
    attempts.append((ParseStrategy.PAPER_PDF.value, pdf_err))
    return ParsedPage(identifier, "", strategy=ParseStrategy.PAPER_PDF,
                      error=f"html route: {err}; pdf route: {pdf_err}", attempts=attempts)


def is_paper(url: str) -> bool:
    lowered = url.lower()
    if "arxiv.org" in lowered:
        return True
    return arxiv_id(url) is not None and url.strip() == arxiv_id(url)
