from __future__ import annotations

import enum
from dataclasses import dataclass, field


@dataclass(frozen=True)
class EntityFact:
    name: str
    description: str = ""
    attributes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.name:
            raise ValueError("entity name must be non-empty")

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description, "attributes": dict(self.attributes)}


@dataclass(frozen=True)
class SearchPreview:
    title: str
    url: str
    snippet: str
    rank: int

    def to_dict(self) -> dict:
        return {"title": self.title, "url": self.url, "snippet": self.snippet, "rank": self.rank}


@dataclass(frozen=True)
class SearchResponse:
    query: str
    entity_facts: list[EntityFact] = field(default_factory=list)
    previews: list[SearchPreview] = field(default_factory=list)
    related_queries: list[str] = field(default_factory=list)
    error: str | None = None

    def __post_init__(self):
        if self.error is not None and (self.entity_facts or self.previews or self.related_queries):
            raise ValueError("a failed search response carries no results")
        ranks = [p.rank for p in self.previews]
        if ranks != list(range(1, len(ranks) + 1)):
            raise ValueError(f"preview ranks must be 1..k without gaps, got {ranks}")

    @classmethod
    def failed(cls, query: str, error: str) -> "SearchResponse":
        return cls(query=query, error=error)

    def urls(self) -> list[str]:
        return [p.url for p in self.previews]

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "entity_facts": [e.to_dict() for e in self.entity_facts],
            "previews": [p.to_dict() for p in self.previews],
            "related_queries": list(self.related_queries),
            "error": self.error,
        }


class ParseStrategy(str, enum.Enum):
    GENERAL = "general"
    PAPER_HTML = "paper_html"
    PAPER_PDF = "paper_pdf"


@dataclass(frozen=True)
class ParsedPage:
    url: str
    main_content: str
    relevant_sections: list[tuple[str, str]] = field(default_factory=list)
    sublinks: list[tuple[str, str]] = field(default_factory=list)
    strategy: ParseStrategy = ParseStrategy.GENERAL
    title: str = ""
    error: str | None = None
    # (strategy, outcome) for every route tried, in order
    attempts: list[tuple[str, str]] = field(default_factory=list)
    used_fallback: bool = False

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "title": self.title,
            "main_content": self.main_content,
            "relevant_sections": [[h, e] for h, e in self.relevant_sections],
            "sublinks": [[u, d] for u, d in self.sublinks],
            "strategy": self.strategy.value,
            "error": self.error,
        }


@dataclass(frozen=True)
class FetchResult:
    status: int
    content_type: str
    body: bytes

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300

    def text(self) -> str:
        return self.body.decode("utf-8", errors="replace")


class FetchError(RuntimeError):
    pass
