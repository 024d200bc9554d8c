"""Web search and web parse tools with live and simulated backends."""
from .extract import extract
from .parse import (
    HttpFetcher,
    KeywordRelevance,
    LLMRelevance,
    PageFetcher,
    StaticFetcher,
    is_paper,
    parse_general,
    parse_paper,
)
from .search import SerpApiSearch, SimulatedSearch, TokenBucket, web_search
from .types import (
    EntityFact,
    FetchError,
    FetchResult,
    ParsedPage,
    ParseStrategy,
    SearchPreview,
    SearchResponse,
)

__all__ = [
    "EntityFact", "FetchError", "FetchResult", "HttpFetcher", "KeywordRelevance", "LLMRelevance",
    "PageFetcher", "ParsedPage", "ParseStrategy", "SearchPreview", "SearchResponse", "SerpApiSearch",
    "SimulatedSearch", "StaticFetcher", "TokenBucket", "extract", "is_paper", "parse_general",
    "parse_paper", "web_search",
]
