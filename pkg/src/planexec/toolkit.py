"""Binds tool and primitive backends into sandbox builtins.

Every tool builtin reserves its calls against the per-execution budget
before doing any work and records one :class:`ToolCallRecord` per
underlying operation (``batch_search`` records one per query).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ScriptTypeError
from .primitives import (
    DEFAULT_CONCURRENCY,
    DEFAULT_MAX_VARIANTS,
    ConditionEvaluator,
    KeywordExpander,
    PredicateEvaluator,
    RuleExpander,
    batch_search,
    check_condition,
    generate_keywords,
)
from .sandbox.builtins import Builtin, BuiltinRegistry, check_tool_arg
from .tools.parse import KeywordRelevance, PageFetcher, RelevanceBackend, is_paper, parse_general, parse_paper
from .tools.search import SearchBackend, web_search

PRIMITIVE_NAMES = ("generate_keywords", "batch_search", "check_condition")
TOOL_NAMES = ("web_search", "parse_page")


@dataclass
class Toolkit:
    search: SearchBackend
    fetcher: PageFetcher
    expander: KeywordExpander = field(default_factory=RuleExpander)
    evaluator: ConditionEvaluator = field(default_factory=PredicateEvaluator)
    relevance: RelevanceBackend = field(default_factory=KeywordRelevance)
    concurrency: int = DEFAULT_CONCURRENCY
    default_k: int = 5
    max_variants: int = DEFAULT_MAX_VARIANTS
    primitives: bool = True

    # builtin implementations: fn(ctx, *args)
    def _web_search(self, ctx, query, k=None):
        check_tool_arg("web_search", query, str, "query")
        k = self.default_k if k is None else k
        check_tool_arg("web_search", k, int, "k")
        ctx.reserve(1)
        resp = web_search(query, k, self.search)
        ctx.record("web_search", (query, k), resp.urls(), {"error": resp.error} if resp.error else None)
        return resp.to_dict()

    def _parse_page(self, ctx, url, query=""):
        check_tool_arg("parse_page", url, str, "url")
        check_tool_arg("parse_page", query, str, "query")
        ctx.reserve(1)
        if is_paper(url):
            page = parse_paper(url, query, self.fetcher)
        else:
            page = parse_general(url, query, self.fetcher, self.relevance)
        detail = {"strategy": page.strategy.value, "attempts": [list(a) for a in page.attempts]}
        if page.used_fallback:
            detail["fallback"] = True
        if page.error:
            detail["error"] = page.error
        ctx.record("parse_page", (url, query), [page.url], detail)
        return page.to_dict()

    def _generate_keywords(self, ctx, seed, max_variants=None):
        check_tool_arg("generate_keywords", seed, str, "seed")
        n = self.max_variants if max_variants is None else max_variants
        check_tool_arg("generate_keywords", n, int, "max_variants")
        if not seed.strip():
            raise ScriptTypeError("generate_keywords() seed must be non-empty")
        ctx.reserve(1)
        ks = generate_keywords(seed, self.expander, max(1, n))
        ctx.record("generate_keywords", (seed, n), (), {"degraded": True} if ks.degraded else None)
        return list(ks.variants)

    def _batch_search(self, ctx, keywords, k=None):
        check_tool_arg("batch_search", keywords, list, "keywords")
        if not keywords:
            raise ScriptTypeError("batch_search() needs at least one keyword")
        for q in keywords:
            check_tool_arg("batch_search", q, str, "keywords item")
        k = self.default_k if k is None else k
        check_tool_arg("batch_search", k, int, "k")
        ctx.reserve(len(keywords))
        results = batch_search(keywords, self.search, self.concurrency, k)
        for q, resp in zip(keywords, results):
            ctx.record("batch_search", (q, k), resp.urls(), {"error": resp.error} if resp.error else None)
        return [r.to_dict() for r in results]

    def _check_condition(self, ctx, pages, condition):
        check_tool_arg("check_condition", pages, list, "pages")
        check_tool_arg("check_condition", condition, str, "condition")
        texts = []
        for p in pages:
            if isinstance(p, dict):
                p = p.get("main_content", "")
            check_tool_arg("check_condition", p, str, "pages item")
            texts.append(p)
        ctx.reserve(1)
        verdicts = check_condition(texts, condition, self.evaluator)
        ctx.record("check_condition", (condition, len(texts)), ())
        return [v.value for v in verdicts]

    def registry(self) -> BuiltinRegistry:
        reg = BuiltinRegistry([
            Builtin("web_search", self._web_search, "web_search(query[, k]) -> map",
                    "search the web; map has query, entity_facts, previews (title, url, snippet, rank), "
                    "related_queries, error", tool=True, min_args=1, max_args=2),
            Builtin("parse_page", self._parse_page, "parse_page(url[, query]) -> map",
                    "fetch and parse a page or paper; map has url, title, main_content, "
                    "relevant_sections ([heading, excerpt]), sublinks ([url, description]), strategy, error",
                    tool=True, min_args=1, max_args=2),
        ])
        if self.primitives:
            reg.register(Builtin("generate_keywords", self._generate_keywords,
                                 "generate_keywords(seed[, max_variants]) -> list",
                                 "seed query plus expanded variants (quoted, site-restricted, synonyms)",
                                 tool=True, min_args=1, max_args=2))
            reg.register(Builtin("batch_search", self._batch_search, "batch_search(keywords[, k]) -> list",
                                 "run web_search for every keyword in parallel; results align with keywords",
                                 tool=True, min_args=1, max_args=2))
            reg.register(Builtin("check_condition", self._check_condition,
                                 "check_condition(pages, condition) -> list",
                                 "one bool per page (string or parse_page map); false when not satisfied "
                                 "or undetermined", tool=True, min_args=2, max_args=2))
        return reg
