import threading
import time

import pytest

from planexec.primitives import (
    KeywordSet,
    LLMConditionEvaluator,
    LLMExpander,
    PredicateError,
    PredicateEvaluator,
    RuleExpander,
    batch_search,
    check_condition,
    format_predicate,
    generate_keywords,
    parse_predicate,
)
from planexec.llm import ScriptedBackend
from planexec.tools import SearchPreview, SearchResponse, SimulatedSearch
from predgen import cases, oracle


class ListExpander:
    def __init__(self, items):
        self.items = items

    def expand(self, seed, limit):
        return self.items[:limit]


class BrokenExpander:
    def expand(self, seed, limit):
        raise RuntimeError("backend down")


def test_rule_expansion_order():
    ks = generate_keywords("emnlp 2020 best paper", RuleExpander())
    assert ks.variants[:3] == ("emnlp 2020 best paper", '"emnlp 2020 best paper"',
                               "emnlp 2020 best paper site:wikipedia.org")
    assert "emnlp 2020 top paper" in ks.variants
    assert "emnlp 2020 best article" in ks.variants
    assert not ks.degraded


def test_empty_expansion_gives_seed_only():
    ks = generate_keywords("seed", ListExpander([]))
    assert ks.variants == ("seed",) and ks.degraded


def test_backend_failure_degrades():
    ks = generate_keywords("seed", BrokenExpander())
    assert ks.variants == ("seed",) and ks.degraded


def test_max_variants_cap():
    ks = generate_keywords("s", ListExpander([f"v{i}" for i in range(10)]), max_variants=3)
    assert ks.variants == ("s", "v0", "v1")


def test_duplicates_removed_in_order():
    ks = generate_keywords("s", ListExpander(["a", "s", "a", "b", " "]))
    assert ks.variants == ("s", "a", "b")


def test_keyword_set_invariants():
    with pytest.raises(ValueError):
        KeywordSet("s", ("t",))
    with pytest.raises(ValueError):
        KeywordSet("s", ("s", "s"))
    with pytest.raises(ValueError):
        generate_keywords("  ", RuleExpander())


def test_llm_expander_parses_lines():
    backend = ScriptedBackend(["1. first\n- second\n\n  third  "])
    assert generate_keywords("seed", LLMExpander(backend)).variants == ("seed", "first", "second", "third")


class FakeSearch:
    def __init__(self, fail=(), delay=0.0):
        self.fail = set(fail)
        self.delay = delay
        self.active = 0
        self.peak = 0
        self.lock = threading.Lock()

    def search(self, query, k):
        with self.lock:
            self.active += 1
            self.peak = max(self.peak, self.active)
        try:
            time.sleep(self.delay)
            if query in self.fail:
                raise RuntimeError("quota")
            return SearchResponse(query, [], [SearchPreview(query, f"https://x/{query}", "", 1)])
        finally:
            with self.lock:
                self.active -= 1


def test_batch_alignment():
    out = batch_search(["a", "b", "c"], FakeSearch())
    assert [r.query for r in out] == ["a", "b", "c"]


def test_batch_failure_is_isolated():
    out = batch_search(list("abcde"), FakeSearch(fail={"c"}))
    assert len(out) == 5
    assert out[2].error and not out[2].previews
    assert all(r.error is None for i, r in enumerate(out) if i != 2)


def test_batch_respects_concurrency():
    backend = FakeSearch(delay=0.02)
    batch_search([str(i) for i in range(12)], backend, concurrency=3)
    assert 1 < backend.peak <= 3


def test_batch_preconditions():
    with pytest.raises(ValueError):
        batch_search([], FakeSearch())
    with pytest.raises(ValueError):
        batch_search(["a"], FakeSearch(), concurrency=0)


def test_batch_concurrency_transparent(corpus):
    search = SimulatedSearch(corpus.documents)
    queries = [f"{a} {b}" for a in ("researcher", "Lisbon", "prize") for b in ("studied", "born 1953", "award")]
    results = [[r.to_dict() for r in batch_search(queries, search, c, 5)] for c in (1, 4, 16)]
    assert results[0] == results[1] == results[2]


def test_check_condition_basic():
    verdicts = check_condition(["alpha beta", "gamma"], 'word "beta"', PredicateEvaluator())
    assert [v.value for v in verdicts] == [True, False]
    assert check_condition([], 'word "x"', PredicateEvaluator()) == []


def test_word_vs_contains():
    ev = PredicateEvaluator()
    assert ev.evaluate("the particle", 'contains "art"') is True
    assert ev.evaluate("the particle", 'word "art"') is False
    assert ev.evaluate("modern ART.", 'word "art"') is True


def test_undetermined_and_errors_are_false():
    class Undecided:
        def evaluate(self, page, condition):
            if page == "boom":
                raise RuntimeError("bad")
            return None

    verdicts = check_condition(["x", "boom"], "anything", Undecided())
    assert [v.value for v in verdicts] == [False, False]
    assert verdicts[0].rationale == "undetermined"
    assert verdicts[1].rationale.startswith("evaluator error")


def test_malformed_predicate_is_false_not_fatal():
    verdicts = check_condition(["a"], 'contains "a" AND (', PredicateEvaluator())
    assert verdicts[0].value is False and "evaluator error" in verdicts[0].rationale


@pytest.mark.parametrize("text", ['contains "a" AND', "(", 'word x', "", 'contains "a" "b"'])
def test_predicate_syntax_errors(text):
    with pytest.raises(PredicateError):
        parse_predicate(text)


def test_predicate_precedence():
    assert parse_predicate('"a" OR "b" AND NOT "c"') == (
        "or", [("contains", "a"), ("and", [("contains", "b"), ("not", ("contains", "c"))])])


def test_format_predicate_round_trip():
    for _, text, _ in cases(200, seed=11):
        node = parse_predicate(text)
        assert parse_predicate(format_predicate(node)) == node


def test_matches_scan_oracle():
    ev = PredicateEvaluator()
    for page, text, tree in cases(300, seed=2):
        assert check_condition([page], text, ev)[0].value == oracle(tree, page), (page, text)


def test_fifty_pages_year_and_place():
    import random

    rng = random.Random(9)
    words = ["2018", "2019", "Dartmouth", "Oberlin", "study", "at", "in"]
    pages = [" ".join(rng.choice(words) for _ in range(6)) for _ in range(50)]
    got = [v.value for v in check_condition(pages, 'word "2018" AND contains "Dartmouth"', PredicateEvaluator())]
    assert got == [("2018" in p.split()) and ("dartmouth" in p.lower()) for p in pages]


def test_llm_condition_evaluator():
    backend = ScriptedBackend(["TRUE", "false.", "UNDETERMINED", ""])
    verdicts = check_condition(["p1", "p2", "p3", "p4"], "mentions a prize", LLMConditionEvaluator(backend))
    assert [v.value for v in verdicts] == [True, False, False, False]
