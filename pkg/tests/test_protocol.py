import random

import pytest
from hypothesis import given, strategies as st

from planexec.protocol import (
    ESCAPE,
    Continue,
    Delegate,
    FinalResult,
    Finalize,
    RunScript,
    Tag,
    extract_blocks,
    parse_executor_turn,
    parse_planner_turn,
    strip_reasoning,
    truncate_after_code,
    wrap_block,
)


def test_extract_empty():
    assert extract_blocks("", Tag.TASK) == []


def test_extract_single_block():
    blocks = extract_blocks("a<task>find X</task>b", Tag.TASK)
    assert [b.content for b in blocks] == ["find X"]
    assert blocks[0].span == (1, len("a<task>find X</task>"))


def test_two_code_blocks_and_unclosed_task():
    text = "<code>a</code> mid <task>never closed <code>\nb\n</code>"
    assert [b.content for b in extract_blocks(text, Tag.CODE)] == ["a", "b"]
    assert extract_blocks(text, Tag.TASK) == []


def test_outermost_open_wins():
    text = "<task>x <task>y</task> z</task>"
    assert [b.content for b in extract_blocks(text, Tag.TASK)] == ["x <task>y"]


def test_only_one_newline_trimmed():
    assert extract_blocks("<result>\n\nhi\n\n</result>", Tag.RESULT)[0].content == "\nhi\n"


def test_wrap_result():
    assert wrap_block(Tag.RESULT, "done") == "<result>\ndone\n</result>"


def test_wrap_empty_round_trips():
    assert [b.content for b in extract_blocks(wrap_block(Tag.EXECUTION_RESULTS, ""), Tag.EXECUTION_RESULTS)] == [""]


def test_embedded_close_tag_is_escaped():
    content = 'print("</code>")\n</code>'
    wrapped = wrap_block(Tag.CODE, content)
    assert ESCAPE + "</code>" in wrapped
    assert [b.content for b in extract_blocks(wrapped, Tag.CODE)] == [content]


def _scan_oracle(text, tag):
    """Regex-free scanner: walk every position, first unescaped close after each open."""
    out, i = [], 0
    o, c = f"<{tag.value}>", f"</{tag.value}>"
    while i < len(text):
        if text[i:i + len(o)] == o:
            j = i + len(o)
            while j < len(text):
                if text[j:j + len(c)] == c and text[max(0, j - len(ESCAPE)):j] != ESCAPE:
                    break
                j += 1
            if j >= len(text):
                break
            raw = text[i + len(o):j]
            raw = raw[1:] if raw.startswith("\n") else raw
            raw = raw[:-1] if raw.endswith("\n") else raw
            out.append(raw.replace(ESCAPE + c, c))
            i = j + len(c)
        else:
            i += 1
    return out


def test_extract_matches_scanner_oracle():
    rng = random.Random(3)
    pieces = ["<code>", "</code>", "<task>", "</task>", "a", "b", "\n", " ", "<", ">", "/"]
    for _ in range(2000):
        text = "".join(rng.choice(pieces) for _ in range(rng.randint(0, 30)))
        for tag in (Tag.CODE, Tag.TASK):
            assert [b.content for b in extract_blocks(text, tag)] == _scan_oracle(text, tag)


@given(st.sampled_from(list(Tag)), st.text())
def test_round_trip_property(tag, content):
    assert [b.content for b in extract_blocks(wrap_block(tag, content), tag)] == [content]


def test_blocks_in_increasing_span_order():
    text = "".join(wrap_block(Tag.CODE, str(i)) + " x " for i in range(5))
    spans = [b.span for b in extract_blocks(text, Tag.CODE)]
    assert spans == sorted(spans) and all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))


def test_planner_delegate():
    assert parse_planner_turn("thinking <task>verify author list</task> ok") == Delegate("verify author list")


def test_planner_first_task_only():
    assert parse_planner_turn("<task>one</task><task>two</task>") == Delegate("one")


def test_planner_finalize():
    assert parse_planner_turn("FINAL ANSWER: Paris\nCONFIDENCE: 0.9") == Finalize("Paris", 0.9)


def test_planner_continue():
    assert parse_planner_turn("let me think more…") == Continue()


@pytest.mark.parametrize("text,conf", [
    ("FINAL ANSWER: x\nCONFIDENCE: 85%", 0.85),
    ("FINAL ANSWER: x\nCONFIDENCE: 7", 1.0),
    ("FINAL ANSWER: x\nconfidence: -0.5", 0.0),
    ("FINAL ANSWER: x\nCONFIDENCE: high", 0.0),
    ("FINAL ANSWER: x", 0.0),
])
def test_planner_confidence_clamped(text, conf):
    action = parse_planner_turn(text)
    assert isinstance(action, Finalize)
    assert action.answer == "x" and action.confidence == conf


def test_custom_answer_marker():
    assert parse_planner_turn("Answer => Rome\nCONFIDENCE: 0.5", "Answer =>") == Finalize("Rome", 0.5)


def test_empty_task_block_is_not_delegate():
    assert parse_planner_turn("<task>  </task>") == Continue()


def test_executor_run_script():
    assert parse_executor_turn('…<code>r = web_search("EMNLP 2021")</code>') == RunScript('r = web_search("EMNLP 2021")')


def test_executor_first_code_only():
    assert parse_executor_turn("<code>a</code><code>b</code>") == RunScript("a")


def test_executor_final_result():
    assert parse_executor_turn("The answer is page 4.") == FinalResult("The answer is page 4.")


def test_reasoning_preamble_removed():
    assert strip_reasoning("<think>hmm</think>\nAnswer: 4") == "Answer: 4"
    assert parse_executor_turn("<think>x</think>done") == FinalResult("done")


def test_truncate_after_code_drops_trailing_prose():
    text = "plan\n<code>\nx = 1\n</code>\n<execution_results>\nfake\n</execution_results>"
    assert truncate_after_code(text) == "plan\n<code>\nx = 1\n</code>"


@given(st.text())
def test_parsers_never_raise(text):
    parse_planner_turn(text)
    parse_executor_turn(text)
    for tag in Tag:
        extract_blocks(text, tag)
