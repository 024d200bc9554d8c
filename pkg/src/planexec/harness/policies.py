"""Rule-scripted planner and executor policies for the synthetic corpus.

They stand in for LLMs in closed-world runs: each is a pure function of the
message list, so runs are deterministic and can be recorded to cassettes.
The executor writes real scripts that go through the sandbox and tools; it
only reads back what those scripts print.
"""
from __future__ import annotations

import json
import re

from ..corpus import Constraint, parse_constraints
from ..llm import PolicyBackend, Role
from ..protocol import Tag, extract_blocks

FIND_PREFIX = "Find the researcher who satisfies all of the following:"
VERIFY_RE = re.compile(r"Verify that the researcher named (.+?) satisfies all of the following:")
NO_CANDIDATE = "no candidate found"
MAX_PAGES = 15


def _lit(value: str) -> str:
    return json.dumps(value, ensure_ascii=False)


def _list(values) -> str:
    return "[" + ", ".join(_lit(v) for v in values) + "]"


def _predicate(cons: list[Constraint], extra: str | None = None) -> str:
    atoms = [f'word {_lit(c.value)}' for c in cons]
    if extra:
        atoms.append(f'word {_lit(extra)}')
    return " AND ".join(atoms)


def _last_block(messages, tag: Tag) -> str | None:
    for msg in reversed(messages):
        if msg.role is Role.USER:
            blocks = extract_blocks(msg.content, tag)
            if blocks:
                return blocks[-1].content
    return None


def _constraint_list(cons: list[Constraint]) -> str:
    return "; ".join(c.phrase for c in cons)


# --- planner ----------------------------------------------------------------------

def planner_policy(messages) -> str:
    question = messages[1].content.split("\n\nNotes from earlier attempts", 1)[0]
    cons = parse_constraints(question)
    results = [extract_blocks(m.content, Tag.RESULT) for m in messages[2:] if m.role is Role.USER]
    results = [b[-1].content.strip() for b in results if b]
    if not cons:
        return "I cannot identify any checkable constraint.\nFINAL ANSWER: unknown\nCONFIDENCE: 0.0"
    if not results:
        return ("Several constraints must hold at once, so I first look for candidates.\n"
                f"<task>\n{FIND_PREFIX} {_constraint_list(cons)}. Reply with the name only.\n</task>")
    if len(results) == 1:
        name = results[0].splitlines()[0].strip()
        if not name or name == NO_CANDIDATE:
            return "The search found no candidate.\nFINAL ANSWER: unknown\nCONFIDENCE: 0.1"
        return (f"The executor proposes {name}. I verify the constraints on the profile before answering.\n"
                f"<task>\nVerify that the researcher named {name} satisfies all of the following: "
                f"{_constraint_list(cons)}. Reply VERIFIED or REJECTED followed by the name.\n</task>")
    verdict = results[-1].split()
    name = " ".join(verdict[1:]) if len(verdict) > 1 else "unknown"
    confidence = 0.9 if verdict and verdict[0] == "VERIFIED" else 0.3
    return f"Verification finished.\nFINAL ANSWER: {name}\nCONFIDENCE: {confidence}"


# --- executor ---------------------------------------------------------------------

def _find_script(cons: list[Constraint], primitives: bool) -> str:
    joint = " ".join(c.phrase for c in cons)
    if primitives:
        return f"""constraints = {_list(c.phrase for c in cons)}
queries = generate_keywords({_lit(joint)})
for c in constraints {{
  for q in generate_keywords(c) {{
    append(queries, q)
  }}
}}
results = batch_search(queries, 10)
urls = []
for r in results {{
  for p in r["previews"] {{
    if contains(p["url"], "wikipedia.org") and not (p["url"] in urls) {{
      append(urls, p["url"])
    }}
  }}
}}
pages = []
for u in urls[:{MAX_PAGES}] {{
  append(pages, parse_page(u, {_lit(joint)}))
}}
ok = check_condition(pages, {_lit(_predicate(cons))})
for i in range(len(pages)) {{
  if ok[i] {{
    print("MATCH", pages[i]["title"])
  }}
}}
print("checked", len(pages), "profiles from", len(queries), "queries")
"""
    checks = " and ".join(f"contains(text, {_lit(c.value)})" for c in cons)
    return f"""r = web_search({_lit(joint)}, 10)
for p in r["previews"] {{
  if contains(p["url"], "wikipedia.org") {{
    page = parse_page(p["url"], {_lit(joint)})
    text = page["main_content"]
    if {checks} {{
      print("MATCH", page["title"])
    }}
  }}
}}
"""


def _verify_script(name: str, cons: list[Constraint], primitives: bool) -> str:
    if primitives:
        return f"""name = {_lit(name)}
hits = batch_search(generate_keywords(name), 5)
pages = []
seen = []
for r in hits {{
  for p in r["previews"] {{
    if p["title"] == name and not (p["url"] in seen) {{
      append(seen, p["url"])
      append(pages, parse_page(p["url"], name))
    }}
  }}
}}
ok = check_condition(pages, {_lit(_predicate(cons, name))})
if len(pages) > 0 and ok[0] {{
  print("VERIFIED", name)
}} else {{
  print("REJECTED", name)
}}
"""
    checks = " and ".join(f"contains(text, {_lit(c.value)})" for c in cons)
    return f"""name = {_lit(name)}
r = web_search(name, 5)
verdict = "REJECTED"
for p in r["previews"] {{
  if p["title"] == name and verdict == "REJECTED" {{
    text = parse_page(p["url"], name)["main_content"]
    if {checks} {{
      verdict = "VERIFIED"
    }}
  }}
}}
print(verdict, name)
"""


def executor_policy(messages) -> str:
    primitives = "\n- batch_search(" in messages[0].content
    sub_task = messages[1].content
    output = _last_block(messages, Tag.EXECUTION_RESULTS)
    verify = VERIFY_RE.search(sub_task)
    if output is None:
        cons = parse_constraints(sub_task)
        if not cons:
            return NO_CANDIDATE
        if verify:
            script = _verify_script(verify.group(1), cons, primitives)
        else:
            script = _find_script(cons, primitives)
        return f"I will gather the evidence with one script.\n<code>\n{script}</code>"
    if verify:
        for line in output.splitlines():
            if line.startswith(("VERIFIED ", "REJECTED ")):
                return line.strip()
        return f"REJECTED {verify.group(1)}"
    matches = [line[len("MATCH "):].strip() for line in output.splitlines() if line.startswith("MATCH ")]
    return matches[0] if matches else NO_CANDIDATE


def policy_backends() -> tuple[PolicyBackend, PolicyBackend]:
    """(planner, executor) completion backends driven by the rule policies."""
    return PolicyBackend(planner_policy), PolicyBackend(executor_policy)


__all__ = ["FIND_PREFIX", "NO_CANDIDATE", "executor_policy", "planner_policy", "policy_backends"]
