"""Synthetic closed-world web: entities, documents, multi-constraint tasks and answer judging.

Entities are fictional researchers with one value per attribute. Each
entity gets a profile page stating every attribute plus partial pages that
mention exactly one. A ``distractor_density`` fraction of entities are near
copies of another entity that differ in a single attribute, so questions
built from several constraints have near-miss candidates.

On disk a corpus is a directory::

    manifest.json        spec, seed, entities
    docs/000000.json     one SimDocument per file
"""
from __future__ import annotations

import itertools
import json
import random
import re
import unicodedata
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from html import escape
from importlib import resources
from pathlib import Path

from .tools.types import EntityFact, FetchResult

PROFILE_HOST = "https://en.wikipedia.org/wiki/"
NEWS_HOST = "https://news.sim.example/"


@lru_cache(maxsize=1)
def templates() -> dict:
    return json.loads(resources.files("planexec.data").joinpath("templates.json").read_text("utf-8"))


@dataclass(frozen=True)
class CorpusSpec:
    n_entities: int = 60
    docs_per_entity: int = 3
    distractor_density: float = 0.3
    see_also: int = 2

    def __post_init__(self):
        if self.n_entities < 1 or self.docs_per_entity < 1:
            raise ValueError("corpus sizes must be positive")
        if not 0.0 <= self.distractor_density < 1.0:
            raise ValueError("distractor_density must be in [0, 1)")


@dataclass(frozen=True)
class Entity:
    name: str
    attributes: dict
    near_copy_of: str | None = None


@dataclass(frozen=True)
class SimDocument:
    doc_id: int
    url: str
    title: str
    body: str
    outlinks: tuple[int, ...] = ()
    entity: EntityFact | None = None
    subject: str = ""

    def to_dict(self) -> dict:
        d = {"doc_id": self.doc_id, "url": self.url, "title": self.title, "body": self.body,
             "outlinks": list(self.outlinks), "subject": self.subject, "entity": None}
        if self.entity is not None:
            d["entity"] = self.entity.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimDocument":
        ent = d.get("entity")
        return cls(d["doc_id"], d["url"], d["title"], d["body"], tuple(d.get("outlinks", ())),
                   EntityFact(ent["name"], ent.get("description", ""), ent.get("attributes", {})) if ent else None,
                   d.get("subject", ""))


@dataclass
class Corpus:
    spec: CorpusSpec
    seed: int
    entities: list[Entity]
    documents: list[SimDocument]
    _by_url: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._by_url = {d.url: d for d in self.documents}
        if len(self._by_url) != len(self.documents):
            raise ValueError("document urls must be unique")
        ids = {d.doc_id for d in self.documents}
        for d in self.documents:
            if any(o not in ids for o in d.outlinks):
                raise ValueError(f"document {d.doc_id} has a dangling outlink")

    def by_url(self, url: str) -> SimDocument | None:
        return self._by_url.get(url)

    def by_id(self, doc_id: int) -> SimDocument:
        return self.documents[doc_id]

    def entity(self, name: str) -> Entity:
        for e in self.entities:
            if e.name == name:
                return e
        raise KeyError(name)


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_")


def build_corpus(spec: CorpusSpec, seed: int) -> Corpus:
    tpl = templates()
    rng = random.Random(seed)
    pool = [f"{a} {b}" for a, b in itertools.product(tpl["first_names"], tpl["last_names"])]
    if spec.n_entities > len(pool):
        raise ValueError(f"requested {spec.n_entities} entities but the name pool holds {len(pool)}")
    names = rng.sample(pool, spec.n_entities)
    attrs = tpl["attributes"]
    attr_names = list(attrs)

    n_near = round(spec.distractor_density * spec.n_entities)
    n_base = spec.n_entities - n_near
    entities: list[Entity] = []
    for name in names[:n_base]:
        entities.append(Entity(name, {a: rng.choice(attrs[a]["values"]) for a in attr_names}))
    for name in names[n_base:]:
        base = rng.choice(entities[:n_base])
        changed = rng.choice(attr_names)
        values = dict(base.attributes)
        values[changed] = rng.choice([v for v in attrs[changed]["values"] if v != values[changed]])
        entities.append(Entity(name, values, near_copy_of=base.name))

    # doc ids: profile of entity i is i; partial pages follow all profiles
    n = len(entities)
    per_partial = spec.docs_per_entity - 1
    docs: list[SimDocument] = []
    partial_ids = {i: [n + i * per_partial + j for j in range(per_partial)] for i in range(n)}
    for i, ent in enumerate(entities):
        order = list(attr_names)
        rng.shuffle(order)
        statements = [attrs[a]["statement"].format(name=ent.name, value=ent.attributes[a]) for a in order]
        others = [j for j in range(n) if j != i]
        see_also = sorted(rng.sample(others, min(spec.see_also, len(others))))
        body = " ".join([f"{ent.name} is a scientist."] + statements)
        fact = EntityFact(ent.name, f"researcher in {ent.attributes['field']}", dict(ent.attributes))
        docs.append(SimDocument(i, PROFILE_HOST + _slug(ent.name), ent.name, body,
                                tuple(partial_ids[i] + see_also), fact, ent.name))
    for i, ent in enumerate(entities):
        mention = list(attr_names)
        rng.shuffle(mention)
        for j, doc_id in enumerate(partial_ids[i]):
            a = mention[j % len(mention)]
            filler = rng.sample(tpl["filler"], 2)
            body = " ".join([filler[0], attrs[a]["statement"].format(name=ent.name, value=ent.attributes[a]),
                             filler[1]])
            title = tpl["partial_titles"][j % len(tpl["partial_titles"])].format(name=ent.name)
            docs.append(SimDocument(doc_id, f"{NEWS_HOST}{_slug(ent.name).lower()}-{j + 1}", title, body,
                                    (i,), None, ent.name))
    return Corpus(spec, seed, entities, docs)


def save_corpus(corpus: Corpus, directory: str | Path) -> Path:
    root = Path(directory)
    (root / "docs").mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": 1,
        "spec": asdict(corpus.spec),
        "seed": corpus.seed,
        "entities": [asdict(e) for e in corpus.entities],
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8")
    for doc in corpus.documents:
        (root / "docs" / f"{doc.doc_id:06d}.json").write_text(
            json.dumps(doc.to_dict(), sort_keys=True, ensure_ascii=False) + "\n", "utf-8")
    return root


def load_corpus(directory: str | Path) -> Corpus:
    root = Path(directory)
    manifest = json.loads((root / "manifest.json").read_text("utf-8"))
    docs = [SimDocument.from_dict(json.loads(p.read_text("utf-8")))
            for p in sorted((root / "docs").glob("*.json"))]
    entities = [Entity(e["name"], e["attributes"], e.get("near_copy_of")) for e in manifest["entities"]]
    return Corpus(CorpusSpec(**manifest["spec"]), manifest["seed"], entities, docs)


def render_html(doc: SimDocument, corpus: Corpus) -> str:
    """HTML for a corpus document: site chrome around an article with its outlinks."""
    sentences = re.split(r"(?<=\.)\s+", doc.body)
    paras = [" ".join(sentences[i:i + 2]) for i in range(0, len(sentences), 2)]
    links = "".join(
        f'<li><a href="{escape(corpus.by_id(o).url)}">{escape(corpus.by_id(o).title)}</a></li>'
        for o in doc.outlinks)
    body = "".join(f"<p>{escape(p)}</p>" for p in paras)
    return (
        "<!DOCTYPE html><html><head><meta charset=\"utf-8\">"
        f"<title>{escape(doc.title)}</title></head><body>"
        '<header><nav><a href="https://sim.example/">Home</a> <a href="https://sim.example/random">'
        "Random page</a></nav></header>"
        f"<main><article><h1>{escape(doc.title)}</h1>{body}"
        f"<h2>Related pages</h2><ul>{links}</ul></article></main>"
        '<footer><p>Simulated corpus page. <a href="https://sim.example/terms">Terms</a></p></footer>'
        "</body></html>"
    )


class CorpusFetcher:
    """Page fetcher serving the rendered corpus; unknown URLs are 404."""

    def __init__(self, corpus: Corpus):
        self.corpus = corpus

    def fetch(self, url: str) -> FetchResult:
        doc = self.corpus.by_url(url)
        if doc is None:
            return FetchResult(404, "text/html", b"<html><body>Not found</body></html>")
        return FetchResult(200, "text/html; charset=utf-8", render_html(doc, self.corpus).encode("utf-8"))


# --- tasks ------------------------------------------------------------------------

@dataclass(frozen=True)
class Constraint:
    attribute: str
    value: str
    phrase: str


@dataclass(frozen=True)
class SyntheticTask:
    question: str
    gold_answer: str
    constraint_count: int
    supporting_doc_ids: tuple[int, ...]
    seed: int
    constraints: tuple[Constraint, ...] = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.constraint_count < 2:
            raise ValueError("constraint_count must be >= 2")

    def to_json(self) -> str:
        return json.dumps({
            "question": self.question,
            "gold": self.gold_answer,
            "seed": self.seed,
            "metadata": {
                **self.metadata,
                "constraint_count": self.constraint_count,
                "supporting_doc_ids": list(self.supporting_doc_ids),
                "constraints": [asdict(c) for c in self.constraints],
            },
        }, sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "SyntheticTask":
        d = json.loads(line)
        meta = dict(d.get("metadata", {}))
        count = meta.pop("constraint_count")
        support = tuple(meta.pop("supporting_doc_ids", ()))
        cons = tuple(Constraint(**c) for c in meta.pop("constraints", ()))
        return cls(d["question"], d["gold"], count, support, d["seed"], cons, meta)


def satisfiers(corpus: Corpus, constraints) -> list[Entity]:
    """Exhaustive scan: every entity matching all ``(attribute, value)`` constraints."""
    return [e for e in corpus.entities if all(e.attributes.get(c.attribute) == c.value for c in constraints)]


def _join_phrases(phrases: list[str]) -> str:
    if len(phrases) == 2:
        return f"{phrases[0]} and {phrases[1]}"
    return ", ".join(phrases[:-1]) + f", and {phrases[-1]}"


def generate_task(corpus: Corpus, constraint_count: int, seed: int, max_tries: int = 500) -> SyntheticTask:
    if constraint_count < 2:
        raise ValueError("constraint_count must be >= 2")
    attrs = templates()["attributes"]
    if constraint_count > len(attrs):
        raise ValueError(f"constraint_count may be at most {len(attrs)}")
    rng = random.Random(seed)
    names = list(attrs)
    for _ in range(max_tries):
        target = rng.choice(corpus.entities)
        chosen = sorted(rng.sample(names, constraint_count), key=names.index)
        cons = tuple(
            Constraint(a, target.attributes[a], rng.choice(attrs[a]["constraints"]).format(value=target.attributes[a]))
            for a in chosen)
        if len(satisfiers(corpus, cons)) != 1:
            continue
        near = sum(1 for e in corpus.entities
                   if sum(e.attributes.get(c.attribute) == c.value for c in cons) == constraint_count - 1)
        order = list(cons)
        rng.shuffle(order)
        question = rng.choice(templates()["question_templates"]).format(
            constraints=_join_phrases([c.phrase for c in order]))
        profile = next(d.doc_id for d in corpus.documents if d.entity is not None and d.entity.name == target.name)
        support = [profile] + [
            d.doc_id for d in corpus.documents
            if d.entity is None and d.subject == target.name and any(c.value in d.body for c in cons)]
        return SyntheticTask(question, target.name, constraint_count, tuple(support), seed, tuple(order),
                             {"near_misses": near, "distractor_fraction": round(near / len(corpus.entities), 4)})
    raise ValueError(f"no uniquely answerable task found after {max_tries} tries")


def save_tasks(tasks, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in tasks:
            fh.write(t.to_json() + "\n")


def load_tasks(path: str | Path) -> list[SyntheticTask]:
    with open(path, encoding="utf-8") as fh:
        return [SyntheticTask.from_json(line) for line in fh if line.strip()]


def parse_constraints(text: str) -> list[Constraint]:
    """Recover template constraints mentioned in ``text`` (used by the rule-scripted policies)."""
    found = []
    for attr, spec in templates()["attributes"].items():
        for value in spec["values"]:
            for tpl in spec["constraints"]:
                phrase = tpl.format(value=value)
                if re.search(re.escape(phrase) + r"(?![A-Za-z0-9])", text):
                    found.append((text.find(phrase), Constraint(attr, value, phrase)))
                    break
    found.sort(key=lambda x: x[0])
    return [c for _, c in found]


# --- judging ----------------------------------------------------------------------

_ARTICLES = re.compile(r"\b(a|an|the)\b")


def normalize_answer(text: str) -> str:
    text = text.casefold()
    text = "".join(" " if unicodedata.category(ch).startswith("P") else ch for ch in text)
    text = _ARTICLES.sub(" ", text)
    return " ".join(text.split())


def judge_answer(predicted: str, gold: str) -> bool:
    return normalize_answer(predicted) == normalize_answer(gold)
