"""Exhaustive scoring oracle for the simulated search engine, written independently of the index."""
import random
import re

STOP = set("a an and are as at be by for from has have in is it its of on or that the this to was "
           "were which who whom whose with".split())


def words(text):
    return re.findall(r"[a-z0-9]+", text.lower())


def exhaustive_rank(docs, query, k):
    sites = [s.lower() for s in re.findall(r"(?:^|\s)site:(\S+)", query, flags=re.I)]
    rest = re.sub(r"(?:^|\s)site:(\S+)", " ", query, flags=re.I)
    phrases = [" ".join(words(p)) for p in re.findall(r'"([^"]+)"', rest)]
    phrases = [p for p in phrases if p]
    terms = []
    for w in words(rest):
        if w not in STOP and w not in terms:
            terms.append(w)
    scored = []
    for d in docs:
        title, snip, body = set(words(d.title)), set(words(d.body[:160])), set(words(d.body))
        score = sum(3 * (t in title) + (t in snip) + (t in body) for t in terms)
        if score == 0:
            continue
        host = d.url.split("/")[2].lower()
        if sites and not any(host == s or host.endswith("." + s) for s in sites):
            continue
        text = " " + " ".join(words(d.title + " " + d.body)) + " "
        if any(f" {p} " not in text for p in phrases):
            continue
        scored.append((-score, d.doc_id, d.url))
    scored.sort()
    return [url for _, _, url in scored[:k]]


def random_queries(docs, n, seed):
    rng = random.Random(seed)
    vocab = sorted({w for d in docs for w in words(d.title + " " + d.body)})
    out = []
    for _ in range(n):
        q = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 4)))
        roll = rng.random()
        if roll < 0.15:
            q += " site:wikipedia.org"
        elif roll < 0.25:
            d = rng.choice(docs)
            ws = words(d.body)
            i = rng.randrange(max(1, len(ws) - 1))
            q = f'"{" ".join(ws[i:i + 2])}" {q}'
        out.append(q)
    return out
