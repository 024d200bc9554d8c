"""Compare the compiled ranking kernels with the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times each kernel on synthetic postings, then times full simulated
searches over a generated corpus once per implementation (the second run
sets PLANEXEC_PURE_PYTHON=1 in a subprocess).
"""
import argparse
import os
import random
import subprocess
import sys
import timeit
from array import array

from planexec._kernels import _pykernels

try:
    from planexec._kernels import _ckernels
except ImportError:
    _ckernels = None


def make_postings(rng, n_terms, n_docs, per_term):
    offsets, docs, weights = array("i", [0]), array("i"), array("i")
    for _ in range(n_terms):
        for d in sorted(rng.sample(range(n_docs), per_term)):
            docs.append(d)
            weights.append(rng.randint(1, 5))
        offsets.append(len(docs))
    return offsets, docs, weights


def make_hits(rng, n_hits, n_terms, text_len):
    offsets = array("i", sorted(rng.sample(range(text_len), n_hits)))
    terms = array("i", [rng.randrange(n_terms) for _ in range(n_hits)])
    return offsets, terms


def bench_module(mod, repeat):
    rng = random.Random(0)
    offsets, docs, weights = make_postings(rng, 2000, 5000, 200)
    query = array("i", rng.sample(range(2000), 6))
    hit_offsets, hit_terms = make_hits(rng, 400, 6, 20000)
    score = min(timeit.repeat(lambda: mod.accumulate_scores(offsets, docs, weights, query, 5000),
                              number=200, repeat=repeat)) / 200
    window = min(timeit.repeat(lambda: mod.best_window(hit_offsets, hit_terms, 160),
                               number=200, repeat=repeat)) / 200
    return score, window


SEARCH_SNIPPET = """
import time, random
from planexec import _kernels
from planexec.corpus import CorpusSpec, build_corpus
from planexec.tools import SimulatedSearch, web_search
c = build_corpus(CorpusSpec(n_entities=200, docs_per_entity=5), seed=1)
s = SimulatedSearch(c.documents)
rng = random.Random(2)
names = [e.name for e in c.entities]
queries = [rng.choice(names) + " born award" for _ in range(300)]
t = time.perf_counter()
for q in queries:
    web_search(q, 10, s)
print(_kernels.IMPLEMENTATION, (time.perf_counter() - t) / len(queries))
"""


def bench_search(pure):
    env = dict(os.environ)
    env.pop("PLANEXEC_PURE_PYTHON", None)
    if pure:
        env["PLANEXEC_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", SEARCH_SNIPPET], env=env, check=True,
                         capture_output=True, text=True).stdout.split()
    return out[0], float(out[1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rows = [("python", bench_module(_pykernels, args.repeat))]
    if _ckernels is not None:
        rows.append(("cython", bench_module(_ckernels, args.repeat)))
    else:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':<12}{'accumulate_scores (us)':>26}{'best_window (us)':>20}")
    for name, (score, window) in rows:
        print(f"{name:<12}{score * 1e6:>26.1f}{window * 1e6:>20.1f}")
    if len(rows) == 2:
        (_, (ps, pw)), (_, (cs, cw)) = rows
        print(f"{'speedup':<12}{ps / cs:>25.1f}x{pw / cw:>19.1f}x")

    print()
    print(f"{'search impl':<12}{'ms per web_search':>26}")
    for pure in (False, True):
        impl, secs = bench_search(pure)
        print(f"{impl:<12}{secs * 1e3:>26.3f}")


if __name__ == "__main__":
    main()
