import os
import random
import subprocess
import sys
from array import array

import pytest

from planexec import _kernels
from planexec._kernels import _pykernels

try:
    from planexec._kernels import _ckernels
except ImportError:  # extension not built in this environment
    _ckernels = None

IMPLS = [pytest.param(_pykernels, id="python"),
         pytest.param(_ckernels, id="cython", marks=pytest.mark.skipif(_ckernels is None, reason="extension not built"))]


def _postings(rng, n_terms, n_docs):
    offsets, docs, weights = array("i", [0]), array("i"), array("i")
    for _ in range(n_terms):
        for d in sorted(rng.sample(range(n_docs), rng.randint(0, min(6, n_docs)))):
            docs.append(d)
            weights.append(rng.randint(1, 5))
        offsets.append(len(docs))
    return offsets, docs, weights


def _oracle_scores(offsets, docs, weights, query, n_docs):
    scores = [0] * n_docs
    for t in query:
        for j in range(offsets[t], offsets[t + 1]):
            scores[docs[j]] += weights[j]
    return scores


@pytest.mark.parametrize("impl", IMPLS)
def test_accumulate_scores(impl):
    rng = random.Random(1)
    for _ in range(200):
        n_terms, n_docs = rng.randint(1, 20), rng.randint(1, 30)
        offsets, docs, weights = _postings(rng, n_terms, n_docs)
        query = array("i", rng.sample(range(n_terms), rng.randint(0, n_terms)))
        assert list(impl.accumulate_scores(offsets, docs, weights, query, n_docs)) == \
            _oracle_scores(offsets, docs, weights, query, n_docs)


@pytest.mark.parametrize("impl", IMPLS)
def test_best_window(impl):
    rng = random.Random(2)
    for _ in range(300):
        n = rng.randint(0, 25)
        offsets = array("i", sorted(rng.sample(range(400), n)))
        terms = array("i", [rng.randrange(5) for _ in range(n)])
        window = rng.choice([5, 20, 160])
        coverage = [len({terms[j] for j in range(n) if offsets[i] <= offsets[j] < offsets[i] + window})
                    for i in range(n)]
        expected = coverage.index(max(coverage)) if coverage else -1
        assert impl.best_window(offsets, terms, window) == expected


def test_both_implementations_agree_on_corpus(corpus):
    if _ckernels is None:
        pytest.skip("extension not built")
    from planexec.tools.search import SimulatedSearch

    s = SimulatedSearch(corpus.documents)
    ids = array("i", range(0, len(s._vocab), 3))
    args = (s._offsets, s._post_docs, s._post_weights, ids, len(s.docs))
    assert list(_ckernels.accumulate_scores(*args)) == list(_pykernels.accumulate_scores(*args))


def test_env_var_forces_fallback():
    env = dict(os.environ, PLANEXEC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from planexec import _kernels; print(_kernels.IMPLEMENTATION)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_selected_implementation_is_reported():
    assert _kernels.IMPLEMENTATION in ("python", "cython")
    if _ckernels is not None and os.environ.get("PLANEXEC_PURE_PYTHON", "") in ("", "0"):
        assert _kernels.IMPLEMENTATION == "cython"
