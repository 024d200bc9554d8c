import pytest

from planexec.corpus import CorpusFetcher, CorpusSpec, build_corpus
from planexec.toolkit import Toolkit
from planexec.tools import SimulatedSearch


@pytest.fixture(scope="session")
def corpus():
    return build_corpus(CorpusSpec(n_entities=60, docs_per_entity=3, distractor_density=0.3), seed=7)


@pytest.fixture
def toolkit(corpus):
    return Toolkit(SimulatedSearch(corpus.documents), CorpusFetcher(corpus))


@pytest.fixture
def registry(toolkit):
    return toolkit.registry()


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record a pass/fail line for an acceptance criterion; printed in the terminal summary."""
    from contextlib import contextmanager

    @contextmanager
    def check(number: int, description: str):
        ACCEPTANCE[number] = (False, description)
        yield
        ACCEPTANCE[number] = (True, description)

    return check


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, description = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {description}")
