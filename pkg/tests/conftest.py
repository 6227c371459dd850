import numpy as np
import pytest

from lide import SplitSpec, split, synthetic
from lide.linear import fit_mnb

# Filled by test_acceptance.py; printed once at the end of the run.
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture(scope="session")
def disjoint_small():
    """3 languages x 60 sentences, disjoint alphabets."""
    return synthetic.disjoint_corpus(60, seed=3)


@pytest.fixture(scope="session")
def disjoint_split(disjoint_small):
    return split(disjoint_small, SplitSpec(0.8, 0))


@pytest.fixture(scope="session")
def mnb_small(disjoint_split):
    return fit_mnb(disjoint_split[0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
