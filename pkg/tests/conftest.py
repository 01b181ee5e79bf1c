import json
import random
from pathlib import Path

import pytest

from refagg.chrf import ChrfParams
from refagg.metrics import ChrfMetric

DATA = Path(__file__).parent / "data"


@pytest.fixture
def chrf():
    return ChrfMetric()


@pytest.fixture
def chrf2():
    """ChrF with bigrams at most, matching the hand-worked examples."""
    return ChrfMetric(ChrfParams(max_order=2))


@pytest.fixture(scope="session")
def divergence():
    return json.loads((DATA / "divergence.json").read_text())


def random_strings(rng: random.Random, count, max_len, alphabet):
    return ["".join(rng.choice(alphabet) for _ in range(rng.randint(0, max_len)))
            for _ in range(count)]


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, status, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{status}] criterion {num}: {title} :: {detail}")
