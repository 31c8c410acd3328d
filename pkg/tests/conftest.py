import sys
from pathlib import Path

import pytest

from tokinfer.core import MergeTable, Vocabulary

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"

V1_TOKENS = ["a", "b", "c", "d", "ab", "bc", "abc"]
V1_SCORES = {"ab": -1.0, "bc": -1.0, "a": -2.0, "b": -2.0, "c": -2.0, "abc": -2.5, "d": -3.0}


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def v1():
    return Vocabulary(V1_TOKENS)


@pytest.fixture
def v1_scored():
    return Vocabulary(list(V1_SCORES), list(V1_SCORES.values()))


@pytest.fixture
def m1_vocab():
    return Vocabulary(["a", "b", "c", "d", "ab", "abc", "cd"])


@pytest.fixture
def m1(m1_vocab):
    return MergeTable([("a", "b"), ("ab", "c"), ("c", "d")], m1_vocab)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in RESULTS:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
