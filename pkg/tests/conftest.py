import itertools

import numpy as np
import pytest
from hypothesis import settings

from kconn.graph_gen import UnionGraph

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def graph(n, pairs):
    """Graph on 1-based vertex labels."""
    return UnionGraph.from_edges(n, pairs, one_based=True)


PETERSEN = [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1),
            (1, 6), (2, 7), (3, 8), (4, 9), (5, 10),
            (6, 8), (8, 10), (10, 7), (7, 9), (9, 6)]


@pytest.fixture
def petersen():
    return graph(10, PETERSEN)


def complete(n):
    return graph(n, itertools.combinations(range(1, n + 1), 2))


def cycle(n):
    return graph(n, [(i, i % n + 1) for i in range(1, n + 1)])


def random_graph(rng: np.random.Generator, n: int, p: float) -> UnionGraph:
    pairs = [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]
    return UnionGraph.from_edges(n, pairs)
