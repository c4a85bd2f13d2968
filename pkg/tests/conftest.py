import sys

import numpy as np
import pytest

from condgraph.graph import FixedSet, Graph, table_instance


def matching_graph() -> Graph:
    # vertices 0..3 stand for 1..4; edges 1-3 and 2-4
    return Graph.from_edges(4, [(0, 2), (1, 3)], directed=False)


def random_digraph(rng, n, p=0.4) -> Graph:
    w = (rng.random((n, n)) < p).astype(np.int64)
    np.fill_diagonal(w, 0)
    return Graph(w, directed=True)


def random_fixed(rng, g: Graph, p=0.2) -> FixedSet:
    mask = rng.random((g.n, g.n)) < p
    if not g.directed:
        mask = np.triu(mask) | np.triu(mask).T
    return FixedSet.from_mask(mask, g.directed)


def random_table_instance(rng, shape=(3, 3), high=3, n_fixed=1):
    t = rng.integers(0, high, size=shape)
    cells = [(int(rng.integers(shape[0])), int(rng.integers(shape[1]))) for _ in range(n_fixed)]
    return table_instance(t, cells)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def matching():
    return matching_graph()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
