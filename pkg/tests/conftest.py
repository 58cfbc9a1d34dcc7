import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from fpplab.graphcore import RootedGraph

settings.register_profile(
    "fpplab", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("fpplab")


def random_connected_graph(gen: np.random.Generator, n: int, p: float) -> RootedGraph:
    """Random spanning tree (random attachment) plus independent extra edges."""
    edges = set()
    perm = gen.permutation(n)
    for i in range(1, n):
        u, v = int(perm[i]), int(perm[gen.integers(i)])
        edges.add((min(u, v), max(u, v)))
    for u in range(n):
        for v in range(u + 1, n):
            if (u, v) not in edges and gen.random() < p:
                edges.add((u, v))
    edges = sorted(edges)
    order = gen.permutation(len(edges))
    return RootedGraph(n, [edges[i] for i in order], int(gen.integers(n)))


@st.composite
def connected_graphs(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    p = draw(st.sampled_from([0.0, 0.1, 0.3, 0.6]))
    return random_connected_graph(np.random.default_rng(seed), n, p)


@pytest.fixture
def gen():
    return np.random.default_rng(20240611)


def three_se(samples) -> float:
    samples = np.asarray(samples, dtype=float)
    return 3.0 * samples.std(ddof=1) / np.sqrt(len(samples))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
