from __future__ import annotations

import numpy as np
import pytest

from entropy_embed.graph import Graph

# (criterion, passed, detail) tuples filled in by test_acceptance.py
ACCEPTANCE_LINES: list[tuple[int, bool, str]] = []


def two_cliques(k: int = 10) -> Graph:
    """Two k-cliques, vertices 0..k-1 and k..2k-1, joined by the edge (0, k)."""
    edges = [(a, b) for a in range(k) for b in range(a + 1, k)]
    edges += [(a + k, b + k) for a, b in edges] + [(0, k)]
    e = np.array(edges)
    return Graph(2 * k, e[:, 0], e[:, 1])


def ring(n: int) -> Graph:
    v = np.arange(n)
    return Graph(n, v, (v + 1) % n)


def random_graph(n: int, m: int, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    keys: set[tuple[int, int]] = set()
    while len(keys) < m:
        a, b = (int(x) for x in rng.integers(0, n, 2))
        if a != b:
            keys.add((min(a, b), max(a, b)))
    e = np.array(sorted(keys))
    return Graph(n, e[:, 0], e[:, 1])


@pytest.fixture
def cliques() -> Graph:
    return two_cliques()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
