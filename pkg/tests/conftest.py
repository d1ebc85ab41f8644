from collections import deque

import numpy as np
import pytest

from codedgossip.graph import Graph, GridSpec, TreeSpec, gen_grid, gen_tree

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def two_triangles() -> Graph:
    return Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


SMALL_GRAPHS = {
    # name -> (graph, source)
    "path6": (path_graph(6), 0),
    "cycle7": (cycle_graph(7), 0),
    "star5": (star_graph(5), 1),
    "grid3x3": (gen_grid(GridSpec(3, 3)), 0),
    "tree_h2": (gen_tree(TreeSpec(2, 2)), 0),
    "grid3x3_q2": (gen_grid(GridSpec(3, 3, 2)), 4),
}


@pytest.fixture(params=sorted(SMALL_GRAPHS))
def small_graph(request):
    return SMALL_GRAPHS[request.param]


def event_driven_trial(g: Graph, source: int, k: int, n: int, p: float, rng: np.random.Generator):
    """Message-passing simulation: a node flips its coin for a packet at the
    moment it first receives it. Reference for the static-activation engine."""
    counts = np.zeros(g.node_count, dtype=int)
    transmissions = 0
    for _ in range(n):
        have = {source}
        queue = deque([source])
        while queue:
            w = queue.popleft()
            transmissions += 1
            for x in g.adjacency[w]:
                if x in have:
                    continue
                have.add(x)
                if g.forward_mask[x] and rng.random() < p:
                    queue.append(x)
        counts[list(have)] += 1
    return int((counts >= k).sum()), transmissions
