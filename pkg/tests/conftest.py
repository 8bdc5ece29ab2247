import networkx as nx
import numpy as np
import pytest

from linkcomm.graph import Graph, from_edges


def karate_graph() -> Graph:
    g = nx.karate_club_graph()
    return from_edges(list(g.edges()), n=g.number_of_nodes())


def karate_truth() -> np.ndarray:
    g = nx.karate_club_graph()
    return np.array([0 if g.nodes[i]["club"] == "Mr. Hi" else 1 for i in range(g.number_of_nodes())])


def random_multigraph(n: int, p: float, rng: np.random.Generator, loops: bool = True) -> Graph:
    """Erdos-Renyi style multigraph with occasional multi-edges and self-loops."""
    iu, iv = np.triu_indices(n, k=0 if loops else 1)
    keep = rng.random(len(iu)) < p
    u, v = iu[keep], iv[keep]
    count = 1 + (rng.random(len(u)) < 0.1).astype(np.int64)
    return Graph(n, u, v, count)


def planted_partition(sizes, p_in: float, p_out: float, rng: np.random.Generator) -> tuple[Graph, np.ndarray]:
    truth = np.repeat(np.arange(len(sizes)), sizes)
    n = len(truth)
    iu, iv = np.triu_indices(n, k=1)
    prob = np.where(truth[iu] == truth[iv], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    return Graph(n, iu[keep], iv[keep], np.ones(keep.sum(), dtype=np.int64)), truth


@pytest.fixture(scope="session")
def karate():
    return karate_graph()


@pytest.fixture(scope="session")
def karate_clubs():
    return karate_truth()


ACCEPTANCE_LINES: list = []


def record(criterion: int, ok: bool, detail: str) -> bool:
    """Log one pass/fail line for an acceptance criterion (echoed in the terminal summary)."""
    line = f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
