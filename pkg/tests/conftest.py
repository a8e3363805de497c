import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from effres.network import Network

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_network(rng: np.random.Generator, n: int, extra: int | None = None, lo: float = 0.1, hi: float = 10.0) -> Network:
    """Random spanning tree plus ``extra`` chords, conductances uniform in [lo, hi]."""
    rows = []
    order = rng.permutation(n)
    for i in range(1, n):
        rows.append((int(order[i]), int(order[rng.integers(0, i)])))
    if extra is None:
        extra = int(rng.integers(0, 2 * n + 1))
    for _ in range(extra):
        u, v = rng.integers(0, n, size=2)
        if u != v:
            rows.append((int(u), int(v)))
    c = rng.uniform(lo, hi, size=len(rows))
    return Network.from_edges([(u, v, w) for (u, v), w in zip(rows, c)], n=n)


@st.composite
def networks(draw, min_n: int = 2, max_n: int = 12):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_network(np.random.default_rng(seed), n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def nx_graph(net: Network):
    import networkx as nx

    g = nx.Graph()
    g.add_nodes_from(range(net.n))
    for (u, v), c in zip(net.edges.tolist(), net.conductance.tolist()):
        g.add_edge(u, v, weight=c)
    return g


def nx_resistance(net: Network, x: int, y: int) -> float:
    """Independent oracle: networkx's effective resistance (weights are conductances)."""
    import networkx as nx

    return float(nx.resistance_distance(nx_graph(net), x, y, weight="weight", invert_weight=False))
