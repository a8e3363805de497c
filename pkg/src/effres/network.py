"""Weighted graph model, NETX text I/O, exhaustions and subgraph boundaries.

Vertices are the dense integers ``0..n-1``. Edges are stored once, in
canonical orientation ``u < v``, sorted lexicographically; every per-edge
array in the package (conductances, currents) is aligned with that order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph


class NetworkError(ValueError):
    """Invalid network data (sign, loop, connectivity or id errors)."""


class ParseError(NetworkError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Network:
    """A finite connected network with symmetric positive conductances.

    Parameters
    ----------
    n : int
        Number of vertices.
    edges : array_like, shape (m, 2)
        Vertex pairs. Orientation and order are normalised; parallel
        pairs are merged by adding their conductances.
    conductance : array_like, shape (m,)
        Positive conductance per row of ``edges``.
    labels : sequence of str, optional
        Decorative vertex names.
    check_connected : bool
        Raise :class:`NetworkError` for disconnected input (default).

    Instances are immutable; cached matrices are computed on first use.
    """

    def __init__(
        self,
        n: int,
        edges,
        conductance,
        labels: Optional[Sequence[str]] = None,
        *,
        check_connected: bool = True,
    ):
        n = int(n)
        if n < 1:
            raise NetworkError("a network needs at least one vertex")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        c = np.asarray(conductance, dtype=float).reshape(-1)
        if len(e) != len(c):
            raise NetworkError("edges and conductance differ in length")
        if len(e):
            if e.min() < 0 or e.max() >= n:
                raise NetworkError("edge endpoint outside 0..n-1")
            loops = e[:, 0] == e[:, 1]
            if loops.any():
                x = int(e[loops][0, 0])
                raise NetworkError(f"self-loop at vertex {x}")
            if not np.all(np.isfinite(c)) or np.any(c <= 0):
                raise NetworkError("conductances must be finite and positive")
            lo = np.minimum(e[:, 0], e[:, 1])
            hi = np.maximum(e[:, 0], e[:, 1])
            key = lo * n + hi
            uniq, inv = np.unique(key, return_inverse=True)
            merged = np.zeros(len(uniq))
            np.add.at(merged, inv, c)
            e = np.column_stack([uniq // n, uniq % n])
            c = merged
        self.n = n
        self.edges = _frozen(e)
        self.conductance = _frozen(c)
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != n:
            raise NetworkError("one label per vertex required")
        if check_connected and n > 1:
            ncomp, comp = csgraph.connected_components(self.adjacency, directed=False)
            if ncomp > 1:
                other = int(np.flatnonzero(comp != comp[0])[0])
                raise NetworkError(
                    f"network is disconnected: vertices 0 and {other} are mutually unreachable"
                )

    @classmethod
    def from_edges(cls, triples: Iterable[tuple[int, int, float]], n: Optional[int] = None, **kw):
        """Build from ``(u, v, c)`` triples; ``n`` defaults to max id + 1."""
        rows = list(triples)
        if not rows:
            return cls(n or 1, np.zeros((0, 2), dtype=np.int64), np.zeros(0), **kw)
        e = np.array([(int(u), int(v)) for u, v, _ in rows], dtype=np.int64)
        c = np.array([float(w) for _, _, w in rows])
        if n is None:
            n = int(e.max()) + 1
        return cls(n, e, c, **kw)

    @property
    def m(self) -> int:
        return len(self.edges)

    def __repr__(self) -> str:
        return f"Network(n={self.n}, m={self.m})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.conductance, other.conductance)
        )

    __hash__ = object.__hash__

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric conductance matrix ``C[x, y] = c_xy``."""
        u, v = self.edges[:, 0], self.edges[:, 1]
        a = sp.coo_matrix(
            (np.r_[self.conductance, self.conductance], (np.r_[u, v], np.r_[v, u])),
            shape=(self.n, self.n),
        ).tocsr()
        a.sort_indices()
        return a

    @cached_property
    def degree_weight(self) -> np.ndarray:
        """c(x): sum of conductances incident to x."""
        w = np.zeros(self.n)
        np.add.at(w, self.edges[:, 0], self.conductance)
        np.add.at(w, self.edges[:, 1], self.conductance)
        return _frozen(w)

    @cached_property
    def degree(self) -> np.ndarray:
        return _frozen(np.diff(self.adjacency.indptr))

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        """Sparse matrix of ``(Lap v)(x) = sum_y c_xy (v(x) - v(y))``."""
        lap = (sp.diags(self.degree_weight) - self.adjacency).tocsr()
        lap.sort_indices()
        return lap

    def laplacian_dense(self) -> np.ndarray:
        return self.laplacian.toarray()

    @cached_property
    def _edge_lookup(self) -> dict:
        return {(int(u), int(v)): i for i, (u, v) in enumerate(self.edges)}

    def edge_index(self, x: int, y: int) -> tuple[int, int]:
        """Row of edge {x, y} and the sign of (x, y) relative to storage.

        Raises KeyError if x and y are not adjacent.
        """
        if x < y:
            return self._edge_lookup[(x, y)], 1
        return self._edge_lookup[(y, x)], -1

    def has_edge(self, x: int, y: int) -> bool:
        return (min(x, y), max(x, y)) in self._edge_lookup

    def conductance_between(self, x: int, y: int) -> float:
        """c_xy, or 0 for non-neighbours."""
        if x == y or not self.has_edge(x, y):
            return 0.0
        return float(self.conductance[self.edge_index(x, y)[0]])

    def neighbors(self, x: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbour ids of ``x`` (ascending) and the matching conductances."""
        a = self.adjacency
        lo, hi = a.indptr[x], a.indptr[x + 1]
        return a.indices[lo:hi], a.data[lo:hi]

    def hop_distances(self, origin: int) -> np.ndarray:
        """Shortest-path edge counts from ``origin`` (inf if unreachable)."""
        cache = self.__dict__.setdefault("_hops", {})
        if origin not in cache:
            if self.n == 1:
                d = np.zeros(1)
            else:
                d = csgraph.shortest_path(
                    self.adjacency, directed=False, unweighted=True, indices=origin
                )
            cache[origin] = _frozen(d)
        return cache[origin]

    def check_degree_weights(self) -> float:
        """Largest deviation between cached c(x) and a fresh recomputation."""
        fresh = np.asarray(self.adjacency.sum(axis=1)).ravel()
        return float(np.max(np.abs(fresh - self.degree_weight))) if self.n else 0.0

    def induced(self, vertices: Iterable[int]) -> tuple["Network", np.ndarray]:
        """Full subnetwork on ``vertices``.

        Returns the subnetwork (ids relabelled ``0..k-1`` in ascending order
        of the original ids) and the array mapping new id -> old id.
        """
        keep = np.unique(np.fromiter(vertices, dtype=np.int64))
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[keep] = np.arange(len(keep))
        mask = (pos[self.edges[:, 0]] >= 0) & (pos[self.edges[:, 1]] >= 0)
        e = pos[self.edges[mask]]
        sub = Network(len(keep), e, self.conductance[mask])
        return sub, keep

    def wired(self, vertices: Iterable[int]) -> tuple["Network", np.ndarray, Optional[int]]:
        """Subnetwork on ``vertices`` with the complement collapsed to one vertex.

        Every vertex outside the set is identified with a new vertex
        ``inf`` (id ``k``, after the ``k`` kept vertices); an edge from a kept
        vertex x to the complement contributes its conductance to c_{x,inf}.
        If the complement is empty no extra vertex is added and ``inf`` is
        None.
        """
        keep = np.unique(np.fromiter(vertices, dtype=np.int64))
        if len(keep) == self.n:
            sub, ids = self.induced(keep)
            return sub, ids, None
        k = len(keep)
        pos = np.full(self.n, k, dtype=np.int64)
        pos[keep] = np.arange(k)
        e = pos[self.edges]
        mask = ~((e[:, 0] == k) & (e[:, 1] == k))
        e, c = e[mask], self.conductance[mask]
        sub = Network(k + 1, e, c, check_connected=False)
        return sub, keep, k


def boundary_of(net: Network, H: Iterable[int]) -> np.ndarray:
    """Vertices of ``H`` with at least one neighbour outside ``H`` (sorted)."""
    inside = np.zeros(net.n, dtype=bool)
    inside[np.fromiter(H, dtype=np.int64)] = True
    u, v = net.edges[:, 0], net.edges[:, 1]
    cut = inside[u] != inside[v]
    bd = np.where(inside[u[cut]], u[cut], v[cut])
    return np.unique(bd)


def interior_of(net: Network, H: Iterable[int]) -> np.ndarray:
    H = np.unique(np.fromiter(H, dtype=np.int64))
    return np.setdiff1d(H, boundary_of(net, H))


# -- exhaustions -------------------------------------------------------------


def ball_rule(net: Network, origin: int, k: int) -> np.ndarray:
    return np.flatnonzero(net.hop_distances(origin) <= k)


@dataclass(frozen=True)
class ExhaustionPlan:
    """Nested finite subnetworks G_1 ⊂ G_2 ⊂ ... used for infinite limits.

    ``rule(net, origin, k)`` returns the vertex ids of G_k; the default is the
    geodesic ball of radius ``k`` about ``origin``.
    """

    origin: int
    rule: Callable[[Network, int, int], Iterable[int]] = ball_rule

    def max_level(self, net: Network) -> int:
        """Largest k for which G_k is a proper subset of the network.

        Only meaningful for the default ball rule; equals the eccentricity of
        the origin minus one.
        """
        d = net.hop_distances(self.origin)
        return int(np.max(d[np.isfinite(d)])) - 1


def exhaustion(net: Network, plan: ExhaustionPlan, k: int) -> np.ndarray:
    """Sorted vertex ids of G_k."""
    if k < 0:
        raise ValueError("exhaustion level must be nonnegative")
    if not 0 <= plan.origin < net.n:
        raise ValueError(f"origin {plan.origin} not in network")
    return np.unique(np.fromiter(plan.rule(net, plan.origin, k), dtype=np.int64))


# -- NETX text format -------------------------------------------------------


def parse_network(text) -> Network:
    """Parse NETX text (``str`` or ``bytes``).

    ::

        # optional comments
        netx 1
        e <u> <v> <conductance>
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    header_seen = False
    triples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if not header_seen:
            if parts != ["netx", "1"]:
                raise ParseError(lineno, "expected header 'netx 1'")
            header_seen = True
            continue
        if parts[0] != "e" or len(parts) != 4:
            raise ParseError(lineno, f"expected 'e <u> <v> <c>', got {line!r}")
        try:
            u, v = int(parts[1]), int(parts[2])
            c = float(parts[3])
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
        if u < 0 or v < 0:
            raise ParseError(lineno, "vertex ids must be nonnegative")
        if u == v:
            raise ParseError(lineno, f"self-loop at vertex {u}")
        if not np.isfinite(c) or c <= 0:
            raise ParseError(lineno, f"conductance must be positive, got {parts[3]}")
        triples.append((u, v, c))
    if not header_seen:
        raise ParseError(1, "missing header 'netx 1'")
    return Network.from_edges(triples)


def serialize_network(net: Network) -> str:
    lines = ["netx 1"]
    for (u, v), c in zip(net.edges.tolist(), net.conductance.tolist()):
        lines.append(f"e {u} {v} {c!r}")
    return "\n".join(lines) + "\n"


def read_netx(path) -> Network:
    return parse_network(Path(path).read_bytes())


def write_netx(net: Network, path) -> None:
    Path(path).write_text(serialize_network(net), encoding="utf-8")
