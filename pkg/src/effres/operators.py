"""Vertex and edge functions and the linear operators between them.

Conventions::

    (Lap v)(x)     = sum_y c_xy (v(x) - v(y))
    E(u, v)        = 1/2 sum_{x,y} c_xy (u(x)-u(y)) (v(x)-v(y))
    D(I, J)        = 1/2 sum_{x,y} I(x,y) J(x,y) / c_xy
    (drop v)(x,y)  = c_xy (v(x) - v(y))
    (div I)(x)     = sum_y I(x,y)

Sums over ordered pairs count each edge twice, so the factor 1/2 turns
them into plain sums over the stored edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .network import ExhaustionPlan, Network, boundary_of, exhaustion, interior_of


@dataclass(frozen=True, eq=False)
class VertexFunction:
    """Real values per vertex with a representative convention.

    ``ground`` is the vertex pinned to zero (``grounded_at(o)``), or None for
    a raw function whose constant offset is meaningful.
    """

    values: np.ndarray
    ground: Optional[int] = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.ground is not None and vals[self.ground] != 0.0:
            raise ValueError(f"grounded function must vanish at {self.ground}")

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    @property
    def rep(self) -> str:
        return "raw" if self.ground is None else f"grounded_at({self.ground})"

    def grounded(self, o: int) -> "VertexFunction":
        vals = self.values - self.values[o]
        vals[o] = 0.0
        return VertexFunction(vals, ground=o)

    def allclose(self, other, atol: float = 1e-9) -> bool:
        """Compare modulo constants unless either side is raw."""
        a = np.asarray(self, dtype=float)
        b = np.asarray(other, dtype=float)
        other_raw = isinstance(other, VertexFunction) and other.ground is None
        if self.ground is None or other_raw:
            return bool(np.allclose(a, b, rtol=0, atol=atol))
        d = a - b
        return bool(np.ptp(d) <= 2 * atol) if len(d) else True


@dataclass(frozen=True, eq=False)
class Current:
    """Antisymmetric edge function stored on canonical orientations.

    ``values[i]`` is I(u, v) for ``net.edges[i] == (u, v)`` with u < v; the
    reverse orientation is implied: I(v, u) = -I(u, v).
    """

    net: Network
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        if len(vals) != self.net.m:
            raise ValueError("current must have one value per edge")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __call__(self, x: int, y: int) -> float:
        if not self.net.has_edge(x, y):
            return 0.0
        i, s = self.net.edge_index(x, y)
        return s * float(self.values[i])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def _wrap(self, vals) -> "Current":
        return Current(self.net, vals)

    def __add__(self, other: "Current") -> "Current":
        return self._wrap(self.values + np.asarray(other))

    def __sub__(self, other: "Current") -> "Current":
        return self._wrap(self.values - np.asarray(other))

    def __neg__(self) -> "Current":
        return self._wrap(-self.values)

    def __mul__(self, a: float) -> "Current":
        return self._wrap(a * self.values)

    __rmul__ = __mul__

    @classmethod
    def zero(cls, net: Network) -> "Current":
        return cls(net, np.zeros(net.m))

    @classmethod
    def from_pairs(cls, net: Network, pairs: Mapping[tuple[int, int], float]) -> "Current":
        vals = np.zeros(net.m)
        for (x, y), val in pairs.items():
            i, s = net.edge_index(x, y)
            vals[i] += s * val
        return cls(net, vals)

    @classmethod
    def path_indicator(cls, net: Network, walk: Sequence[int]) -> "Current":
        """chi of a vertex path: +1 along each traversed edge (summed if reused).

        A closed walk gives the characteristic current of a cycle.
        """
        vals = np.zeros(net.m)
        for x, y in zip(walk[:-1], walk[1:]):
            i, s = net.edge_index(int(x), int(y))
            vals[i] += s
        return cls(net, vals)

    @classmethod
    def edge_dirac(cls, net: Network, x: int, y: int) -> "Current":
        return cls.from_pairs(net, {(x, y): 1.0})


def dirac(net: Network, x: int) -> VertexFunction:
    vals = np.zeros(net.n)
    vals[x] = 1.0
    return VertexFunction(vals)


def _vals(v) -> np.ndarray:
    return np.asarray(v, dtype=float)


def apply_laplacian(net: Network, v) -> VertexFunction:
    return VertexFunction(net.laplacian @ _vals(v))


def energy(net: Network, u, v=None) -> float:
    """E(u, v); E(u) when ``v`` is omitted."""
    du = _edge_diff(net, _vals(u))
    dv = du if v is None else _edge_diff(net, _vals(v))
    return float(np.sum(net.conductance * du * dv))


def _edge_diff(net: Network, v: np.ndarray) -> np.ndarray:
    return v[net.edges[:, 0]] - v[net.edges[:, 1]]


def dissipation(net: Network, I, J=None) -> float:
    i = _vals(I)
    j = i if J is None else _vals(J)
    return float(np.sum(i * j / net.conductance))


def drop(net: Network, v) -> Current:
    """Ohm's law: the current induced by the potential ``v``."""
    return Current(net, net.conductance * _edge_diff(net, _vals(v)))


def divergence(net: Network, I) -> VertexFunction:
    i = _vals(I)
    out = np.zeros(net.n)
    np.add.at(out, net.edges[:, 0], i)
    np.add.at(out, net.edges[:, 1], -i)
    return VertexFunction(out)


def normal_derivative(net: Network, H: Iterable[int], v, x: int) -> float:
    """Sum over neighbours y of x inside H of c_xy (v(x) - v(y)); x must lie on bd H."""
    H = np.unique(np.fromiter(H, dtype=np.int64))
    if x not in set(boundary_of(net, H).tolist()):
        raise ValueError(f"vertex {x} is not on the boundary of the subgraph")
    vals = _vals(v)
    nbrs, cond = net.neighbors(x)
    inside = np.isin(nbrs, H)
    return float(np.sum(cond[inside] * (vals[x] - vals[nbrs[inside]])))


def normal_derivatives(net: Network, H: Iterable[int], v) -> tuple[np.ndarray, np.ndarray]:
    """All boundary vertices of H and the normal derivative of v at each."""
    H = np.unique(np.fromiter(H, dtype=np.int64))
    bd = boundary_of(net, H)
    return bd, np.array([normal_derivative(net, H, v, int(x)) for x in bd])


def gauss_green_terms(net: Network, u, v, H: Iterable[int]) -> tuple[float, float]:
    """(sum over int H of u Lap v, sum over bd H of u dv/dn).

    Their sum is the energy of the full subnetwork on H.
    """
    H = np.unique(np.fromiter(H, dtype=np.int64))
    uu = _vals(u)
    inner = interior_of(net, H)
    lap = net.laplacian @ _vals(v)
    bd, dn = normal_derivatives(net, H, v)
    return float(np.sum(uu[inner] * lap[inner])), float(np.sum(uu[bd] * dn))


def gauss_green_sequence(
    net: Network, u, v, plan: ExhaustionPlan, levels: Iterable[int]
) -> list[tuple[int, float, float]]:
    """``(k, interior sum, boundary sum)`` along an exhaustion; limits are not asserted."""
    return [(k, *gauss_green_terms(net, u, v, exhaustion(net, plan, k))) for k in levels]


def transition_prob(net: Network, x: int, y: int) -> float:
    """p(x, y) = c_xy / c(x)."""
    return net.conductance_between(x, y) / float(net.degree_weight[x])


def transition_matrix(net: Network):
    """Sparse row-stochastic matrix of the network random walk."""
    import scipy.sparse as sp

    return (sp.diags(1.0 / net.degree_weight) @ net.adjacency).tocsr()


@dataclass(frozen=True)
class GramMatrix:
    """M_F(x, y) = <v_x, v_y>_E for x, y in ``index``."""

    index: np.ndarray
    matrix: np.ndarray
    lam_min: float
    lam_max: float

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.matrix)
        except np.linalg.LinAlgError:
            return False
        return True


def energy_kernel_gram(net: Network, o: int, F: Iterable[int]) -> GramMatrix:
    """Gram matrix of the energy kernel on F, grounded at ``o``.

    Uses the reproducing property <v_x, v_y>_E = v_x(y) - v_x(o).
    """
    from .solvers import GroundedSystem

    F = np.array(list(F), dtype=np.int64)
    if o in set(F.tolist()):
        raise ValueError("the reference vertex may not belong to F")
    system = GroundedSystem(net, o)
    rhs = np.zeros((net.n, len(F)))
    rhs[F, np.arange(len(F))] = 1.0
    rhs[o, :] = -1.0
    V = system.solve(rhs)
    M = V[F, :].T
    M = 0.5 * (M + M.T)
    lam = np.linalg.eigvalsh(M) if len(F) else np.array([np.nan])
    lam_min = float(lam[0])
    if len(F):
        assert lam_min > -1e-10, "energy-kernel Gram matrix lost positivity"
    return GramMatrix(F, M, lam_min, float(lam[-1]))


# -- text serialization -------------------------------------------------------


def serialize_vertex_function(v) -> str:
    lines = ["vf"] + [f"v {i} {x!r}" for i, x in enumerate(_vals(v).tolist())]
    return "\n".join(lines) + "\n"


def parse_vertex_function(text: str, n: Optional[int] = None) -> VertexFunction:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts or parts[0] in ("vf", "#"):
            continue
        if parts[0] != "v" or len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'v <id> <value>'")
        pairs[int(parts[1])] = float(parts[2])
    size = n if n is not None else (max(pairs) + 1 if pairs else 0)
    vals = np.zeros(size)
    for i, x in pairs.items():
        vals[i] = x
    return VertexFunction(vals)


def serialize_current(I: Current) -> str:
    rows = zip(I.net.edges.tolist(), I.values.tolist())
    return "".join(f"c {u} {v} {x!r}\n" for (u, v), x in rows)


def parse_current(net: Network, text: str) -> Current:
    pairs: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] != "c" or len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 'c <u> <v> <value>'")
        key = (int(parts[1]), int(parts[2]))
        pairs[key] = pairs.get(key, 0.0) + float(parts[3])
    return Current.from_pairs(net, pairs)
