"""Exact network reduction: series, parallel, wye-delta and Schur complements.

Single-vertex elimination is the star-mesh transform: removing z with
neighbours a, b, ... adds c_ab = c_az c_bz / c(z) between every pair. For
degree 2 this is the series rule and for degree 3 the wye-delta rule.

Reduction steps are recorded as plain dicts (JSON-ready), using the vertex
ids of the network the reduction started from::

    {"op": "series", "removed": z, "pair": [x, y], "c": [c_xz, c_zy], "new": c}
    {"op": "parallel", "pair": [x, y], "c": [c_old, c_added], "merged": c}
    {"op": "wye_delta", "removed": t, "neighbors": [a, b, c], "c": [...],
     "new": [[a, b, c_ab], [a, c, c_ac], [b, c, c_bc]]}
    {"op": "schur", "eliminated": [z], "new": [[a, b, c_ab], ...]}
"""

from __future__ import annotations

import json
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse.linalg as sla

from .network import Network

DENSE_ELIMINATION_LIMIT = 2000
CLAMP = 1e-12


class ReductionError(ValueError):
    pass


class _Work:
    """Mutable adjacency used while rewriting; keyed by original vertex ids."""

    def __init__(self, net: Network):
        self.adj: dict[int, dict[int, float]] = {x: {} for x in range(net.n)}
        for (u, v), c in zip(net.edges.tolist(), net.conductance.tolist()):
            self.adj[u][v] = c
            self.adj[v][u] = c

    def degree(self, z: int) -> int:
        return len(self.adj[z])

    def add(self, x: int, y: int, c: float, log: list) -> None:
        old = self.adj[x].get(y)
        if old is None:
            self.adj[x][y] = self.adj[y][x] = c
            return
        merged = old + c
        self.adj[x][y] = self.adj[y][x] = merged
        a, b = sorted((x, y))
        log.append({"op": "parallel", "pair": [a, b], "c": [old, c], "merged": merged})

    def remove(self, z: int) -> dict[int, float]:
        nbrs = self.adj.pop(z)
        for y in nbrs:
            del self.adj[y][z]
        return nbrs

    def to_network(self) -> tuple[Network, np.ndarray]:
        ids = np.array(sorted(self.adj), dtype=np.int64)
        pos = {int(x): i for i, x in enumerate(ids)}
        rows = [(pos[x], pos[y], c) for x, nb in self.adj.items() for y, c in nb.items() if x < y]
        return Network.from_edges(rows, n=len(ids)), ids


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ReductionError(msg)


def _series(work: _Work, z: int, log: list) -> None:
    _check(work.degree(z) == 2, f"series reduction needs degree 2 at {z}, found {work.degree(z)}")
    (x, cx), (y, cy) = sorted(work.adj[z].items())
    work.remove(z)
    new = 1.0 / (1.0 / cx + 1.0 / cy)
    log.append({"op": "series", "removed": z, "pair": [x, y], "c": [cx, cy], "new": new})
    work.add(x, y, new, log)


def _wye_delta(work: _Work, t: int, log: list) -> None:
    _check(work.degree(t) == 3, f"wye-delta needs degree 3 at {t}, found {work.degree(t)}")
    nbrs = sorted(work.adj[t].items())
    total = sum(c for _, c in nbrs)
    work.remove(t)
    new = [[a, b, ca * cb / total] for (a, ca), (b, cb) in combinations(nbrs, 2)]
    log.append(
        {"op": "wye_delta", "removed": t, "neighbors": [a for a, _ in nbrs], "c": [c for _, c in nbrs], "new": new}
    )
    for a, b, c in new:
        work.add(a, b, c, log)


def _star_mesh(work: _Work, z: int, log: list) -> None:
    nbrs = sorted(work.adj[z].items())
    total = sum(c for _, c in nbrs)
    work.remove(z)
    new = [[a, b, ca * cb / total] for (a, ca), (b, cb) in combinations(nbrs, 2)]
    log.append({"op": "schur", "eliminated": [z], "new": new})
    for a, b, c in new:
        work.add(a, b, c, log)


def _finish(work: _Work, log: list) -> tuple[Network, list]:
    net, _ = work.to_network()
    return net, log


def series_reduce(net: Network, z: int) -> tuple[Network, list]:
    """Remove the degree-2 vertex z; its neighbours gain (1/c_xz + 1/c_zy)^-1.

    Vertex ids above z shift down by one in the returned network. The
    returned steps use the input ids (a ``parallel`` step follows when the
    new edge merges with an existing one).
    """
    work = _Work(net)
    nb = work.adj[z]
    if len(nb) == 2:
        _check(len(set(nb)) == 2, "series neighbours must differ")
    log: list = []
    _series(work, z, log)
    return _finish(work, log)


def wye_delta(net: Network, t: int) -> tuple[Network, list]:
    """Replace the degree-3 star at t by a triangle with c_xy = c_xt c_ty / c(t)."""
    work = _Work(net)
    log: list = []
    _wye_delta(work, t, log)
    return _finish(work, log)


def eliminate_vertex(net: Network, z: int) -> tuple[Network, list]:
    """Star-mesh (single-vertex Schur) elimination of z."""
    work = _Work(net)
    log: list = []
    _star_mesh(work, z, log)
    return _finish(work, log)


def schur_complement(L: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Dense A - B^T D^{-1} B for the index split ``keep`` / rest."""
    keep = np.asarray(keep, dtype=np.int64)
    rest = np.setdiff1d(np.arange(L.shape[0]), keep)
    A = L[np.ix_(keep, keep)]
    if len(rest) == 0:
        return A.copy()
    B = L[np.ix_(rest, keep)]
    D = L[np.ix_(rest, rest)]
    return A - B.T @ np.linalg.solve(D, B)


def schur_trace(net: Network, keep: Iterable[int]) -> tuple[np.ndarray, Network]:
    """Trace of the Laplacian onto ``keep`` and the network it defines.

    Row/column i of the matrix and vertex i of the traced network correspond
    to ``keep[i]`` in the order given.
    """
    keep = np.array(list(keep), dtype=np.int64)
    _check(len(keep) > 0, "keep must be nonempty")
    _check(len(np.unique(keep)) == len(keep), "keep has repeated vertices")
    rest = np.setdiff1d(np.arange(net.n), keep)
    L = net.laplacian
    A = L[keep][:, keep].toarray()
    if len(rest) == 0:
        T = A
    else:
        B = L[rest][:, keep].toarray()
        D = L[rest][:, rest]
        if len(rest) <= DENSE_ELIMINATION_LIMIT:
            X = np.linalg.solve(D.toarray(), B)
        else:
            X = sla.splu(D.tocsc(), permc_spec="MMD_AT_PLUS_A").solve(B)
        T = A - B.T @ X
    T = 0.5 * (T + T.T)
    return T, _network_from_laplacian(T)


def _network_from_laplacian(T: np.ndarray) -> Network:
    k = T.shape[0]
    scale = max(float(np.max(np.abs(T))), 1.0) if k else 1.0
    rows = []
    for i in range(k):
        for j in range(i + 1, k):
            c = -T[i, j]
            if c > CLAMP * scale:
                rows.append((i, j, c))
    return Network.from_edges(rows, n=k)


def reduce_to_pair(net: Network, x: int, y: int) -> tuple[float, list]:
    """Reduce to the single equivalent conductance between x and y.

    Greedy: repeatedly take the lowest-degree vertex other than x, y (ties
    by id) and remove it by dropping (degree <= 1), series (2), wye-delta (3)
    or star-mesh Schur elimination (4+). Parallel edges merge as they form.
    """
    _check(x != y, "reduce_to_pair needs distinct vertices")
    work = _Work(net)
    log: list = []
    others = set(work.adj) - {x, y}
    while others:
        z = min(others, key=lambda v: (work.degree(v), v))
        d = work.degree(z)
        if d <= 1:
            work.remove(z)
            log.append({"op": "schur", "eliminated": [z], "new": []})
        elif d == 2:
            _series(work, z, log)
        elif d == 3:
            _wye_delta(work, z, log)
        else:
            _star_mesh(work, z, log)
        others.discard(z)
    return work.adj[x].get(y, 0.0), log


def replay(net: Network, log: Iterable[dict], rtol: float = 1e-12) -> tuple[Network, np.ndarray]:
    """Apply logged steps to ``net``; returns the result and surviving original ids.

    Each step's recorded input conductances are checked against the current
    state, so a log replayed on the wrong network fails loudly.
    """
    work = _Work(net)
    sink: list = []

    def same(a: float, b: float) -> bool:
        return abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300)

    for step in log:
        op = step["op"]
        if op == "series":
            z = step["removed"]
            x, y = step["pair"]
            _check(same(work.adj[z].get(x, -1), step["c"][0]), f"replay mismatch at series {z}")
            _series(work, z, sink)
        elif op == "wye_delta":
            t = step["removed"]
            _check(sorted(work.adj[t]) == list(step["neighbors"]), f"replay mismatch at wye_delta {t}")
            _wye_delta(work, t, sink)
        elif op == "schur":
            for z in step["eliminated"]:
                if work.degree(z) <= 1:
                    work.remove(z)
                else:
                    _star_mesh(work, z, sink)
        elif op == "parallel":
            a, b = step["pair"]
            _check(same(work.adj[a].get(b, -1), step["merged"]), f"replay mismatch at parallel {a},{b}")
        else:
            raise ReductionError(f"unknown reduction step {op!r}")
    return work.to_network()


def dump_log(log: Iterable[dict]) -> str:
    return "".join(json.dumps(step, sort_keys=True) + "\n" for step in log)


def load_log(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]
