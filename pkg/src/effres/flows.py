"""Currents: cycle space, induced-current projection, minimal flows, current paths."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import Network
from .operators import Current, VertexFunction, dissipation, divergence, drop
from .solvers import GroundedSystem


@dataclass(frozen=True)
class CycleBasis:
    """Fundamental cycles of a BFS spanning tree rooted at ``root``.

    ``cycles[i]`` is the +-1 characteristic current of the closed walk in
    ``vertex_cycles[i]``, closed by non-tree edge ``chords[i]``.
    """

    root: int
    tree_edges: np.ndarray
    chords: np.ndarray
    cycles: tuple
    vertex_cycles: tuple

    def __len__(self) -> int:
        return len(self.cycles)


def _bfs_tree(net: Network, root: int) -> tuple[np.ndarray, np.ndarray]:
    parent = np.full(net.n, -1, dtype=np.int64)
    depth = np.full(net.n, -1, dtype=np.int64)
    parent[root], depth[root] = root, 0
    queue = deque([root])
    A = net.adjacency
    while queue:
        x = queue.popleft()
        for y in A.indices[A.indptr[x] : A.indptr[x + 1]]:
            if depth[y] < 0:
                depth[y], parent[y] = depth[x] + 1, x
                queue.append(int(y))
    return parent, depth


def cycle_basis(net: Network, root: int = 0) -> CycleBasis:
    parent, depth = _bfs_tree(net, root)
    tree = set()
    for y in range(net.n):
        if y != root:
            tree.add(net.edge_index(int(parent[y]), y)[0])
    chords = [i for i in range(net.m) if i not in tree]
    cycles, walks = [], []
    for i in chords:
        u, v = (int(t) for t in net.edges[i])
        left, right = [u], [v]
        while left[-1] != right[-1]:
            if depth[left[-1]] >= depth[right[-1]]:
                left.append(int(parent[left[-1]]))
            else:
                right.append(int(parent[right[-1]]))
        # u -> ... -> lca -> ... -> v -> u
        walk = left + right[-2::-1] + [u]
        walks.append(tuple(walk))
        cycles.append(Current.path_indicator(net, walk))
    return CycleBasis(root, np.array(sorted(tree), dtype=np.int64), np.array(chords, dtype=np.int64), tuple(cycles), tuple(walks))


def cycle_condition(net: Network, I, basis: Optional[CycleBasis] = None) -> float:
    """max over basis cycles of |D(I, chi_gamma)|; zero exactly when I is induced."""
    basis = basis or cycle_basis(net)
    if not len(basis):
        return 0.0
    return max(abs(dissipation(net, I, chi)) for chi in basis.cycles)


def project_to_induced(net: Network, I, o: int = 0) -> tuple[VertexFunction, Current]:
    """The potential v grounded at ``o`` and the induced current drop(v) closest to I.

    v solves Lap v = div I, so drop(v) has the same divergence as I and
    I - drop(v) lies in the cycle space.
    """
    div = np.asarray(divergence(net, I), dtype=float)
    v = GroundedSystem(net, o).solve(div)
    v[o] = 0.0
    return VertexFunction(v, ground=o), drop(net, v)


def shortest_hop_path(net: Network, a: int, w: int) -> list[int]:
    parent, _ = _bfs_tree(net, a)
    out = [w]
    while out[-1] != a:
        out.append(int(parent[out[-1]]))
    return out[::-1]


def min_dissipation_flow(net: Network, a: int, w: int, o: Optional[int] = None) -> Current:
    """Unit flow a -> w of least dissipation: project any path flow onto induced currents."""
    if a == w:
        raise ValueError("flow needs distinct endpoints")
    chi = Current.path_indicator(net, shortest_hop_path(net, a, w))
    return project_to_induced(net, chi, w if o is None else o)[1]


def find_current_path(net: Network, v, a: int, w: int) -> list[int]:
    """A path a -> w along which v strictly decreases.

    Depth-first: at each vertex try neighbours with lower potential, largest
    current first, then lowest id; backtrack on dead ends.
    """
    vals = np.asarray(v, dtype=float)
    assert vals[a] > vals[w], "current paths need v(a) > v(w)"
    dead: set[int] = set()
    path = [a]
    options = {a: _downhill(net, vals, a)}
    while path:
        x = path[-1]
        if x == w:
            return path
        nxt = None
        while options[x]:
            y = options[x].pop(0)
            if y not in dead:
                nxt = y
                break
        if nxt is None:
            dead.add(x)
            path.pop()
            continue
        path.append(nxt)
        options[nxt] = _downhill(net, vals, nxt)
    raise AssertionError("no current path exists; v is not a dipole for (a, w)")


def _downhill(net: Network, vals: np.ndarray, x: int) -> list[int]:
    nbrs, cond = net.neighbors(x)
    cur = cond * (vals[x] - vals[nbrs])
    keep = cur > 0
    order = sorted(zip(-cur[keep], nbrs[keep].tolist()))
    return [int(y) for _, y in order]
