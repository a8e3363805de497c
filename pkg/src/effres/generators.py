"""Finite networks for the standard example families.

Vertex-id layouts (part of the public contract):

``path(N)``                 0 - 1 - ... - N-1
``cycle(N)``                0 .. N-1 in cyclic order
``lattice_box(d, L)``       row-major (C order) index of the coordinate in
                            {0..L-1}^d; see :func:`lattice_index`
``binary_tree(depth)``      heap order: root 0, children of i are 2i+1, 2i+2
``homogeneous_tree(q, D)``  breadth-first; root has q children, every other
                            non-leaf has q-1, so interior degrees are all q
``geometric_integers``      half line: id n for n = 0..span; full line:
                            interleaved 0, 1, -1, 2, -2, ... so the integer
                            n has id 2n-1 (n > 0) or -2n (n <= 0)
``ladder(a, b, L)``         top rail x_n = 2n, bottom rail y_n = 2n+1
``star(m, c, depth)``       centre 0; vertex at distance k on arm j is
                            1 + j*depth + (k-1)
``square_example``          x0 = 0 (source), x1 = 1, x2 = 2, x3 = 3 (sink)
``deletion_example``        alpha = 0, x1 = 1, x2 = 2, x3 = 3, omega = 4;
                            with ``deleted=1`` the isolated x2 is dropped
                            and ids become alpha 0, x1 1, x3 2, omega 3
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .network import Network


class GeneratorError(ValueError):
    pass


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise GeneratorError(msg)


def path(N: int, c: float = 1.0) -> Network:
    _need(N >= 1, "path needs N >= 1")
    i = np.arange(N - 1)
    return Network(N, np.column_stack([i, i + 1]), np.full(N - 1, float(c)))


def cycle(N: int, c: float = 1.0) -> Network:
    _need(N >= 3, "cycle needs N >= 3")
    i = np.arange(N)
    return Network(N, np.column_stack([i, (i + 1) % N]), np.full(N, float(c)))


def lattice_index(d: int, L: int, coord) -> int:
    return int(np.ravel_multi_index(tuple(int(t) for t in coord), (L,) * d))


def lattice_center(d: int, L: int) -> int:
    return lattice_index(d, L, [L // 2] * d)


def lattice_box(d: int, L: int, c: float = 1.0) -> Network:
    _need(d >= 1, "lattice needs d >= 1")
    _need(L >= 1, "lattice needs L >= 1")
    ids = np.arange(L**d).reshape((L,) * d)
    pairs = []
    for axis in range(d):
        a = np.take(ids, np.arange(L - 1), axis=axis).ravel()
        b = np.take(ids, np.arange(1, L), axis=axis).ravel()
        pairs.append(np.column_stack([a, b]))
    e = np.concatenate(pairs) if pairs else np.zeros((0, 2), dtype=np.int64)
    return Network(L**d, e, np.full(len(e), float(c)))


def binary_tree(depth: int, c: float = 1.0) -> Network:
    _need(depth >= 0, "binary tree needs depth >= 0")
    n = 2 ** (depth + 1) - 1
    child = np.arange(1, n)
    return Network(n, np.column_stack([(child - 1) // 2, child]), np.full(n - 1, float(c)))


def homogeneous_tree(degree: int, depth: int, c: float = 1.0) -> Network:
    _need(degree >= 2, "homogeneous tree needs degree >= 2")
    _need(depth >= 0, "homogeneous tree needs depth >= 0")
    parents = []
    level = [0]
    nxt = 1
    for gen in range(depth):
        new_level = []
        for p in level:
            k = degree if gen == 0 else degree - 1
            kids = list(range(nxt, nxt + k))
            nxt += k
            parents.extend((p, q) for q in kids)
            new_level.extend(kids)
        level = new_level
    e = np.array(parents, dtype=np.int64).reshape(-1, 2)
    return Network(nxt, e, np.full(len(e), float(c)))


def geometric_index(n: int) -> int:
    """Vertex id of the integer ``n`` in the full-line geometric network."""
    return 2 * n - 1 if n > 0 else -2 * n


def geometric_integers(c: float, span: int, half: bool = False) -> Network:
    """Integers with c_{n-1,n} = c^max(|n|,|n-1|), truncated to |n| <= span."""
    _need(c > 1, "geometric integers need c > 1")
    _need(span >= 1, "geometric integers need span >= 1")
    if half:
        n = np.arange(1, span + 1)
        return Network(span + 1, np.column_stack([n - 1, n]), float(c) ** n)
    rows = []
    for k in range(1, span + 1):
        w = float(c) ** k
        rows.append((geometric_index(k - 1), geometric_index(k), w))
        rows.append((geometric_index(-(k - 1)), geometric_index(-k), w))
    return Network.from_edges(rows, n=2 * span + 1)


def ladder(alpha: float, beta: float, length: int) -> Network:
    """Two rails with horizontal conductance alpha^n, rungs beta^n."""
    _need(alpha > 1 > beta > 0, "ladder needs alpha > 1 > beta > 0")
    _need(length >= 1, "ladder needs length >= 1")
    rows = []
    for n in range(length + 1):
        rows.append((2 * n, 2 * n + 1, float(beta) ** n))
        if n >= 1:
            w = float(alpha) ** n
            rows.append((2 * (n - 1), 2 * n, w))
            rows.append((2 * (n - 1) + 1, 2 * n + 1, w))
    return Network.from_edges(rows, n=2 * length + 2)


def star(m: int, c: float = 1.0, depth: int = 1) -> Network:
    """m copies of the half-line (Z_+, c^n) joined at their origins."""
    _need(m >= 1, "star needs m >= 1")
    _need(depth >= 1, "star needs depth >= 1")
    _need(c > 0, "star needs c > 0")
    rows = []
    for j in range(m):
        prev = 0
        for k in range(1, depth + 1):
            v = 1 + j * depth + (k - 1)
            rows.append((prev, v, float(c) ** k))
            prev = v
    return Network.from_edges(rows, n=1 + m * depth)


def square_example(r1: float = 1.0, r2: float = 2.0, r3: float = 3.0, r4: float = 4.0) -> Network:
    """Four resistors around a square, from x0 = 0 to x3 = 3.

    Resistances: r1 on (x0, x1), r2 on (x0, x2), r3 on (x1, x3), r4 on (x2, x3).
    """
    for r in (r1, r2, r3, r4):
        _need(r > 0, "resistances must be positive")
    return Network.from_edges([(0, 1, 1 / r1), (0, 2, 1 / r2), (1, 3, 1 / r3), (2, 3, 1 / r4)], n=4)


def deletion_example(deleted: bool = False) -> Network:
    """Five-vertex unit network before/after deleting the edges at x2."""
    if deleted:
        return Network.from_edges([(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)], n=4)
    return Network.from_edges(
        [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 4, 1.0), (2, 3, 1.0), (3, 4, 1.0)], n=5
    )


_FAMILIES = {
    "path": path,
    "cycle": cycle,
    "lattice_box": lattice_box,
    "binary_tree": binary_tree,
    "homogeneous_tree": homogeneous_tree,
    "geometric_integers": geometric_integers,
    "ladder": ladder,
    "star": star,
    "square_example": square_example,
    "deletion_example": deletion_example,
}

_INT_KEYS = {"N", "d", "L", "depth", "degree", "span", "length", "m"}
_BOOL_KEYS = {"half", "deleted"}


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    params: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> "GeneratorSpec":
        """Parse ``family:key=val,key=val`` (the parameter part is optional)."""
        family, _, rest = text.strip().partition(":")
        params: dict[str, Any] = {}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, val = item.partition("=")
            if not eq:
                raise GeneratorError(f"bad parameter {item!r}, expected key=value")
            key = key.strip()
            val = val.strip()
            if key in _BOOL_KEYS:
                params[key] = val.lower() in ("1", "true", "yes")
            elif key in _INT_KEYS:
                params[key] = int(val)
            else:
                params[key] = float(val)
        return cls(family, params)


def generate(spec) -> Network:
    """Build the network for a :class:`GeneratorSpec` or its string form."""
    if isinstance(spec, str):
        spec = GeneratorSpec.parse(spec)
    try:
        fn = _FAMILIES[spec.family]
    except KeyError:
        raise GeneratorError(f"unknown family {spec.family!r}") from None
    try:
        return fn(**spec.params)
    except TypeError as exc:
        raise GeneratorError(f"{spec.family}: {exc}") from None
