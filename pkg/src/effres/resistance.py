"""Effective resistance in all its variants.

Finite networks get six cross-checked formulations. Infinite families are
approximated along an exhaustion G_1 c G_2 c ...: the free resistance uses
the induced subnetworks as they are, the wired resistance collapses the
complement of each G_k to one grounded vertex. Their difference is the
harmonic resistance and R^W R^F / R^harm the boundary resistance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .network import ExhaustionPlan, Network, exhaustion
from .operators import drop, energy, dissipation
from .solvers import DirichletSystem, GroundedSystem, SolverError, solve_dipole

PSEUDOINVERSE_LIMIT = 2000
MONOTONE_SLACK = 1e-9


@dataclass(frozen=True)
class Formulations:
    """The six equivalent expressions for R(x, y) on a finite network.

    ``kappa`` comes from the Moore-Penrose pseudoinverse of the Laplacian
    when the network has at most ``PSEUDOINVERSE_LIMIT`` vertices
    (``kappa_route == "pseudoinverse"``); otherwise it is copied from the
    two-pin solve (``"two_pin"``).
    """

    potential_drop: float
    energy: float
    dissipation: float
    two_pin: float
    kappa: float
    sup: float
    kappa_route: str

    def values(self) -> dict[str, float]:
        return {
            "potential_drop": self.potential_drop,
            "energy": self.energy,
            "dissipation": self.dissipation,
            "two_pin": self.two_pin,
            "kappa": self.kappa,
            "sup": self.sup,
        }

    def max_relative_spread(self) -> float:
        v = np.array(list(self.values().values()))
        return float((v.max() - v.min()) / max(abs(v).max(), 1e-300))


def resistance_finite(net: Network, x: int, y: int) -> tuple[float, Formulations]:
    """R(x, y) on a finite connected network, with all six formulations.

    The primary value is the potential drop v(x) - v(y) for Lap v = delta_x - delta_y.
    """
    if x == y:
        return 0.0, Formulations(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, "trivial")
    v = np.asarray(solve_dipole(net, x, y), dtype=float)
    r1 = float(v[x] - v[y])
    r2 = energy(net, v)
    r3 = dissipation(net, drop(net, v))
    u = DirichletSystem(net, sorted((x, y))).solve(boundary_values=[1.0, 0.0] if x < y else [0.0, 1.0])
    eu = energy(net, u)
    r4 = 1.0 / eu
    if net.n <= PSEUDOINVERSE_LIMIT:
        b = np.zeros(net.n)
        b[x], b[y] = 1.0, -1.0
        Lp = np.linalg.pinv(net.laplacian_dense(), hermitian=True)
        r5, route = float(b @ Lp @ b), "pseudoinverse"
    else:
        r5, route = r4, "two_pin"
    vstar = u / math.sqrt(eu)
    r6 = float((vstar[x] - vstar[y]) ** 2)
    return r1, Formulations(r1, r2, r3, r4, r5, r6, route)


def resistance_matrix(net: Network, o: int = 0) -> np.ndarray:
    """All pairwise resistances via R(x, y) = E(v_x - v_y) for grounded dipoles v_x.

    With the Gram matrix M(x, y) = <v_x, v_y>_E = v_x(y) this reads
    R = M_xx + M_yy - 2 M_xy.
    """
    n = net.n
    rhs = np.eye(n)
    rhs[o, :] -= 1.0
    M = GroundedSystem(net, o).solve(rhs)
    M[o, :] = 0.0
    M = 0.5 * (M + M.T)
    d = np.diag(M)
    R = d[:, None] + d[None, :] - 2 * M
    np.fill_diagonal(R, 0.0)
    return R


def trace_resistance(net: Network, x: int, y: int) -> float:
    """1 / |off-diagonal| of the Schur complement of Lap onto {x, y}."""
    from .reduce import schur_trace

    if x == y:
        return 0.0
    T, _ = schur_trace(net, [x, y])
    c = -T[0, 1]
    assert c > 0, "trace conductance must be positive on a connected network"
    return 1.0 / c


# -- exhaustion limits ---------------------------------------------------------


@dataclass
class ExhaustionResult:
    value: float
    trace: list[tuple[int, float]]
    converged: bool
    exhausted: bool = False


def _pair_levels(net: Network, x: int, y: int, plan: ExhaustionPlan, k_max: int):
    """Yield (k, G_k) for the levels containing x and y, stopping once G_k is everything."""
    for k in range(1, k_max + 1):
        H = exhaustion(net, plan, k)
        members = set(H.tolist())
        if x in members and y in members:
            yield k, H
        if len(H) == net.n:
            return


def _exhaust(net, x, y, plan, tol, k_max, level_value, direction) -> ExhaustionResult:
    trace: list[tuple[int, float]] = []
    converged = exhausted = False
    for k, H in _pair_levels(net, x, y, plan, k_max):
        val = level_value(H)
        if trace:
            prev = trace[-1][1]
            slack = MONOTONE_SLACK * max(abs(prev), 1.0)
            assert direction * (val - prev) >= -slack, f"exhaustion sequence not monotone at level {k}"
        trace.append((k, val))
        if len(H) == net.n:
            converged = exhausted = True
            break
        if len(trace) >= 2 and abs(trace[-1][1] - trace[-2][1]) < tol:
            converged = True
            break
    if not trace:
        raise ValueError("no exhaustion level up to k_max contains both vertices")
    return ExhaustionResult(trace[-1][1], trace, converged, exhausted)


def free_resistance(
    net: Network, x: int, y: int, plan: ExhaustionPlan, tol: float = 1e-8, k_max: int = 30
) -> ExhaustionResult:
    """lim_k R on the induced subnetworks G_k; the sequence is nonincreasing."""

    def level(H):
        sub, ids = net.induced(H)
        return resistance_finite(sub, int(np.searchsorted(ids, x)), int(np.searchsorted(ids, y)))[0]

    return _exhaust(net, x, y, plan, tol, k_max, level, -1)


def wired_resistance(
    net: Network, x: int, y: int, plan: ExhaustionPlan, tol: float = 1e-8, k_max: int = 30
) -> ExhaustionResult:
    """lim_k R on G_k with the complement shorted to one vertex; nondecreasing."""

    def level(H):
        sub, ids, _ = net.wired(H)
        a, b = int(np.searchsorted(ids, x)), int(np.searchsorted(ids, y))
        v = np.asarray(solve_dipole(sub, a, b), dtype=float)
        return float(v[a] - v[b])

    return _exhaust(net, x, y, plan, tol, k_max, level, +1)


# -- report --------------------------------------------------------------------


@dataclass
class ResistanceReport:
    """All resistance variants for one pair. ``boundary`` is ``inf`` when R^harm vanishes."""

    pair: tuple[int, int]
    finite: Optional[float]
    free: float
    wired: float
    trace: float
    harmonic: float
    boundary: float
    traces: dict[str, list[tuple[int, float]]] = field(default_factory=dict)
    converged: dict[str, bool] = field(default_factory=dict)
    tol: float = 1e-8
    k_max: int = 30

    @property
    def boundary_infinite(self) -> bool:
        return math.isinf(self.boundary)

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "finite": self.finite,
            "free": self.free,
            "wired": self.wired,
            "trace": self.trace,
            "harmonic": self.harmonic,
            "boundary": "inf" if self.boundary_infinite else self.boundary,
            "traces": {k: [[a, b] for a, b in v] for k, v in self.traces.items()},
            "converged": dict(self.converged),
            "tol": self.tol,
            "k_max": self.k_max,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def resistance_report(
    net: Network,
    x: int,
    y: int,
    plan: Optional[ExhaustionPlan] = None,
    tol: float = 1e-8,
    k_max: int = 30,
    harmonic_floor: Optional[float] = None,
) -> ResistanceReport:
    """Assemble every variant for (x, y).

    ``finite`` and ``trace`` are evaluated on ``net`` itself, so they are only
    omitted (None) for networks too large for a direct solve. R^harm below
    ``harmonic_floor`` (default 10 * tol) counts as zero and R^bdy = inf.
    """
    plan = plan or ExhaustionPlan(origin=x)
    fr = free_resistance(net, x, y, plan, tol, k_max)
    wr = wired_resistance(net, x, y, plan, tol, k_max)
    for (k1, f), (k2, w) in zip(fr.trace, wr.trace):
        assert k1 != k2 or w <= f + 1e-9 * max(1.0, f), f"wired exceeds free at level {k1}"
    try:
        finite = resistance_finite(net, x, y)[0]
        tr = trace_resistance(net, x, y)
    except (SolverError, MemoryError):
        finite, tr = None, float("nan")
    harm = fr.value - wr.value
    floor = 10 * tol if harmonic_floor is None else harmonic_floor
    if harm <= floor:
        bdy = float("inf")
    else:
        bdy = wr.value * fr.value / harm
    return ResistanceReport(
        pair=(x, y),
        finite=finite,
        free=fr.value,
        wired=wr.value,
        trace=tr,
        harmonic=harm,
        boundary=bdy,
        traces={"free": fr.trace, "wired": wr.trace},
        converged={"free": fr.converged, "wired": wr.converged},
        tol=tol,
        k_max=k_max,
    )


# -- property checks -----------------------------------------------------------


@dataclass
class MetricReport:
    checked: int
    violations: list[tuple[int, int, int, float]]
    asymmetry: float
    min_offdiagonal: float

    @property
    def ok(self) -> bool:
        return not self.violations and self.asymmetry <= 1e-9 and self.min_offdiagonal > 0


def check_metric(
    net: Network, triples: Optional[Iterable[Sequence[int]]] = None, samples: int = 2000, seed: int = 0
) -> MetricReport:
    """Triangle inequality, symmetry and positivity of R.

    Without ``triples`` every ordered triple is checked for networks of at
    most 30 vertices, otherwise ``samples`` random ones.
    """
    R = resistance_matrix(net)
    n = net.n
    if triples is None:
        if n <= 30:
            triples = ((a, b, c) for a in range(n) for b in range(n) for c in range(n))
        else:
            rng = np.random.default_rng(seed)
            triples = rng.integers(0, n, size=(samples, 3)).tolist()
    bad, count = [], 0
    for a, b, c in triples:
        count += 1
        gap = R[a, c] - R[a, b] - R[b, c]
        if gap > 1e-9 * max(1.0, R[a, c]):
            bad.append((a, b, c, float(gap)))
    off = R[~np.eye(n, dtype=bool)]
    return MetricReport(count, bad, float(np.max(np.abs(R - R.T))), float(off.min()) if off.size else math.inf)


@dataclass
class SemidefiniteReport:
    trials: int
    max_value: float
    scale: float

    @property
    def ok(self) -> bool:
        return self.max_value <= 1e-9 * self.scale


def check_negative_semidefinite(
    net: Network, F: Iterable[int], trials: int = 100, seed: int = 0
) -> SemidefiniteReport:
    """max over random f on F with sum 0 of sum f(x) R(x, y) f(y)."""
    F = np.array(sorted(set(F)), dtype=np.int64)
    R = resistance_matrix(net)[np.ix_(F, F)]
    rng = np.random.default_rng(seed)
    worst = -math.inf if trials else 0.0
    scale = max(float(np.max(R)) if R.size else 0.0, 1e-300)
    for _ in range(trials):
        f = rng.standard_normal(len(F))
        f -= f.mean()
        f /= max(np.linalg.norm(f), 1e-300)
        worst = max(worst, float(f @ R @ f))
    return SemidefiniteReport(trials, worst, scale)


def geodesic_bound_gap(net: Network, x: int, y: int) -> float:
    """Weighted shortest-path resistance minus R(x, y) (nonnegative; zero on trees)."""
    import scipy.sparse.csgraph as csg

    W = net.adjacency.copy()
    W.data = 1.0 / W.data
    d = csg.shortest_path(W, directed=False, indices=[x])[0, y]
    return float(d - resistance_finite(net, x, y)[0])


def deletion_bound(before: float, after: float, epsilon: float) -> tuple[float, float, float, bool]:
    """R_before <= R_after <= R_before / epsilon^2 for the surviving current fraction epsilon."""
    upper = before / epsilon**2
    tol = 1e-12 * max(1.0, upper)
    return before, after, upper, before <= after + tol and after <= upper + tol

