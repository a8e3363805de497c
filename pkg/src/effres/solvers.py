"""Linear solvers for dipoles, monopoles and finite-support projections,
plus the exact recursions for the geometric-integer defect vector and the
harmonic function on the (alpha, beta) ladder.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .network import ExhaustionPlan, Network, exhaustion
from .operators import VertexFunction, energy

DIRECT_LIMIT = 5000
CG_RESTARTS = 4


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (relative residual {residual:.3g})")
        self.residual = residual


class DirichletSystem:
    """Laplacian restricted to the free vertices, with ``fixed`` held as data.

    Solves ``(Lap v)(x) = f(x)`` for every free x given the values of v on
    ``fixed``. The reduced matrix is symmetric positive definite whenever
    every component of the free set touches a fixed vertex.

    Below ``direct_limit`` free vertices a sparse LU factorisation with a
    symmetric minimum-degree ordering is built once and reused; above it each
    solve runs Jacobi-preconditioned conjugate gradients.
    """

    def __init__(
        self,
        net: Network,
        fixed: Sequence[int],
        rtol: float = 1e-10,
        method: str = "auto",
        direct_limit: int = DIRECT_LIMIT,
    ):
        self.net = net
        self.rtol = rtol
        self.fixed = np.unique(np.asarray(fixed, dtype=np.int64))
        if len(self.fixed) == 0:
            raise ValueError("at least one fixed vertex is required")
        mask = np.ones(net.n, dtype=bool)
        mask[self.fixed] = False
        self.free = np.flatnonzero(mask)
        lap = net.laplacian
        self._A = lap[self.free][:, self.free].tocsc()
        self._B = lap[self.free][:, self.fixed].tocsc()
        if method == "auto":
            method = "direct" if len(self.free) <= direct_limit else "cg"
        self.method = method
        self._lu = None
        if method == "direct" and len(self.free):
            self._lu = sla.splu(self._A, permc_spec="MMD_AT_PLUS_A")
        elif method not in ("direct", "cg"):
            raise ValueError(f"unknown method {method!r}")
        self.last_residual = 0.0
        self._norm_A = None

    def _backward_error(self, x: np.ndarray, b: np.ndarray) -> float:
        """||A x - b||_inf / (||A||_inf ||x||_inf + ||b||_inf); hubs of huge degree make plain ||r|| / ||b|| misleading."""
        if self._norm_A is None:
            self._norm_A = float(abs(self._A).sum(axis=1).max())
        r = float(np.max(np.abs(self._A @ x - b)))
        scale = self._norm_A * float(np.max(np.abs(x))) + float(np.max(np.abs(b)))
        return r / max(scale, 1e-300)

    def _solve_free(self, b: np.ndarray) -> np.ndarray:
        if len(self.free) == 0:
            return np.zeros_like(b)
        if self._lu is not None:
            x = self._lu.solve(b)
        else:
            cols = b if b.ndim == 2 else b[:, None]
            diag = self._A.diagonal()
            M = sp.diags(1.0 / diag)
            out = np.empty_like(cols)
            for j in range(cols.shape[1]):
                bj = cols[:, j]
                xj = np.zeros_like(bj)
                # the recursive CG residual drifts on ill-conditioned systems; restart from the iterate
                for _ in range(CG_RESTARTS):
                    xj, info = sla.cg(self._A, bj, x0=xj, M=M, rtol=self.rtol, maxiter=20 * len(self.free))
                    res = self._backward_error(xj, bj)
                    if info == 0 and res <= self.rtol:
                        break
                if info != 0:
                    raise SolverError("conjugate gradients did not converge", res)
                out[:, j] = xj
            x = out if b.ndim == 2 else out[:, 0]
        res = self._backward_error(x, b)
        self.last_residual = res
        if not np.all(np.isfinite(x)) or res > max(1e3 * self.rtol, 1e-8):
            raise SolverError("reduced Laplacian solve failed", res)
        return x

    def solve(self, source=None, boundary_values=None) -> np.ndarray:
        """Full-length solution (shape ``(n,)`` or ``(n, k)``).

        ``source`` is f on all vertices (entries on fixed vertices ignored);
        ``boundary_values`` gives v on ``fixed`` in sorted order (default 0).
        """
        n = self.net.n
        if source is None:
            source = np.zeros(n)
        source = np.asarray(source, dtype=float)
        shape = (n,) + source.shape[1:]
        b = source[self.free].copy()
        v = np.zeros(shape)
        if boundary_values is not None:
            g = np.asarray(boundary_values, dtype=float)
            if g.ndim == 1 and b.ndim == 2:
                g = np.repeat(g[:, None], b.shape[1], axis=1)
            b = b - self._B @ g
            v[self.fixed] = g
        v[self.free] = self._solve_free(b)
        return v


class GroundedSystem(DirichletSystem):
    """Solve Lap v = f on a finite connected network with v(o) = 0.

    f must sum to zero; the equation at ``o`` then holds automatically.
    """

    def __init__(self, net: Network, o: int, **kw):
        super().__init__(net, [o], **kw)
        self.o = o

    def solve(self, source, boundary_values=None) -> np.ndarray:
        f = np.asarray(source, dtype=float)
        total = np.sum(f, axis=0)
        scale = max(float(np.max(np.abs(f))) if f.size else 0.0, 1e-300)
        assert np.all(np.abs(total) <= 1e-9 * scale * max(1, len(f))), "source must sum to zero"
        return super().solve(f)


def solve_dipole(net: Network, a: int, w: int, o: Optional[int] = None, **kw) -> VertexFunction:
    """Potential v with Lap v = delta_a - delta_w, grounded at ``o`` (default ``w``)."""
    if a == w:
        raise ValueError("dipole needs distinct endpoints")
    o = w if o is None else o
    f = np.zeros(net.n)
    f[a] += 1.0
    f[w] -= 1.0
    v = GroundedSystem(net, o, **kw).solve(f)
    v[o] = 0.0
    return VertexFunction(v, ground=o)


# -- infinite-network approximants -------------------------------------------


def solve_monopole_wired(
    net: Network, o: int, plan: ExhaustionPlan, k: int, sign: int = 1, **kw
) -> VertexFunction:
    """Monopole at ``o`` on the wired truncation G_k^W.

    Solves Lap w = sign * delta_o on G_k with every vertex outside G_k
    identified to a single vertex held at 0. The returned function lives on
    the whole network and vanishes off G_k (where it equals w(inf)).
    """
    H = exhaustion(net, plan, k)
    if len(H) == net.n:
        raise ValueError(f"level {k} exhausts the whole network; nothing to wire")
    wnet, ids, inf = net.wired(H)
    f = np.zeros(wnet.n)
    f[int(np.searchsorted(ids, o))] = float(sign)
    w_local = DirichletSystem(wnet, [inf], **kw).solve(f)
    w = np.zeros(net.n)
    w[ids] = w_local[: len(ids)]
    return VertexFunction(w)


def monopole_energies(
    net: Network, o: int, plan: ExhaustionPlan, levels: Iterable[int], sign: int = 1, **kw
) -> list[tuple[int, float]]:
    """``(k, E(w_k))`` for wired monopoles; nondecreasing in k."""
    return [(k, energy(net, solve_monopole_wired(net, o, plan, k, sign, **kw))) for k in levels]


def royden_split(
    net: Network, v, o: int, plan: ExhaustionPlan, k: int, **kw
) -> tuple[VertexFunction, VertexFunction]:
    """Split v into its energy projection onto functions supported in G_k and the rest.

    The projection f satisfies Lap f = Lap v on G_k and f = 0 outside it, so
    E(f, v - f) = 0. ``o`` must lie in G_k.
    """
    vals = np.asarray(v, dtype=float)
    H = exhaustion(net, plan, k)
    if o not in set(H.tolist()):
        raise ValueError("reference vertex must lie in G_k")
    if len(H) == net.n:
        fin = vals - vals[o]
        fin[o] = 0.0
        return VertexFunction(fin, ground=o), VertexFunction(vals - fin)
    outside = np.setdiff1d(np.arange(net.n), H)
    source = net.laplacian @ vals
    fin = DirichletSystem(net, outside, **kw).solve(source)
    return VertexFunction(fin), VertexFunction(vals - fin)


# -- defect vector on the geometric integers -----------------------------------


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class DefectSequence:
    """Exact (p_n, q_n) for the defect vector u(n) = q_n on (Z_+, c^n) or (Z, c^n).

    p_n = c^n (u(n) - u(n-1)) is the current on edge (n-1, n); the float
    mirrors are evaluated from the same recursion in double precision.
    """

    c: Fraction
    variant: str
    p: tuple
    q: tuple
    p_float: np.ndarray
    q_float: np.ndarray

    @property
    def r(self) -> Fraction:
        return 1 / self.c

    def u(self) -> list[Fraction]:
        return list(self.q)

    def laplacian_residuals_exact(self) -> list[Fraction]:
        """(Lap u)(n) + u(n) for n = 0..n_max-1, from the stencil on u itself."""
        c, q = self.c, self.q
        out = []
        for n in range(len(q) - 1):
            right = c ** (n + 1) * (q[n] - q[n + 1])
            if n == 0:
                left = right if self.variant == "full_line" else 0
            else:
                left = c**n * (q[n] - q[n - 1])
            out.append(left + right + q[n])
        return out

    def laplacian_residuals_float(self) -> np.ndarray:
        """Same residuals in double precision, using edge increments.

        The increments u(n) - u(n-1) = r^n p_n are carried directly; taking
        differences of the rounded u values would be amplified by c^n.
        """
        c = float(self.c)
        nmax = len(self.q_float) - 1
        inc = np.array([float(self.r) ** n * self.p_float[n] for n in range(nmax + 1)])
        out = np.empty(nmax)
        for n in range(nmax):
            right = -(c ** (n + 1)) * inc[n + 1]
            if n == 0:
                left = right if self.variant == "full_line" else 0.0
            else:
                left = c**n * inc[n]
            out[n] = left + right + self.q_float[n]
        return out

    def partial_energies(self) -> np.ndarray:
        """sum_{k<=n} r^k p_k^2 (one side of the line) for n = 1..n_max."""
        r = float(self.r)
        terms = [r**n * self.p_float[n] ** 2 for n in range(1, len(self.p_float))]
        return np.cumsum(terms)


def defect_sequence(c, variant: str = "half_line", n_max: int = 10) -> DefectSequence:
    """Defect vector of the geometric network: Lap u = -u with u(0) = 1."""
    c = _frac(c)
    if c <= 1:
        raise ValueError("defect sequence needs c > 1")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if variant not in ("half_line", "full_line"):
        raise ValueError(f"unknown variant {variant!r}")
    r = 1 / c
    p, q = [Fraction(0)], [Fraction(1)]
    rf = float(r)
    pf, qf = [0.0], [1.0]
    start = 0
    if variant == "full_line":
        p.append(Fraction(1, 2))
        q.append(1 + r / 2)
        pf.append(0.5)
        qf.append(1.0 + rf / 2)
        start = 1
    for n in range(start, n_max):
        pn = p[n] + q[n]
        p.append(pn)
        q.append(q[n] + r ** (n + 1) * pn)
        pfn = pf[n] + qf[n]
        pf.append(pfn)
        qf.append(qf[n] + rf ** (n + 1) * pfn)
    return DefectSequence(c, variant, tuple(p), tuple(q), np.array(pf), np.array(qf))


# -- harmonic function on the (alpha, beta) ladder -----------------------------


@dataclass(frozen=True)
class LadderHarmonic:
    """Nonconstant harmonic function on the ladder, top rail from the recursion.

    Bottom-rail values follow the antisymmetry u(y_n) = -1 - u(x_n). ``top``
    holds exact rationals u(x_0..x_{n_max}).
    """

    alpha: Fraction
    beta: Fraction
    top: tuple

    @property
    def n_max(self) -> int:
        return len(self.top) - 1

    def bottom(self) -> list[Fraction]:
        return [-1 - t for t in self.top]

    def function(self) -> VertexFunction:
        """Values on ``generators.ladder(alpha, beta, n_max)`` (ids 2n top, 2n+1 bottom)."""
        vals = np.empty(2 * len(self.top))
        vals[0::2] = [float(t) for t in self.top]
        vals[1::2] = [float(b) for b in self.bottom()]
        return VertexFunction(vals)

    def residuals(self) -> np.ndarray:
        """|Lap u| at every vertex except the truncation's last rung, evaluated exactly.

        Ordered x_0, y_0, x_1, y_1, ...; the stencil uses the network
        conductances alpha^n and beta^n directly.
        """
        a, b = self.alpha, self.beta
        rails = (list(self.top), self.bottom())
        out = []
        for n in range(self.n_max):
            for side in (0, 1):
                u, other = rails[side], rails[1 - side]
                s = b**n * (u[n] - other[n]) + a ** (n + 1) * (u[n] - u[n + 1])
                if n >= 1:
                    s += a**n * (u[n] - u[n - 1])
                out.append(abs(float(s)))
        return np.array(out)

    def top_rail_energies(self) -> np.ndarray:
        """Partial sums of alpha^{n+1} (u(x_{n+1}) - u(x_n))^2, exact then rounded."""
        a, u = self.alpha, self.top
        terms = [a ** (n + 1) * (u[n + 1] - u[n]) ** 2 for n in range(self.n_max)]
        acc, out = Fraction(0), []
        for t in terms:
            acc += t
            out.append(float(acc))
        return np.array(out)

    def partial_energies(self) -> np.ndarray:
        """Energy of the truncated ladder up to rung n, for n = 1..n_max."""
        a, b = self.alpha, self.beta
        top, bot = self.top, self.bottom()
        acc = b**0 * (top[0] - bot[0]) ** 2
        out = []
        for n in range(1, self.n_max + 1):
            acc += a**n * ((top[n] - top[n - 1]) ** 2 + (bot[n] - bot[n - 1]) ** 2)
            acc += b**n * (top[n] - bot[n]) ** 2
            out.append(float(acc))
        return np.array(out)

    def increment_bounds(self) -> np.ndarray:
        """Upper bounds on u(x_{n+1}) - u(x_n) for n = 0..n_max-1 from the growth estimate."""
        return np.array([_ladder_increment_bound(float(self.alpha), float(self.beta), n) for n in range(self.n_max)])

    def energy_bound(self, tol: float = 1e-16) -> float:
        """sum_n alpha^{n+1} B_n^2 for the increment bounds B_n, summed to convergence."""
        a, b = float(self.alpha), float(self.beta)
        total, n = 0.0, 0
        while True:
            term = a ** (n + 1) * _ladder_increment_bound(a, b, n) ** 2
            total += term
            if n > 10 and term < tol * total:
                return total
            n += 1
            if n > 100000:
                raise SolverError("energy bound series did not converge")


def _ladder_increment_bound(a: float, b: float, n: int) -> float:
    s = sum(2.0**k * (b**k - b**n) / (1 - b) for k in range(n))
    inner = 1 + b * (1 - b**n) / (1 - b) + (2 * b) ** n / a + 2 * (b / a) * s
    return inner / a ** (n + 1)


def ladder_harmonic(alpha, beta, n_max: int) -> LadderHarmonic:
    """Top-rail values by the increment recursion, u(x_0) = 0, u(x_1) = 1/alpha."""
    a, b = _frac(alpha), _frac(beta)
    if not a > 1 > b > 0:
        raise ValueError("ladder needs alpha > 1 > beta > 0")
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    u = [Fraction(0), 1 / a]
    for n in range(1, n_max):
        ratio = (b / a) ** n
        u.append(u[n] + (u[n] - u[n - 1]) / a + 2 / a * ratio * u[n] + ratio / a)
    return LadderHarmonic(a, b, tuple(u))
