"""Random-walk layer: exact hitting probabilities, Monte-Carlo estimators,
path measures and the forward chain of a current.

Monte-Carlo walks are simulated in fixed blocks of ``BLOCK`` walks; block b
draws from a Philox stream keyed by (seed, b), so results depend only on the
seed and never on how blocks are scheduled across threads.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .network import Network
from .operators import Current, transition_matrix
from .solvers import DirichletSystem

BLOCK = 4096
Z95 = 1.959963984540054


@dataclass(frozen=True)
class WalkConfig:
    seed: int = 0
    samples: int = 100_000
    max_steps: int = 1_000_000
    threads: int = 1

    def block_rng(self, block: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed) & (2**64 - 1), spawn_key=(block,))
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class Estimate:
    """Monte-Carlo mean with its standard error and a 95% normal interval."""

    estimate: float
    stderr: float
    samples: int
    truncated: int
    exact: Optional[float] = None

    @property
    def ci95(self) -> tuple[float, float]:
        return self.estimate - Z95 * self.stderr, self.estimate + Z95 * self.stderr

    @property
    def truncation_warning(self) -> bool:
        total = self.samples + self.truncated
        return total > 0 and self.truncated > 0.01 * total

    @property
    def bias_bound(self) -> float:
        """Bound on the bias from dropping truncated walks when outcomes lie in [0, 1]."""
        total = self.samples + self.truncated
        return self.truncated / total if total else 0.0

    def within(self, value: float, sigmas: float = 3.0) -> bool:
        return abs(self.estimate - value) <= sigmas * self.stderr + 1e-15

    def to_dict(self) -> dict:
        out = {
            "estimate": self.estimate,
            "ci95": list(self.ci95),
            "samples": self.samples,
            "truncated": self.truncated,
        }
        if self.exact is not None:
            out["exact"] = self.exact
        return out


# -- exact quantities ------------------------------------------------------------


def path_probability(net: Network, path: Sequence[int]) -> float:
    """prod p(x_{k-1}, x_k); the empty product is 1."""
    prob = 1.0
    for x, y in zip(path[:-1], path[1:]):
        if not net.has_edge(int(x), int(y)):
            raise ValueError(f"vertices {x} and {y} are not adjacent")
        prob *= net.conductance_between(int(x), int(y)) / float(net.degree_weight[x])
    return prob


def _as_set(s) -> list[int]:
    if s is None:
        return []
    if isinstance(s, (int, np.integer)):
        return [int(s)]
    return sorted({int(t) for t in s})


def hitting_vector(net: Network, target, avoid) -> np.ndarray:
    """h(y) = P_y[hit target before avoid] for every vertex y.

    Free components that reach neither set (impossible on a connected
    network) would make the system singular.
    """
    tgt, av = _as_set(target), _as_set(avoid)
    if set(tgt) & set(av):
        raise ValueError("target and avoid sets must be disjoint")
    fixed = sorted(tgt + av)
    vals = [1.0 if x in set(tgt) else 0.0 for x in fixed]
    return DirichletSystem(net, fixed).solve(boundary_values=vals)


def hit_before_exact(net: Network, start: int, target, avoid) -> float:
    return float(hitting_vector(net, target, avoid)[start])


def escape_exact(net: Network, a: int, b: int) -> float:
    """P_a[tau_b < tau_a^+] by first-step decomposition."""
    if a == b:
        raise ValueError("escape probability needs a != b")
    h = hitting_vector(net, b, a)
    nbrs, cond = net.neighbors(a)
    return float(np.sum(cond * h[nbrs]) / net.degree_weight[a])


def restricted_escape_exact(net: Network, x: int, y: int, H: Iterable[int]) -> float:
    """P_x[first step leaves H, then hits y before H minus {y}] (returns to x also stop).

    This is P[x -> y] restricted to H^c; c(x) times it is the trace
    conductance added on top of c_xy.
    """
    H = set(_as_set(H))
    if x not in H or y not in H:
        raise ValueError("x and y must lie in H")
    if x == y:
        raise ValueError("restricted escape needs x != y")
    h = hitting_vector(net, y, sorted(H - {y}))
    nbrs, cond = net.neighbors(x)
    outside = np.array([int(t) not in H for t in nbrs], dtype=bool)
    return float(np.sum(cond[outside] * h[nbrs[outside]]) / net.degree_weight[x])


def trace_chain(net: Network, keep: Sequence[int]) -> np.ndarray:
    """Walk watched on ``keep``: P_A + P_B^T (I - P_D)^{-1} P_B.

    Entry (i, j) is the probability that the walk from keep[i] next visits
    the set ``keep`` at keep[j] (first step included).
    """
    keep = np.asarray(keep, dtype=np.int64)
    rest = np.setdiff1d(np.arange(net.n), keep)
    P = transition_matrix(net)
    A = P[keep][:, keep].toarray()
    if len(rest) == 0:
        return A
    Bout = P[keep][:, rest].toarray()
    Bin = P[rest][:, keep].toarray()
    D = P[rest][:, rest].toarray()
    return A + Bout @ np.linalg.solve(np.eye(len(rest)) - D, Bin)


# -- Monte Carlo -------------------------------------------------------------------


class _Sampler:
    """Vectorised next-step sampling via one global monotone search key."""

    def __init__(self, net: Network):
        P = transition_matrix(net)
        self.indptr, self.indices = P.indptr, P.indices
        rows = np.repeat(np.arange(net.n), np.diff(P.indptr))
        cum = np.empty(len(P.data))
        for x in range(net.n):
            s, e = P.indptr[x], P.indptr[x + 1]
            c = np.cumsum(P.data[s:e])
            c[-1] = 1.0
            cum[s:e] = c
        self.key = rows + cum

    def step(self, pos: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        j = np.searchsorted(self.key, pos + rng.random(len(pos)), side="right")
        return self.indices[j]


def _run_blocks(cfg: WalkConfig, fn: Callable[[int, int, np.random.Generator], np.ndarray]) -> np.ndarray:
    nblocks = -(-cfg.samples // BLOCK)
    sizes = [min(BLOCK, cfg.samples - b * BLOCK) for b in range(nblocks)]

    def job(b):
        return fn(b, sizes[b], cfg.block_rng(b))

    if cfg.threads > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            parts = list(pool.map(job, range(nblocks)))
    else:
        parts = [job(b) for b in range(nblocks)]
    return np.concatenate(parts) if parts else np.zeros(0)


def _summarise(outcomes: np.ndarray, exact: Optional[float] = None) -> Estimate:
    """``outcomes`` holds values with NaN marking truncated walks."""
    ok = outcomes[~np.isnan(outcomes)]
    trunc = int(len(outcomes) - len(ok))
    if len(ok) == 0:
        return Estimate(math.nan, math.inf, 0, trunc, exact)
    mean = float(ok.mean())
    sd = float(ok.std(ddof=1)) if len(ok) > 1 else 0.0
    est = Estimate(mean, sd / math.sqrt(len(ok)), len(ok), trunc, exact)
    if est.truncation_warning:
        warnings.warn(f"{trunc} walks hit the step cap; estimate is biased", RuntimeWarning, stacklevel=3)
    return est


def _first_hit_mc(net: Network, start: int, target: set, avoid: set, cfg: WalkConfig, leave_first: bool) -> Estimate:
    """Fraction of walks from ``start`` reaching ``target`` before ``avoid``.

    With ``leave_first`` the walk's own starting point only counts after
    the first step (escape-type events).
    """
    sampler = _Sampler(net)
    is_t = np.zeros(net.n, dtype=bool)
    is_t[list(target)] = True
    is_a = np.zeros(net.n, dtype=bool)
    is_a[list(avoid)] = True

    def block(b, size, rng):
        out = np.full(size, np.nan)
        pos = np.full(size, start, dtype=np.int64)
        live = np.arange(size)
        if not leave_first:
            out[is_t[pos]] = 1.0
            out[is_a[pos] & ~is_t[pos]] = 0.0
            live = live[np.isnan(out)]
        steps = 0
        while len(live) and steps < cfg.max_steps:
            pos[live] = sampler.step(pos[live], rng)
            steps += 1
            p = pos[live]
            hit, miss = is_t[p], is_a[p] & ~is_t[p]
            out[live[hit]] = 1.0
            out[live[miss]] = 0.0
            live = live[~(hit | miss)]
        return out

    return _summarise(_run_blocks(cfg, block))


def escape_probability(net: Network, a: int, b: int, mode: str = "exact", cfg: Optional[WalkConfig] = None):
    """P_a[walk reaches b before returning to a].

    ``mode="exact"`` returns a float; ``mode="mc"`` returns an :class:`Estimate`
    carrying the exact value for comparison.
    """
    exact = escape_exact(net, a, b)
    if mode == "exact":
        return exact
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    est = _first_hit_mc(net, a, {b}, {a}, cfg or WalkConfig(), leave_first=True)
    return Estimate(est.estimate, est.stderr, est.samples, est.truncated, exact)


def hit_before(net: Network, start: int, target, avoid, mode: str = "exact", cfg: Optional[WalkConfig] = None):
    exact = hit_before_exact(net, start, target, avoid)
    if mode == "exact":
        return exact
    est = _first_hit_mc(net, start, set(_as_set(target)), set(_as_set(avoid)), cfg or WalkConfig(), leave_first=False)
    return Estimate(est.estimate, est.stderr, est.samples, est.truncated, exact)


def restricted_escape(net: Network, x: int, y: int, H, mode: str = "exact", cfg: Optional[WalkConfig] = None):
    exact = restricted_escape_exact(net, x, y, H)
    if mode == "exact":
        return exact
    Hs = set(_as_set(H))
    sampler = _Sampler(net)
    cfg = cfg or WalkConfig()
    inH = np.zeros(net.n, dtype=bool)
    inH[list(Hs)] = True

    def block(b, size, rng):
        out = np.full(size, np.nan)
        pos = sampler.step(np.full(size, x, dtype=np.int64), rng)
        out[inH[pos]] = 0.0
        live = np.flatnonzero(~inH[pos])
        steps = 1
        while len(live) and steps < cfg.max_steps:
            pos[live] = sampler.step(pos[live], rng)
            steps += 1
            p = pos[live]
            stop = inH[p]
            out[live[stop]] = (p[stop] == y).astype(float)
            live = live[~stop]
        return out

    est = _summarise(_run_blocks(cfg, block))
    return Estimate(est.estimate, est.stderr, est.samples, est.truncated, exact)


@dataclass(frozen=True)
class MartingaleReport:
    h_x: float
    estimate: Estimate
    exact: float
    harmonic_defect: float
    left_region: int

    @property
    def ok(self) -> bool:
        return self.estimate.within(self.h_x) and self.left_region == 0


def martingale_check(
    net: Network, h, x: int, n: int, cfg: Optional[WalkConfig] = None, region: Optional[Iterable[int]] = None
) -> MartingaleReport:
    """Compare E[h(X_n) | X_0 = x] with h(x).

    h must be harmonic wherever the walk can stand before step n; the
    largest |Lap h| over those vertices is reported. Vertices outside
    ``region`` (default: all vertices where h is harmonic to 1e-9) count as
    leaving the truncation; such walks are flagged.
    """
    cfg = cfg or WalkConfig()
    hv = np.asarray(h, dtype=float)
    lap = np.abs(net.laplacian @ hv)
    scale = max(float(np.max(np.abs(hv))), 1.0)
    dist = net.hop_distances(x)
    reach = np.flatnonzero(dist <= n - 1)
    defect = float(lap[reach].max()) if len(reach) else 0.0
    if region is None:
        good = lap <= 1e-9 * scale * np.maximum(net.degree_weight, 1.0)
    else:
        good = np.zeros(net.n, dtype=bool)
        good[list(region)] = True
    P = transition_matrix(net)
    dist_vec = np.zeros(net.n)
    dist_vec[x] = 1.0
    for _ in range(n):
        dist_vec = P.T @ dist_vec
    exact = float(dist_vec @ hv)
    sampler = _Sampler(net)
    flagged = [0]

    def block(b, size, rng):
        pos = np.full(size, x, dtype=np.int64)
        bad = np.zeros(size, dtype=bool)
        for _ in range(n):
            bad |= ~good[pos]
            pos = sampler.step(pos, rng)
        flagged[0] += int(bad.sum())
        return hv[pos]

    cfg1 = WalkConfig(cfg.seed, cfg.samples, cfg.max_steps, 1)
    est = _summarise(_run_blocks(cfg1, block), exact)
    return MartingaleReport(float(hv[x]), est, exact, defect, flagged[0])


# -- forward chain of a current ---------------------------------------------------


class ForwardChain:
    """Markov chain moving along a current: x -> y with probability I(x,y)/act(x).

    act(x) is the total outflow sum_{I(x,y) > 0} I(x,y). For a unit flow it
    equals half of sum_y |I(x,y)| at every vertex that conserves current and
    equals 1 at the source. Vertices with no outflow are absorbing.
    """

    def __init__(self, I: Current):
        self.net = I.net
        self.current = I
        n = self.net.n
        e, val = self.net.edges, np.asarray(I, dtype=float)
        tail = np.where(val > 0, e[:, 0], e[:, 1])
        head = np.where(val > 0, e[:, 1], e[:, 0])
        mag = np.abs(val)
        on = mag > 0
        self._tail, self._head, self._mag = tail[on], head[on], mag[on]
        self.act = np.zeros(n)
        np.add.at(self.act, self._tail, self._mag)
        self._fwd: dict[int, list[tuple[int, float]]] = {x: [] for x in range(n)}
        for t, h, m in zip(self._tail.tolist(), self._head.tolist(), self._mag.tolist()):
            self._fwd[t].append((h, m))

    def forward_neighbors(self, x: int) -> list[int]:
        return sorted(h for h, _ in self._fwd[x])

    def transition(self, x: int, y: int) -> float:
        if self.act[x] == 0:
            return 0.0
        for h, m in self._fwd[x]:
            if h == y:
                return m / self.act[x]
        return 0.0

    def row_sums(self) -> np.ndarray:
        s = np.zeros(self.net.n)
        for x, lst in self._fwd.items():
            if self.act[x] > 0:
                s[x] = sum(m for _, m in lst) / self.act[x]
        return s

    def forward_laplacian(self, v) -> np.ndarray:
        """sum over forward neighbours y of c_xy (v(x) - v(y))."""
        vals = np.asarray(v, dtype=float)
        out = np.zeros(self.net.n)
        for x, lst in self._fwd.items():
            for y, _ in lst:
                out[x] += self.net.conductance_between(x, y) * (vals[x] - vals[y])
        return out

    def path_probability(self, path: Sequence[int]) -> float:
        prob = 1.0
        for x, y in zip(path[:-1], path[1:]):
            prob *= self.transition(int(x), int(y))
        return prob

    def paths(self, a: int, w: int, allowed: Optional[Callable[[int, int], bool]] = None) -> list[tuple[int, ...]]:
        """All forward paths a -> w (the orientation of an induced current has no cycles)."""
        out: list[tuple[int, ...]] = []
        stack = [(a, (a,))]
        while stack:
            x, p = stack.pop()
            if x == w:
                out.append(p)
                continue
            for y in sorted((h for h, _ in self._fwd[x]), reverse=True):
                if y in p or (allowed is not None and not allowed(x, y)):
                    continue
                stack.append((y, p + (y,)))
        return sorted(out)

    def surviving_probability(self, a: int, w: int, removed_edges: Iterable[tuple[int, int]]) -> float:
        """Total probability of current paths a -> w avoiding the removed edges."""
        gone = {tuple(sorted(map(int, e))) for e in removed_edges}
        return sum(
            self.path_probability(p)
            for p in self.paths(a, w, allowed=lambda x, y: tuple(sorted((x, y))) not in gone)
        )

    def edge_path_sums(self, a: int, w: int) -> dict[tuple[int, int], float]:
        """sum of P(gamma) over current paths a -> w through each oriented edge."""
        acc: dict[tuple[int, int], float] = {}
        for p in self.paths(a, w):
            pr = self.path_probability(p)
            for x, y in zip(p[:-1], p[1:]):
                acc[(x, y)] = acc.get((x, y), 0.0) + pr
        return acc


def forward_chain(I: Current) -> ForwardChain:
    if not np.any(np.asarray(I)):
        raise ValueError("forward chain needs a nonzero current")
    return ForwardChain(I)
