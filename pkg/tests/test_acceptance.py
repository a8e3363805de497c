"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) for the summary alone.
"""

import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from effres import generators as gen
from effres.flows import cycle_basis, project_to_induced
from effres.lattice import black_hole_holds, lattice_R, lattice_Rinf
from effres.network import ExhaustionPlan, exhaustion
from effres.operators import Current, apply_laplacian, dissipation, energy, normal_derivatives
from effres.reduce import reduce_to_pair, schur_trace
from effres.resistance import deletion_bound, free_resistance, resistance_finite, wired_resistance
from effres.solvers import defect_sequence, ladder_harmonic, solve_monopole_wired
from effres.walk import WalkConfig, escape_probability, forward_chain, restricted_escape_exact
from effres.operators import drop
from effres.solvers import solve_dipole

from conftest import random_network


def _nets(count, seed, max_n=50):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield random_network(rng, int(rng.integers(2, max_n + 1))), rng


def c1_formulations():
    t0 = time.perf_counter()
    worst = 0.0
    for net, rng in _nets(200, 1):
        x, y = (int(t) for t in rng.choice(net.n, size=2, replace=False))
        worst = max(worst, resistance_finite(net, x, y)[1].max_relative_spread())
    dt = time.perf_counter() - t0
    return worst <= 1e-9 and dt < 10, f"max relative spread {worst:.1e}, {dt:.1f} s"


def c2_cycle():
    worst = 0.0
    for N in range(3, 51):
        net = gen.cycle(N)
        for k in range(1, N):
            worst = max(worst, abs(resistance_finite(net, 0, k)[0] - k * (N - k) / N))
    return worst <= 1e-10, f"max error {worst:.1e}"


def c3_deletion():
    before = resistance_finite(gen.deletion_example(), 0, 4)[0]
    after = resistance_finite(gen.deletion_example(deleted=True), 0, 3)[0]
    chain = forward_chain(drop(gen.deletion_example(), solve_dipole(gen.deletion_example(), 0, 4)))
    eps = chain.surviving_probability(0, 4, [(0, 2), (2, 3)])
    _, _, upper, ok = deletion_bound(before, after, eps)
    ok = ok and abs(before - 10 / 11) <= 1e-12 and abs(after - 1) <= 1e-12 and abs(upper - 110 / 81) <= 1e-12
    return ok, f"R = {before:.15f}, after = {after:.15f}, bound {upper:.12f}"


def c4_z3():
    t0 = time.perf_counter()
    rinf = lattice_Rinf(3)
    r111 = lattice_R(3, (0, 0, 0), (1, 1, 1))
    holds, _, _ = black_hole_holds(3, (1, 1, 1))
    dt = time.perf_counter() - t0
    ok = abs(rinf - 0.505462) <= 5e-4 and abs(r111 - 0.533416) <= 5e-4 and holds and dt < 60
    return ok, f"R_inf = {rinf:.7f}, R(0,(1,1,1)) = {r111:.7f} (target 0.533416), black hole {holds}, {dt:.1f} s"


def c5_neighbours():
    vals = [lattice_R(d, np.zeros(d), np.eye(d)[0]) for d in (1, 2, 3)]
    errs = [abs(v - 1 / d) for v, d in zip(vals, (1, 2, 3))]
    return max(errs) <= 2e-3, "R(0,e1) = " + ", ".join(f"{v:.6f}" for v in vals)


def c6_binary_tree():
    depth = 20
    net = gen.binary_tree(depth)
    plan = ExhaustionPlan(0)
    w = solve_monopole_wired(net, 0, plan, depth - 1)
    e = energy(net, w)
    fr = free_resistance(net, 0, 1, plan, tol=1e-9, k_max=depth - 1)
    wr = wired_resistance(net, 0, 1, plan, tol=1e-9, k_max=depth - 1)
    harm = fr.value - wr.value
    bdy = wr.value * fr.value / harm
    ok = abs(e - 1) <= 2e-5 and fr.value == 1.0 and abs(harm - 0.25) <= 1e-3 and abs(bdy - 3) <= 2e-2
    return ok, f"E(w) = {e:.8f}, R^F = {fr.value!r}, R^harm = {harm:.6f}, R^bdy = {bdy:.5f}"


def c7_geometric():
    k = 30
    net = gen.geometric_integers(2, k + 1)
    o = gen.geometric_index(0)
    w = np.asarray(solve_monopole_wired(net, o, ExhaustionPlan(o), k))
    err = max(abs(w[gen.geometric_index(n)] - 0.5 * 2.0 ** -abs(n)) for n in range(-k, k + 1))
    e = energy(net, w)
    return err <= 1e-8 and abs(e - 0.5) <= 1e-6, f"max |w - 2^-|n|/2| = {err:.1e}, E = {e:.10f}"


def c8_defect():
    seq = defect_sequence(2, "half_line", 25)
    exact = seq.u()[1:5] == [Fraction(3, 2), Fraction(17, 8), Fraction(173, 64), Fraction(3237, 1024)]
    res = float(np.max(np.abs(seq.laplacian_residuals_float())))
    return exact and res <= 1e-10, f"u(1..4) exact {exact}, float residual {res:.1e}"


def c9_probability():
    worst = 0.0
    for net, rng in _nets(100, 9):
        a, b = (int(t) for t in rng.choice(net.n, size=2, replace=False))
        p = escape_probability(net, a, b)
        worst = max(worst, abs(net.degree_weight[a] * p * resistance_finite(net, a, b)[0] - 1))
    mc_ok = True
    for i, (net, rng) in enumerate(_nets(3, 90, max_n=20)):
        a, b = (int(t) for t in rng.choice(net.n, size=2, replace=False))
        est = escape_probability(net, a, b, mode="mc", cfg=WalkConfig(seed=i, samples=100_000))
        mc_ok &= est.within(est.exact) and est.truncated == 0
    return worst <= 1e-9 and mc_ok, f"max |c P R - 1| = {worst:.1e}, MC within 3 sigma {mc_ok}"


def c10_trace():
    worst = 0.0
    for net, rng in _nets(50, 10, max_n=30):
        if net.n < 3:
            continue
        H = sorted(rng.choice(net.n, size=int(rng.integers(2, net.n + 1)), replace=False).tolist())
        T, _ = schur_trace(net, H)
        for i in range(len(H)):
            for j in range(len(H)):
                if i == j:
                    continue
                x, y = H[i], H[j]
                c = net.conductance_between(x, y) if net.has_edge(x, y) else 0.0
                c += net.degree_weight[x] * restricted_escape_exact(net, x, y, H)
                worst = max(worst, abs(c + T[i, j]) / max(1.0, abs(T[i, j])))
        x, y = H[0], H[1]
        g, _ = reduce_to_pair(net, x, y)
        r = resistance_finite(net, x, y)[0]
        worst = max(worst, abs(1 / g - r) / r)
    return worst <= 1e-9, f"max relative error {worst:.1e}"


def c11_flows():
    worst = 0.0
    for net, rng in _nets(50, 11):
        I = Current(net, rng.standard_normal(net.m))
        _, P = project_to_induced(net, I)
        rest = Current(net, np.asarray(I) - np.asarray(P))
        D = dissipation(net, I)
        worst = max(worst, abs(D - dissipation(net, P) - dissipation(net, rest)) / max(D, 1.0))
    families = [
        gen.path(6), gen.cycle(7), gen.lattice_box(2, 5), gen.lattice_box(3, 3), gen.binary_tree(4),
        gen.homogeneous_tree(3, 3), gen.geometric_integers(2, 5), gen.ladder(3, 0.5, 5), gen.star(4, 2.0, 2),
        gen.square_example(1, 2, 3, 4), gen.deletion_example(), gen.deletion_example(deleted=True),
    ]
    dims = all(len(cycle_basis(net)) == net.m - net.n + 1 for net in families)
    return worst <= 1e-9 and dims, f"max Pythagoras defect {worst:.1e}, cycle dimensions {dims}"


def c12_gauss_green():
    worst_e = worst_b = 0.0
    for net, rng in _nets(50, 12):
        u, v = rng.standard_normal((2, net.n))
        lap = np.asarray(apply_laplacian(net, v))
        scale = max(1.0, np.abs(u).max() * np.abs(lap).sum())
        worst_e = max(worst_e, abs(energy(net, u, v) - float(u @ lap)) / scale)
        H = exhaustion(net, ExhaustionPlan(int(rng.integers(net.n))), int(rng.integers(0, 3)))
        lu = np.asarray(apply_laplacian(net, u))
        bd, dn = normal_derivatives(net, H, u)
        inner = np.setdiff1d(H, bd)
        worst_b = max(worst_b, abs(lu[inner].sum() + dn.sum()) / max(1.0, np.abs(lu).sum()))
    return worst_e <= 1e-12 and worst_b <= 1e-12, f"energy identity {worst_e:.1e}, boundary sum {worst_b:.1e}"


def c13_ladder():
    lad = ladder_harmonic(3, Fraction(1, 2), 30)
    res = float(np.max(lad.residuals()))
    e = lad.top_rail_energies()
    bound = lad.energy_bound()
    ok = res < 1e-9 and bool(np.all(np.diff(e) > 0)) and e[-1] <= bound
    return ok, f"max |Lap u| {res:.1e}, partial energy {e[-1]:.6f} <= bound {bound:.6f}"


CRITERIA = [
    (1, "six-formulation equivalence", c1_formulations),
    (2, "cycle formula", c2_cycle),
    (3, "deletion example", c3_deletion),
    (4, "Z^3 constants", c4_z3),
    (5, "neighbour rule", c5_neighbours),
    (6, "binary tree suite", c6_binary_tree),
    (7, "geometric integers", c7_geometric),
    (8, "defect recursion", c8_defect),
    (9, "probability identity", c9_probability),
    (10, "trace consistency", c10_trace),
    (11, "flow decomposition", c11_flows),
    (12, "Gauss-Green exactness", c12_gauss_green),
    (13, "ladder harmonic", c13_ladder),
]


def _line(number, name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {number:2d} ({name}): {detail}"


@pytest.mark.parametrize("number, name, check", CRITERIA, ids=[f"c{n}" for n, _, _ in CRITERIA])
def test_criterion(number, name, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(number, name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for number, name, check in CRITERIA:
        ok, detail = check()
        failures += not ok
        print(_line(number, name, ok, detail), flush=True)
    sys.exit(1 if failures else 0)
