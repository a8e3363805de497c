import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from effres import generators as gen
from effres.network import (
    ExhaustionPlan,
    Network,
    NetworkError,
    ParseError,
    boundary_of,
    exhaustion,
    interior_of,
    parse_network,
    read_netx,
    serialize_network,
    write_netx,
)

from conftest import networks


# -- parsing -------------------------------------------------------------------


def test_parse_single_edge():
    net = parse_network("netx 1\ne 0 1 1.0\n")
    assert net.n == 2 and net.m == 1
    assert net.conductance_between(0, 1) == 1.0


def test_parse_merges_parallel_edges():
    net = parse_network("netx 1\ne 0 1 1.0\ne 1 0 2.0\n")
    assert net.m == 1
    assert net.conductance_between(0, 1) == 3.0


def test_parse_rejects_negative_conductance():
    with pytest.raises(ParseError) as info:
        parse_network("netx 1\ne 0 1 -1.0\n")
    assert info.value.lineno == 2


def test_parse_accepts_bytes_and_comments():
    net = parse_network(b"# two resistors\nnetx 1\n\ne 0 1 2.5\ne 1 2 0.5\n")
    assert net.n == 3
    assert net.conductance_between(1, 2) == 0.5


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("e 0 1 1\n", 1),
        ("netx 1\ne 0 1\n", 2),
        ("netx 1\ne 0 0 1.0\n", 2),
        ("netx 1\ne 0 1 1.0\nx 1 2 3\n", 3),
        ("netx 1\ne 0 a 1.0\n", 2),
        ("netx 1\ne 0 1 nan\n", 2),
    ],
)
def test_parse_errors_carry_line_numbers(text, lineno):
    with pytest.raises(ParseError) as info:
        parse_network(text)
    assert info.value.lineno == lineno
    assert f"line {lineno}" in str(info.value)


def test_parse_rejects_disconnected_graph_naming_vertices():
    with pytest.raises(NetworkError, match="vertices 0 and 2"):
        parse_network("netx 1\ne 0 1 1\ne 2 3 1\n")


def test_network_rejects_self_loop():
    with pytest.raises(NetworkError, match="self-loop"):
        Network(2, [(0, 1), (1, 1)], [1.0, 1.0])


@given(networks())
def test_round_trip_is_bit_exact(net):
    again = parse_network(serialize_network(net))
    assert again == net
    assert np.array_equal(again.conductance, net.conductance)


def test_netx_file_round_trip(tmp_path):
    net = gen.ladder(3.0, 0.5, 4)
    path = tmp_path / "ladder.netx"
    write_netx(net, path)
    assert read_netx(path) == net


def test_serialization_sorted_with_shortest_floats():
    net = Network.from_edges([(2, 1, 0.1), (1, 0, 1 / 3)])
    assert serialize_network(net) == "netx 1\ne 0 1 0.3333333333333333\ne 1 2 0.1\n"


# -- invariants ----------------------------------------------------------------


@given(networks())
def test_degree_weights_match_recomputation(net):
    assert net.check_degree_weights() <= 8 * np.finfo(float).eps * net.degree_weight.max()
    for x in range(net.n):
        nbrs, cond = net.neighbors(x)
        assert net.degree_weight[x] == pytest.approx(cond.sum(), rel=1e-15)


def test_network_is_immutable():
    net = gen.path(3)
    with pytest.raises(ValueError):
        net.conductance[0] = 5.0


def test_edge_index_orientation():
    net = gen.path(3)
    assert net.edge_index(0, 1) == (0, 1)
    assert net.edge_index(1, 0) == (0, -1)
    with pytest.raises(KeyError):
        net.edge_index(0, 2)


# -- generators ------------------------------------------------------------------


def test_cycle_four():
    net = gen.cycle(4)
    assert net.n == 4 and net.m == 4
    assert np.all(net.conductance == 1.0)
    assert np.all(net.degree == 2)


def test_geometric_half_line():
    net = gen.geometric_integers(2, 3, half=True)
    assert net.n == 4
    assert [net.conductance_between(i, i + 1) for i in range(3)] == [2.0, 4.0, 8.0]


def test_geometric_full_line_layout():
    net = gen.geometric_integers(2, 3)
    ix = gen.geometric_index
    assert net.n == 7
    for n in range(-3, 3):
        lo, hi = n, n + 1
        expected = 2.0 ** max(abs(lo), abs(hi))
        assert net.conductance_between(ix(lo), ix(hi)) == expected


def test_binary_tree_depth_zero_is_single_vertex():
    net = gen.binary_tree(0)
    assert net.n == 1 and net.m == 0


@pytest.mark.parametrize("depth", [1, 2, 5, 8])
def test_binary_tree_counts(depth):
    net = gen.binary_tree(depth)
    assert net.n == 2 ** (depth + 1) - 1
    assert net.m == net.n - 1
    assert net.degree[0] == 2


@pytest.mark.parametrize("q, depth", [(3, 3), (4, 2), (2, 5)])
def test_homogeneous_tree_counts(q, depth):
    net = gen.homogeneous_tree(q, depth)
    expected = 1 + sum(q * (q - 1) ** (k - 1) for k in range(1, depth + 1))
    assert net.n == expected
    interior = [x for x in range(net.n) if net.degree[x] > 1]
    assert all(net.degree[x] == q for x in interior)


@pytest.mark.parametrize("d, L", [(1, 5), (2, 4), (3, 3)])
def test_lattice_box_counts(d, L):
    net = gen.lattice_box(d, L)
    assert net.n == L**d
    assert net.m == d * (L - 1) * L ** (d - 1)


def test_ladder_layout():
    net = gen.ladder(3.0, 0.5, 3)
    assert net.n == 8 and net.m == 3 * 2 + 4
    assert net.conductance_between(2, 4) == 9.0
    assert net.conductance_between(3, 5) == 9.0
    assert net.conductance_between(4, 5) == 0.25


def test_star_layout():
    net = gen.star(3, 2.0, depth=2)
    assert net.n == 7
    assert net.conductance_between(0, 1) == 2.0
    assert net.conductance_between(1, 2) == 4.0
    assert net.conductance_between(0, 3) == 2.0


def test_examples_layout():
    sq = gen.square_example(1, 2, 3, 4)
    assert sq.conductance_between(0, 1) == 1.0
    assert sq.conductance_between(2, 3) == 0.25
    d = gen.deletion_example()
    assert (d.n, d.m) == (5, 6)
    assert (gen.deletion_example(deleted=True).n, gen.deletion_example(deleted=True).m) == (4, 4)


@pytest.mark.parametrize(
    "bad",
    ["cycle:N=2", "geometric_integers:c=1,span=3", "ladder:alpha=0.5,beta=0.2,length=3", "mystery", "path:N=x"],
)
def test_generator_rejects_bad_parameters(bad):
    with pytest.raises((gen.GeneratorError, ValueError)):
        gen.generate(bad)


def test_generator_spec_parsing():
    spec = gen.GeneratorSpec.parse("geometric_integers:c=2,span=5,half=true")
    assert spec.params == {"c": 2.0, "span": 5, "half": True}
    assert gen.generate(spec) == gen.geometric_integers(2, 5, half=True)


# -- exhaustions and boundaries -------------------------------------------------


def test_ball_about_middle_of_path():
    net = gen.path(5)
    assert exhaustion(net, ExhaustionPlan(2), 1).tolist() == [1, 2, 3]


def test_binary_tree_ball_radius_two():
    net = gen.binary_tree(3)
    # brute-force BFS oracle
    level = {0: 0}
    frontier = [0]
    while frontier:
        nxt = []
        for x in frontier:
            for y in net.neighbors(x)[0].tolist():
                if y not in level:
                    level[y] = level[x] + 1
                    nxt.append(y)
        frontier = nxt
    expected = sorted(x for x, d in level.items() if d <= 2)
    assert exhaustion(net, ExhaustionPlan(0), 2).tolist() == expected
    assert len(expected) == 7


def test_radius_zero_is_origin():
    net = gen.lattice_box(2, 5)
    o = gen.lattice_center(2, 5)
    assert exhaustion(net, ExhaustionPlan(o), 0).tolist() == [o]


@given(networks(), st.integers(0, 100))
def test_exhaustions_nested_connected_and_covering(net, seed):
    o = seed % net.n
    plan = ExhaustionPlan(o)
    prev = set()
    for k in range(net.n + 1):
        H = exhaustion(net, plan, k)
        assert prev <= set(H.tolist())
        net.induced(H)  # raises if disconnected
        prev = set(H.tolist())
    assert prev == set(range(net.n))


def test_boundary_all_vertices_is_empty():
    net = gen.cycle(6)
    assert len(boundary_of(net, range(6))) == 0


def test_boundary_of_path_prefix():
    net = gen.path(5)
    assert boundary_of(net, [0, 1, 2]).tolist() == [2]
    assert interior_of(net, [0, 1, 2]).tolist() == [0, 1]


def test_boundary_of_center_block():
    net = gen.lattice_box(2, 5)
    block = [gen.lattice_index(2, 5, (i, j)) for i in (1, 2, 3) for j in (1, 2, 3)]
    bd = boundary_of(net, block)
    perimeter = sorted(gen.lattice_index(2, 5, (i, j)) for i in (1, 2, 3) for j in (1, 2, 3) if (i, j) != (2, 2))
    assert bd.tolist() == perimeter


def test_wired_collapses_complement():
    net = gen.path(5)
    w, ids, inf = net.wired([0, 1, 2])
    assert ids.tolist() == [0, 1, 2] and inf == 3
    assert w.conductance_between(2, 3) == 1.0
    assert w.n == 4


def test_max_level_is_last_proper_ball():
    net = gen.binary_tree(4)
    plan = ExhaustionPlan(0)
    k = plan.max_level(net)
    assert k == 3
    assert len(exhaustion(net, plan, k)) < net.n
    assert len(exhaustion(net, plan, k + 1)) == net.n
