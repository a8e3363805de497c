import json
import subprocess
import sys

import numpy as np
import pytest

from effres import generators as gen
from effres.cli import dumps, run
from effres.lattice import lattice_Rinf
from effres.network import serialize_network
from effres.resistance import resistance_finite
from effres.solvers import solve_dipole


def call(*argv):
    code, out = run(list(argv))
    return code, json.loads(out) if out else None


def test_resistance_finite_on_cycle():
    code, out = call("resistance", "--gen", "cycle:N=5", "--pair", "0,2", "--mode", "finite")
    assert code == 0
    assert out["finite"] == pytest.approx(1.2, rel=1e-14)
    assert set(out["formulations"]) == {"potential_drop", "energy", "dissipation", "two_pin", "kappa", "sup"}


def test_result_matches_library_bit_for_bit():
    _, out = call("resistance", "--gen", "square_example:r1=1,r2=2,r3=3,r4=4", "--pair", "0,3")
    assert out["finite"] == resistance_finite(gen.square_example(1, 2, 3, 4), 0, 3)[0]
    _, out = call("solve", "dipole", "--gen", "cycle:N=6", "--pair", "0,3")
    assert out["values"] == np.asarray(solve_dipole(gen.cycle(6), 0, 3)).tolist()


def test_lattice_rinf():
    code, out = call("lattice", "rinf", "--d", "3")
    assert code == 0
    assert out["value"] == pytest.approx(0.505462, abs=5e-4)
    assert out["value"] == lattice_Rinf(3)


def test_walk_escape_exact():
    code, out = call("walk", "escape", "--gen", "path:N=3", "--pair", "0,2", "--mode", "exact")
    assert code == 0 and out["estimate"] == pytest.approx(0.5)


def test_walk_mc_seed_is_deterministic():
    args = ["walk", "escape", "--gen", "cycle:N=6", "--pair", "0,3", "--mode", "mc", "--seed", "5", "--samples", "5000"]
    a = run(args)
    b = run(["--threads", "3"] + args)
    assert a == b
    out = json.loads(a[1])
    assert out["ci95"][0] <= out["estimate"] <= out["ci95"][1]


def test_output_is_byte_identical_and_sorted():
    argv = ["resistance", "--gen", "binary_tree:depth=6", "--pair", "0,1", "--mode", "all", "--kmax", "5"]
    a, b = run(argv), run(argv)
    assert a == b
    keys = list(json.loads(a[1]).keys())
    assert keys == sorted(keys)


def test_resistance_all_reports_infinite_boundary_as_string():
    code, out = call("resistance", "--gen", "cycle:N=6", "--pair", "0,2", "--mode", "all")
    assert code == 0
    assert out["boundary"] == "inf"


def test_gen_and_input_round_trip(tmp_path):
    path = tmp_path / "net.netx"
    code, out = call("gen", "ladder:alpha=3,beta=0.5,length=4", "--out", str(path))
    assert code == 0
    assert path.read_text() == out["netx"] == serialize_network(gen.ladder(3, 0.5, 4))
    code, out = call("validate", "--input", str(path))
    assert code == 0 and out["valid"] and out["n"] == 10


def test_reduce_and_replay(tmp_path):
    log = tmp_path / "steps.jsonl"
    code, out = call("reduce", "--gen", "deletion_example", "--keep", "0,4", "--log", str(log))
    assert code == 0
    assert out["resistance"] == pytest.approx(10 / 11, rel=1e-13)
    code, rep = call("replay", str(log), "--gen", "deletion_example")
    assert code == 0 and rep["vertices"] == [0, 4]


def test_reduce_trace_onto_set():
    code, out = call("reduce", "--gen", "path:N=4", "--keep", "0,2,3")
    assert code == 0
    assert np.allclose(out["matrix"], [[0.5, -0.5, 0], [-0.5, 1.5, -1], [0, -1, 1]])


def test_flows_commands(tmp_path):
    code, out = call("flows", "minflow", "--gen", "cycle:N=4", "--pair", "0,2")
    assert code == 0 and out["dissipation"] == pytest.approx(1.0)
    code, out = call("flows", "cyclebasis", "--gen", "lattice_box:d=2,L=3")
    assert out["dimension"] == 12 - 9 + 1
    cur = tmp_path / "loop.cur"
    cur.write_text("c 0 1 1\nc 1 2 1\nc 2 3 1\nc 3 0 1\n")
    code, out = call("flows", "project", "--gen", "cycle:N=4", "--current", str(cur))
    assert code == 0 and out["dissipation"] == pytest.approx(0.0, abs=1e-20)


def test_solve_monopole_and_decompose():
    code, out = call("solve", "monopole", "--gen", "binary_tree:depth=8", "--origin", "0", "--level", "6")
    assert code == 0 and out["energy"] == pytest.approx(1 - 2.0**-7)
    code, out = call("decompose", "--gen", "binary_tree:depth=8", "--vertex", "1", "--depth", "4")
    assert out["energy_fin"] + out["energy_rest"] == pytest.approx(out["energy"])
    assert abs(out["cross"]) < 1e-9


def test_walk_hitprob_and_martingale(tmp_path):
    code, out = call("walk", "hitprob", "--gen", "path:N=5", "--start", "1", "--target", "4", "--avoid", "0")
    assert out["exact"] == pytest.approx(0.25)
    h = tmp_path / "h.vf"
    h.write_text("".join(f"v {i} 2.0\n" for i in range(5)))
    code, out = call("walk", "martingale", "--gen", "cycle:N=5", "--h", str(h), "--start", "0", "--samples", "4096")
    assert code == 0 and out["estimate"] == 2.0


def test_lattice_other_verbs():
    _, out = call("lattice", "R", "--d", "1", "--x", "0", "--y", "3")
    assert out["value"] == pytest.approx(3.0, abs=1e-6)
    _, out = call("lattice", "vx", "--d", "1", "--x", "1", "--y", "1")
    assert out["value"] == pytest.approx(1.0, abs=1e-9)
    _, out = call("lattice", "monopole", "--d", "3", "--grid", "32")
    assert out["value"] == pytest.approx(-0.252731, abs=5e-4)


@pytest.mark.parametrize(
    "argv, code",
    [
        (["frobnicate"], 2),
        (["resistance", "--gen", "cycle:N=5"], 2),
        (["resistance", "--gen", "cycle:N=5", "--pair", "0,9"], 3),
        (["resistance", "--gen", "mystery:N=5", "--pair", "0,1"], 3),
        (["lattice", "rinf", "--d", "2"], 3),
        (["resistance", "--gen", "binary_tree:depth=8", "--pair", "0,1", "--mode", "wired", "--kmax", "2"], 4),
    ],
)
def test_exit_codes(argv, code):
    assert run(argv)[0] == code


def test_non_convergence_carries_diagnostics():
    code, out = call("resistance", "--gen", "binary_tree:depth=8", "--pair", "0,1", "--mode", "wired", "--kmax", "2")
    assert code == 4
    assert "diagnostics" in out and out["diagnostics"]["traces"]["wired"]


def test_bad_input_file(tmp_path):
    bad = tmp_path / "bad.netx"
    bad.write_text("netx 1\ne 0 1 -2\n")
    assert run(["validate", "--input", str(bad)])[0] == 3


def test_dumps_encodes_special_floats():
    assert dumps({"b": float("inf"), "a": float("nan")}) == '{"a": null, "b": "inf"}'


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "effres", "resistance", "--gen", "path:N=3", "--pair", "0,2"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["finite"] == pytest.approx(2.0)
