"""Command-line front end; every verb prints one JSON document on stdout.

Exit codes: 0 success, 2 usage, 3 bad input, 4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import flows, lattice, reduce, resistance, solvers, walk
from .generators import GeneratorError, generate
from .network import ExhaustionPlan, Network, NetworkError, exhaustion, read_netx, serialize_network
from .operators import Current, dissipation, energy, parse_current, parse_vertex_function

EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 2, 3, 4


class InputError(Exception):
    pass


class NumericError(Exception):
    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


def _clean(obj):
    """Make a value JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, allow_nan=False)


def _ints(text: str, count: Optional[int] = None) -> list[int]:
    try:
        out = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None
    if count is not None and len(out) != count:
        raise InputError(f"expected {count} integers, got {text!r}")
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _load(args) -> Network:
    if getattr(args, "gen", None):
        return generate(args.gen)
    if getattr(args, "input", None):
        return read_netx(args.input)
    raise InputError("give a network with --gen family:key=val,... or --input PATH")


def _check_vertices(net: Network, *vs: int) -> None:
    for v in vs:
        if not 0 <= v < net.n:
            raise InputError(f"vertex {v} out of range 0..{net.n - 1}")


def _plan(args, default_origin: int) -> ExhaustionPlan:
    o = args.origin if getattr(args, "origin", None) is not None else default_origin
    return ExhaustionPlan(origin=o)


# -- verbs ---------------------------------------------------------------------


def cmd_gen(args) -> dict:
    net = generate(args.spec)
    text = serialize_network(net)
    if args.out:
        Path(args.out).write_text(text)
    return {"n": net.n, "m": net.m, "netx": text}


def cmd_validate(args) -> dict:
    net = _load(args)
    return {"valid": True, "n": net.n, "m": net.m, "degree_weight_defect": net.check_degree_weights()}


def cmd_resistance(args) -> dict:
    net = _load(args)
    x, y = _ints(args.pair, 2)
    _check_vertices(net, x, y)
    plan = _plan(args, x)
    out: dict = {"pair": [x, y]}
    if args.mode == "finite":
        val, six = resistance.resistance_finite(net, x, y)
        out["finite"] = val
        out["formulations"] = six.values()
    elif args.mode == "trace":
        out["trace"] = resistance.trace_resistance(net, x, y)
    elif args.mode in ("free", "wired"):
        fn = resistance.free_resistance if args.mode == "free" else resistance.wired_resistance
        res = fn(net, x, y, plan, args.tol, args.kmax)
        out[args.mode] = res.value
        out["traces"] = {args.mode: [list(t) for t in res.trace]}
        out["converged"] = {args.mode: res.converged}
        if not res.converged:
            raise NumericError(f"{args.mode} resistance did not converge", out)
    else:
        rep = resistance.resistance_report(net, x, y, plan, args.tol, args.kmax)
        out = rep.to_dict()
        if not all(rep.converged.values()):
            raise NumericError("exhaustion did not converge", out)
    return out


def cmd_solve(args) -> dict:
    net = _load(args)
    if args.kind == "dipole":
        if not args.pair:
            raise InputError("solve dipole needs --pair a,w")
        a, w = _ints(args.pair, 2)
        o = w if args.ground is None else args.ground
        _check_vertices(net, a, w, o)
        v = solvers.solve_dipole(net, a, w, o)
        return {"kind": "dipole", "pair": [a, w], "ground": o, "values": np.asarray(v), "energy": energy(net, v)}
    o = args.origin if args.origin is not None else 0
    _check_vertices(net, o)
    if args.level is None:
        raise InputError("solve monopole needs --level k")
    w = solvers.solve_monopole_wired(net, o, ExhaustionPlan(origin=o), args.level)
    return {"kind": "monopole", "origin": o, "level": args.level, "values": np.asarray(w), "energy": energy(net, w)}


def cmd_reduce(args) -> dict:
    net = _load(args)
    keep = _ints(args.keep)
    _check_vertices(net, *keep)
    if len(keep) == 2:
        c, log = reduce.reduce_to_pair(net, keep[0], keep[1])
        if args.log:
            Path(args.log).write_text(reduce.dump_log(log))
        return {"keep": keep, "conductance": c, "resistance": 1.0 / c if c > 0 else math.inf, "steps": len(log)}
    T, traced = reduce.schur_trace(net, keep)
    return {"keep": keep, "matrix": T, "netx": serialize_network(traced)}


def cmd_flows(args) -> dict:
    net = _load(args)
    if args.kind == "cyclebasis":
        basis = flows.cycle_basis(net)
        return {"dimension": len(basis), "cycles": [list(c) for c in basis.vertex_cycles]}
    if args.kind == "minflow":
        if not args.pair:
            raise InputError("flows minflow needs --pair a,w")
        a, w = _ints(args.pair, 2)
        _check_vertices(net, a, w)
        I = flows.min_dissipation_flow(net, a, w)
        return {"pair": [a, w], "current": _current_rows(I), "dissipation": dissipation(net, I)}
    if not args.current:
        raise InputError("flows project needs --current PATH")
    I = parse_current(net, Path(args.current).read_text())
    o = args.ground if args.ground is not None else 0
    v, P = flows.project_to_induced(net, I, o)
    return {
        "ground": o,
        "potential": np.asarray(v),
        "current": _current_rows(P),
        "dissipation": dissipation(net, P),
        "dissipation_input": dissipation(net, I),
    }


def _current_rows(I: Current) -> list:
    return [[u, v, x] for (u, v), x in zip(I.net.edges.tolist(), np.asarray(I).tolist())]


def cmd_walk(args) -> dict:
    net = _load(args)
    cfg = walk.WalkConfig(seed=args.seed, samples=args.samples, max_steps=args.max_steps, threads=args.threads)
    if args.kind == "escape":
        if not args.pair:
            raise InputError("walk escape needs --pair a,b")
        a, b = _ints(args.pair, 2)
        _check_vertices(net, a, b)
        res = walk.escape_probability(net, a, b, args.mode, cfg)
    elif args.kind == "hitprob":
        if args.start is None or not args.target:
            raise InputError("walk hitprob needs --start and --target")
        tgt, av = _ints(args.target), _ints(args.avoid or "")
        _check_vertices(net, args.start, *tgt, *av)
        res = walk.hit_before(net, args.start, tgt, av, args.mode, cfg)
    else:
        if not args.h or args.start is None:
            raise InputError("walk martingale needs --h PATH and --start")
        h = parse_vertex_function(Path(args.h).read_text(), net.n)
        rep = walk.martingale_check(net, h, args.start, args.steps, cfg)
        out = rep.estimate.to_dict()
        out.update({"h_x": rep.h_x, "harmonic_defect": rep.harmonic_defect, "left_region": rep.left_region})
        return out
    if isinstance(res, walk.Estimate):
        out = res.to_dict()
        if res.truncation_warning:
            print(
                f"warning: more than 1% of walks hit the step cap (bias at most {res.bias_bound:.3g})",
                file=sys.stderr,
            )
        return out
    return {"estimate": res, "exact": res}


def cmd_lattice(args) -> dict:
    d = args.d
    grid = lattice.QuadratureGrid(d, args.grid) if args.grid else None
    if args.kind == "rinf":
        val, err = lattice.lattice_Rinf(d, grid, with_error=True)
        return {"d": d, "value": val, "error": err}
    x = _ints(args.x) if args.x else [0] * d
    if args.kind == "monopole":
        val, err = lattice.lattice_monopole(d, x, grid, with_error=True)
        return {"d": d, "x": x, "value": val, "error": err}
    y = _ints(args.y) if args.y else [0] * d
    if args.kind == "R":
        return {"d": d, "x": x, "y": y, "value": lattice.lattice_R(d, x, y, grid)}
    return {"d": d, "x": x, "y": y, "value": lattice.lattice_vx(d, x, y, grid)}


def cmd_decompose(args) -> dict:
    """Split the energy kernel v_x into its finite-support part on G_depth and the rest."""
    net = _load(args)
    o = args.origin if args.origin is not None else 0
    x = args.vertex
    _check_vertices(net, x, o)
    v = solvers.solve_dipole(net, x, o, o)
    fin, harm = solvers.royden_split(net, v, o, ExhaustionPlan(origin=o), args.depth)
    return {
        "vertex": x,
        "origin": o,
        "depth": args.depth,
        "support": len(exhaustion(net, ExhaustionPlan(origin=o), args.depth)),
        "energy": energy(net, v),
        "energy_fin": energy(net, fin),
        "energy_rest": energy(net, harm),
        "cross": energy(net, fin, harm),
    }


def cmd_replay(args) -> dict:
    net = _load(args)
    steps = reduce.load_log(Path(args.log).read_text())
    out, ids = reduce.replay(net, steps)
    return {"steps": len(steps), "vertices": ids, "netx": serialize_network(out)}


# -- parser --------------------------------------------------------------------


def _net_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gen", help="generator spec family:key=val,...")
    g.add_argument("--input", help="NETX file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="effres", description="Effective resistance toolkit")
    parser.add_argument("--threads", type=int, default=1, help="worker cap")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("gen", help="build a network from a generator spec")
    p.add_argument("spec")
    p.add_argument("--out", help="also write NETX here")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate", help="parse and check a network")
    _net_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("resistance", help="effective resistance between two vertices")
    _net_args(p)
    p.add_argument("--pair", required=True)
    p.add_argument("--mode", choices=["finite", "free", "wired", "trace", "all"], default="finite")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--kmax", type=int, default=30)
    p.add_argument("--origin", type=int, help="exhaustion centre (default: first vertex of the pair)")
    p.set_defaults(func=cmd_resistance)

    p = sub.add_parser("solve", help="dipole or wired monopole potentials")
    p.add_argument("kind", choices=["dipole", "monopole"])
    _net_args(p)
    p.add_argument("--pair")
    p.add_argument("--ground", type=int)
    p.add_argument("--origin", type=int)
    p.add_argument("--level", type=int)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("reduce", help="reduce to a pair or trace onto a vertex set")
    _net_args(p)
    p.add_argument("--keep", required=True)
    p.add_argument("--log", help="write the reduction log (JSON lines) here")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("flows", help="minimal flows, projections, cycle bases")
    p.add_argument("kind", choices=["minflow", "project", "cyclebasis"])
    _net_args(p)
    p.add_argument("--pair")
    p.add_argument("--current", help="current file ('c u v value' lines)")
    p.add_argument("--ground", type=int)
    p.set_defaults(func=cmd_flows)

    p = sub.add_parser("walk", help="random-walk probabilities")
    p.add_argument("kind", choices=["escape", "hitprob", "martingale"])
    _net_args(p)
    p.add_argument("--pair")
    p.add_argument("--start", type=int)
    p.add_argument("--target")
    p.add_argument("--avoid")
    p.add_argument("--h", help="vertex function file for martingale checks")
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--mode", choices=["exact", "mc"], default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--max-steps", dest="max_steps", type=int, default=1_000_000)
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("lattice", help="Z^d quantities by quadrature")
    p.add_argument("kind", choices=["R", "rinf", "vx", "monopole"])
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--grid", type=int, help="points per axis (even)")
    p.add_argument("--x")
    p.add_argument("--y")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("decompose", help="finite-support / remainder split of an energy kernel")
    _net_args(p)
    p.add_argument("--vertex", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--origin", type=int)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("replay", help="apply a reduction log to a network")
    p.add_argument("log")
    _net_args(p)
    p.set_defaults(func=cmd_replay)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> tuple[int, str]:
    """Execute a command; returns (exit code, stdout text)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), ""
    try:
        return 0, dumps(args.func(args))
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC, dumps({"error": str(exc), "diagnostics": exc.diagnostics})
    except solvers.SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC, dumps({"error": str(exc), "residual": exc.residual})
    except (InputError, NetworkError, GeneratorError, lattice.LatticeError, reduce.ReductionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT, ""
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT, ""


def main(argv: Optional[Sequence[str]] = None) -> int:
    code, out = run(argv)
    if out:
        print(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
