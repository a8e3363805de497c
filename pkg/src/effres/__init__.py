"""Effective resistance on finite and infinite electrical networks."""

from .generators import GeneratorError, GeneratorSpec, generate
from .network import (
    ExhaustionPlan,
    Network,
    NetworkError,
    ParseError,
    ball_rule,
    boundary_of,
    exhaustion,
    interior_of,
    parse_network,
    read_netx,
    serialize_network,
    write_netx,
)
from .operators import Current, VertexFunction, apply_laplacian, dissipation, divergence, drop, energy
from .resistance import (
    ResistanceReport,
    free_resistance,
    resistance_finite,
    resistance_report,
    trace_resistance,
    wired_resistance,
)
from .solvers import DirichletSystem, GroundedSystem, SolverError, solve_dipole

__version__ = "0.1.0"

__all__ = [
    "Current",
    "DirichletSystem",
    "ExhaustionPlan",
    "GeneratorError",
    "GeneratorSpec",
    "GroundedSystem",
    "Network",
    "NetworkError",
    "ParseError",
    "ResistanceReport",
    "SolverError",
    "VertexFunction",
    "apply_laplacian",
    "ball_rule",
    "boundary_of",
    "dissipation",
    "divergence",
    "drop",
    "energy",
    "exhaustion",
    "free_resistance",
    "generate",
    "interior_of",
    "parse_network",
    "read_netx",
    "resistance_finite",
    "resistance_report",
    "serialize_network",
    "solve_dipole",
    "trace_resistance",
    "wired_resistance",
    "write_netx",
]
