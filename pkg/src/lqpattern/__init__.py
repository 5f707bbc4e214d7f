"""Leader-driven pattern formation on Laplacian networks.

Agents ``x' = (-L + aI) x + B u`` on an undirected graph are steered by a
few leaders into a two-level sign pattern ``p * alpha``. The controller
is the intrinsic LQ feedback from the minimal PSD Riccati solution of the
integrator-augmented system; a distributed variant replaces full state
feedback with consensus observers running on the leaders.
"""

from __future__ import annotations

from .centralized import (
    CentralizedDesign,
    certify_spectrum,
    in_basin_u1,
    predict_limit,
    synthesize_centralized,
)
from .config import Scenario, bundled_scenario, load_scenario
from .exceptions import (
    AssumptionError,
    ConfigError,
    IllConditionedEigenbasis,
    PatternControlError,
    SimulationError,
    SolverError,
)
from .graphs import Graph, algebraic_connectivity, grid_graph, induced_subgraph, is_connected, path_graph
from .observer import (
    build_error_system,
    build_measurements,
    design_observer,
    in_basin_u2,
    predict_limit_distributed,
)
from .patterns import PatternSpec, build_pattern_matrix, is_in_pattern, pattern_from_kron
from .pipeline import run_pipeline
from .plant import PlantModel, build_augmented, check_assumptions, solve_equilibrium
from .sim import SimOptions, simulate_centralized, simulate_distributed, simulate_lti

__version__ = "0.1.0"

__all__ = [
    "AssumptionError",
    "CentralizedDesign",
    "ConfigError",
    "Graph",
    "IllConditionedEigenbasis",
    "PatternControlError",
    "PatternSpec",
    "PlantModel",
    "Scenario",
    "SimOptions",
    "SimulationError",
    "SolverError",
    "algebraic_connectivity",
    "build_augmented",
    "build_error_system",
    "build_measurements",
    "build_pattern_matrix",
    "bundled_scenario",
    "certify_spectrum",
    "check_assumptions",
    "design_observer",
    "grid_graph",
    "in_basin_u1",
    "in_basin_u2",
    "induced_subgraph",
    "is_connected",
    "is_in_pattern",
    "load_scenario",
    "path_graph",
    "pattern_from_kron",
    "predict_limit",
    "predict_limit_distributed",
    "run_pipeline",
    "simulate_centralized",
    "simulate_distributed",
    "simulate_lti",
    "solve_equilibrium",
    "synthesize_centralized",
]
