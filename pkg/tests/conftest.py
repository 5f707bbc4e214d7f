from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lqpattern.centralized import synthesize_centralized  # noqa: E402
from lqpattern.graphs import grid_graph, path_graph  # noqa: E402
from lqpattern.observer import build_error_system, build_measurements, design_observer  # noqa: E402
from lqpattern.patterns import PatternSpec, build_pattern_matrix  # noqa: E402
from lqpattern.plant import PlantModel, build_augmented, solve_equilibrium  # noqa: E402

STRIPE = [1, 1, 1, -1, -1, -1, 1, 1, 1]
LEADERS = (3, 2, 1, 4, 7, 8, 9)
X0 = [3.9, 2.0, 0.6, -3.2, -2.9, -4.2, 4.1, 2.1, 0.6]
Z0 = [-1.9, -3.3, 1.2, 4.9, -3.3, -2.4, -1.0]


class Setup:
    """The 3x3 stripe experiment, built once per session."""

    def __init__(self) -> None:
        self.graph = grid_graph(3, 3)
        self.spec = PatternSpec(np.array(STRIPE, dtype=float))
        self.plant = PlantModel(self.graph, 4.0, LEADERS)
        self.Q = build_pattern_matrix(self.graph, self.spec)
        self.eq = solve_equilibrium(self.plant, self.spec)
        self.sys = build_augmented(self.plant, self.Q)
        self.cd = synthesize_centralized(self.sys, self.eq)
        self.xbar0 = np.array(X0 + Z0, dtype=float)
        self.mm = build_measurements(self.plant)
        self.od = design_observer(self.sys, self.cd, self.mm, path_graph(7))
        self.es = build_error_system(self.od, self.cd)
        rng = np.random.default_rng(0)
        estimates = rng.uniform(-5, 5, (7, 16))
        self.e0 = (estimates - self.xbar0).ravel()


@pytest.fixture(scope="session")
def sec5() -> Setup:
    return Setup()


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
