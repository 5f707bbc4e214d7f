from __future__ import annotations

import numpy as np
import pytest

from lqpattern.graphs import Graph, complete_graph, grid_graph
from lqpattern.patterns import PatternSpec, build_pattern_matrix
from lqpattern.plant import (
    Infeasible,
    PlantModel,
    build_augmented,
    check_assumptions,
    is_controllable,
    kalman_controllable,
    solve_equilibrium,
)

STRIPE = PatternSpec([1, 1, 1, -1, -1, -1, 1, 1, 1])
LEADERS = (3, 2, 1, 4, 7, 8, 9)


def test_plant_rejects_bad_leaders():
    g = grid_graph(2, 2)
    with pytest.raises(ValueError):
        PlantModel(g, 0.0, (1, 1))
    with pytest.raises(ValueError):
        PlantModel(g, 0.0, (5,))


def test_input_matrix_columns():
    p = PlantModel(grid_graph(3, 3), 4.0, LEADERS)
    for j, v in enumerate(LEADERS):
        e = np.zeros(9)
        e[v - 1] = 1
        assert np.array_equal(p.B[:, j], e)


def test_augmented_single_edge():
    g = Graph.from_edges(2, [(1, 2)])
    p = PlantModel(g, 0.0, (1,))
    Q = build_pattern_matrix(g, PatternSpec([1, 1]))
    sys = build_augmented(p, Q)
    assert np.array_equal(sys.Abar, [[-1, 1, 1], [1, -1, 0], [0, 0, 0]])
    assert np.array_equal(sys.Bbar, [[0], [0], [1]])


def test_augmented_structure():
    p = PlantModel(grid_graph(3, 3), 4.0, LEADERS)
    sys = build_augmented(p, build_pattern_matrix(p.graph, STRIPE))
    assert np.count_nonzero(sys.Bbar) == 7
    assert np.all(sys.Bbar[:9] == 0)
    w = np.arange(1.0, 8.0)
    assert np.allclose(sys.Qbar @ np.concatenate([np.zeros(9), w]), 0)
    assert np.min(np.linalg.eigvalsh(sys.Qbar)) >= -1e-12


def test_equilibrium_stripe():
    p = PlantModel(grid_graph(3, 3), 4.0, LEADERS)
    eq = solve_equilibrium(p, STRIPE)
    assert eq
    assert np.allclose(eq.u_star, [-2, -2, -2, 0, -2, -2, -2])
    assert np.linalg.norm(p.drift @ eq.x_star + p.B @ eq.u_star) <= 1e-10


def test_equilibrium_infeasible_without_excitation():
    p = PlantModel(grid_graph(3, 3), 0.0, LEADERS)
    res = solve_equilibrium(p, STRIPE)
    assert isinstance(res, Infeasible) and not res
    assert res.followers == (5, 6)
    assert res.residuals[0] == pytest.approx(-4.0)
    assert "x5" in res.describe()


def test_equilibrium_all_leaders():
    g = grid_graph(3, 3)
    p = PlantModel(g, 1.5, tuple(range(1, 10)))
    eq = solve_equilibrium(p, STRIPE)
    assert np.allclose(eq.u_star, (g.laplacian - 1.5 * np.eye(9)) @ STRIPE.alpha)


def test_assumptions_sec5():
    p = PlantModel(grid_graph(3, 3), 4.0, LEADERS)
    report = check_assumptions(p, build_pattern_matrix(p.graph, STRIPE))
    assert report.passed and report.failures() == []


def test_assumptions_no_leaders():
    p = PlantModel(grid_graph(2, 2), 1.0, ())
    report = check_assumptions(p, build_pattern_matrix(p.graph, PatternSpec(np.ones(4))))
    assert not report.controllable and not report.passed


def test_complete_graph_all_leaders_controllable():
    g = complete_graph(2)
    for a in (-3.0, 0.0, 2.0, 7.5):
        p = PlantModel(g, a, (1, 2))
        assert is_controllable(p.drift, p.B)


def test_pbh_agrees_with_kalman_on_random_pairs():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = int(rng.integers(2, 6))
        A = rng.normal(size=(n, n))
        B = rng.normal(size=(n, 1))
        if rng.random() < 0.3:
            # uncontrollable by construction: block triangular with zero input to the second block
            A[n // 2 :, : n // 2] = 0
            B[n // 2 :] = 0
        assert is_controllable(A, B) == kalman_controllable(A, B)


def test_symmetric_grid_single_centre_leader_uncontrollable():
    # mirror symmetry about the centre leaves modes the leader cannot reach
    p = PlantModel(grid_graph(3, 3), 0.0, (5,))
    assert not is_controllable(p.drift, p.B)
