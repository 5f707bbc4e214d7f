from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lqpattern.graphs import Graph, grid_graph
from lqpattern.patterns import (
    PatternSpec,
    build_pattern_matrix,
    is_in_pattern,
    partition_edges,
    pattern_from_kron,
)

BETA1 = np.array([1, -1, 1, -1, 1, -1, 1], dtype=float)
ONES7 = np.ones(7)


def test_spec_validation():
    with pytest.raises(ValueError):
        PatternSpec([1, 0.5])
    with pytest.raises(ValueError):
        PatternSpec([1, -1], p0=0.0)


def test_kron_all_ones():
    assert np.array_equal(pattern_from_kron(ONES7, ONES7), np.ones(49))


def test_kron_stripes_are_columns():
    alpha = pattern_from_kron(BETA1, ONES7).reshape((7, 7), order="F")
    # each grid column is constant and columns alternate
    assert np.all(alpha == alpha[0:1, :])
    assert np.array_equal(alpha[0], BETA1)


def test_kron_checkerboard():
    alpha = pattern_from_kron(BETA1, BETA1).reshape((7, 7), order="F")
    r, c = np.indices((7, 7))
    assert np.array_equal(alpha, np.where((r + c) % 2 == 0, 1.0, -1.0))


def test_partition_all_ones():
    g = grid_graph(3, 3)
    part = partition_edges(g, PatternSpec(np.ones(9)))
    assert not part.e1 and set(part.e2) == set(g.edges)


def test_partition_stripe():
    g = grid_graph(3, 3)
    part = partition_edges(g, PatternSpec([1, 1, 1, -1, -1, -1, 1, 1, 1]))
    assert set(part.e1) == {(1, 4), (2, 5), (3, 6), (4, 7), (5, 8), (6, 9)}
    assert set(part.e2) == {(1, 2), (2, 3), (4, 5), (5, 6), (7, 8), (8, 9)}


def test_partition_single_edge():
    part = partition_edges(Graph.from_edges(2, [(1, 2)]), PatternSpec([1, -1]))
    assert set(part.e1) == {(1, 2)} and not part.e2


def test_pattern_matrix_single_edge():
    g = Graph.from_edges(2, [(1, 2)])
    assert np.array_equal(build_pattern_matrix(g, PatternSpec([1, -1])), [[1, 1], [1, 1]])
    assert np.array_equal(build_pattern_matrix(g, PatternSpec([1, 1])), [[1, -1], [-1, 1]])


def test_pattern_matrix_annihilates_alpha():
    g = grid_graph(3, 3)
    spec = PatternSpec([1, 1, 1, -1, -1, -1, 1, 1, 1])
    assert np.linalg.norm(build_pattern_matrix(g, spec) @ spec.alpha) <= 1e-12


def test_is_in_pattern_examples():
    g = grid_graph(3, 3)
    alpha = np.array([1, 1, 1, -1, -1, -1, 1, 1, 1], dtype=float)
    spec = PatternSpec(alpha, p0=1.0)
    assert is_in_pattern(2 * alpha, g, spec)
    assert not is_in_pattern(0.5 * alpha, g, spec)
    bumped = alpha.copy()
    bumped[4] += 0.3
    assert not is_in_pattern(bumped, g, PatternSpec(alpha, p0=0.1), tol=1e-6)
    assert is_in_pattern(-3 * alpha, g, spec)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([-1.0, 1.0]), min_size=9, max_size=9))
def test_pattern_matrix_is_psd_with_alpha_kernel(signs):
    g = grid_graph(3, 3)
    spec = PatternSpec(signs)
    Q = build_pattern_matrix(g, spec)
    assert np.allclose(Q, Q.T)
    assert np.min(np.linalg.eigvalsh(Q)) >= -1e-12
    assert np.allclose(Q @ spec.alpha, 0)
