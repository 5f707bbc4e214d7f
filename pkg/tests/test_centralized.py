from __future__ import annotations

import numpy as np
import pytest
from oracles import care_solutions_hamiltonian, random_feasible_instance

from lqpattern.centralized import (
    certify_spectrum,
    in_basin_u1,
    predict_limit,
    synthesize_centralized,
)
from lqpattern.graphs import Graph
from lqpattern.patterns import PatternSpec, build_pattern_matrix
from lqpattern.plant import PlantModel, build_augmented, solve_equilibrium


def test_zero_eigenpair(sec5):
    cd = sec5.cd
    assert np.linalg.norm(cd.Atilde @ cd.psi1) <= 1e-8
    assert np.linalg.norm(cd.psi1_hat @ cd.Atilde) <= 1e-8
    assert cd.psi1_hat @ cd.psi1 == pytest.approx(1.0, abs=1e-10)


def test_certificate_passes(sec5):
    cert = certify_spectrum(sec5.cd)
    assert cert.passed
    assert cert.zero_count == 1 and cert.max_other_real_part < 0


def test_gain_kills_equilibrium(sec5):
    assert np.linalg.norm(sec5.cd.gain @ sec5.cd.psi1) <= 1e-8
    assert np.linalg.norm(sec5.eq.u_star) > 0


def test_open_loop_fails_certificate(sec5):
    cert = certify_spectrum(sec5.cd, matrix=sec5.sys.Abar)
    assert cert.zero_count >= 1
    assert cert.max_other_real_part > 0
    assert not cert.passed


def test_scalar_chain():
    # one agent, no edges, a = -1: Abar = [[-1, 1], [0, 0]] and Q = 0 annihilates alpha = [1]
    g = Graph(1)
    spec = PatternSpec([1.0])
    p = PlantModel(g, -1.0, (1,))
    sys = build_augmented(p, build_pattern_matrix(g, spec))
    eq = solve_equilibrium(p, spec)
    assert eq.u_star == pytest.approx([1.0])
    cd = synthesize_centralized(sys, eq)
    cert = certify_spectrum(cd)
    assert cert.passed
    assert np.allclose(cd.P, 0)


def test_basin_u1_examples(sec5):
    cd, spec = sec5.cd, sec5.spec
    res = in_basin_u1(cd, cd.psi1, spec)
    assert res.threshold == pytest.approx(1.0)
    assert res.projection == pytest.approx(1.0)
    assert in_basin_u1(cd, cd.psi1, PatternSpec(spec.alpha, p0=0.9)).member
    assert not in_basin_u1(cd, cd.psi1, PatternSpec(spec.alpha, p0=1.1)).member
    # remove the zero-mode component
    x = sec5.xbar0 - (cd.psi1_hat @ sec5.xbar0) * cd.psi1
    assert not in_basin_u1(cd, x, PatternSpec(spec.alpha, p0=1e-6)).member
    assert in_basin_u1(cd, sec5.xbar0, spec).member


def test_predict_limit_trivial(sec5):
    cd = sec5.cd
    assert np.allclose(predict_limit(cd, cd.psi1), cd.psi1)
    assert np.allclose(predict_limit(cd, np.zeros(16)), 0)


def test_sec5_limit_has_pattern_signs(sec5):
    lim = predict_limit(sec5.cd, sec5.xbar0)[:9]
    assert np.array_equal(np.sign(lim), sec5.spec.alpha)
    assert np.allclose(np.abs(lim), abs(lim[0]))


def test_minimal_against_enumeration_on_random_small_instances():
    rng = np.random.default_rng(21)
    from lqpattern.numerics import minimal_care

    checked = 0
    while checked < 15:
        n = int(rng.integers(2, 4))
        A = rng.normal(size=(n, n))
        B = rng.normal(size=(n, 1))
        C = rng.normal(size=(1, n)) if rng.random() < 0.5 else np.zeros((1, n))
        Q = C.T @ C
        sols = care_solutions_hamiltonian(A, B, Q)
        if not sols:
            continue
        P, _ = minimal_care(A, B, Q)
        for R in sols:
            assert np.min(np.linalg.eigvalsh(R - P)) >= -1e-8
        checked += 1


def test_random_feasible_instances_certify():
    rng = np.random.default_rng(8)
    for _ in range(5):
        p, spec, Q, eq = random_feasible_instance(rng, n_max=7)
        cd = synthesize_centralized(build_augmented(p, Q), eq)
        assert certify_spectrum(cd).passed
