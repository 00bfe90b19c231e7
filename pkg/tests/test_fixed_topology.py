from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from hthk import (Mind, OpinionState, StructuralError, analyze_structure, build_digraph,
                  build_matrix, check_prop1_part2, fvct, fvct_fixed, is_equilibrium, simulate)
from hthk.linalg import solve_resolvent, stationary_distribution
from hthk.model import step_with

from conftest import A3_R, A3_X, states


def _matrix_limit(A, squarings=40):
    # powers of a row-stochastic matrix stay row-stochastic; renormalising
    # keeps rounding from draining mass over 2**40 steps
    P = A.copy()
    for _ in range(squarings):
        P = P @ P
        P /= P.sum(axis=1, keepdims=True)
    return P


def test_agents3_fvct():
    res = fvct(OpinionState(A3_X, A3_R))
    np.testing.assert_allclose(res.fvct, [0, 0.5, 1], atol=1e-12)
    assert list(res.open) == [1]


def test_agents3_fvct_exact():
    # (1 - 1/3) v = 1/3 * 0 + 1/3 * 1
    v = (Fraction(1, 3) * 0 + Fraction(1, 3) * 1) / (1 - Fraction(1, 3))
    assert v == Fraction(1, 2)
    assert abs(fvct(OpinionState(A3_X, A3_R)).fvct[1] - float(v)) <= 1e-15


def test_moderate_block_stationary():
    res = fvct(OpinionState([0, 0.5, 1], [0.6] * 3))
    np.testing.assert_allclose(res.m_star, np.tile([2 / 7, 3 / 7, 2 / 7], (3, 1)), atol=1e-14)
    np.testing.assert_allclose(res.fvct, [0.5] * 3, atol=1e-14)


def test_equilibrium_examples():
    assert is_equilibrium(OpinionState([0.2] * 4, [0.1] * 4))
    assert not is_equilibrium(OpinionState([0, 0.5, 1], [0.5, 1, 0.25]))
    assert is_equilibrium(OpinionState([0, 0.5, 1], [0.4, 1, 0.25]))
    with pytest.raises(ValueError):
        is_equilibrium(OpinionState([0.0], [1.0]), tol=0.0)


def test_prop1_part2_examples():
    p = check_prop1_part2(OpinionState([0, 0.5, 1], [0.4, 1, 0.25]))
    assert p.same_topology and p.fvct_is_equilibrium and p.no_moderate and p.extremes_closed_minded
    p = check_prop1_part2(OpinionState([0, 0.5, 1], [0.6] * 3))
    assert not p.same_topology and not p.no_moderate
    p = check_prop1_part2(OpinionState([3.0] * 5, [0.1] * 5))
    assert p.same_topology and p.fvct_is_equilibrium and p.no_moderate and p.extremes_closed_minded


def test_equilibrium_is_own_fvct():
    z = OpinionState([0, 0.5, 1], [0.4, 1, 0.25])
    np.testing.assert_allclose(fvct(z).fvct, z.opinions, atol=1e-14)
    assert fvct(z).is_equilibrium_input


@settings(max_examples=300, deadline=None)
@given(states(n_max=12))
def test_fvct_matches_matrix_power(s):
    g = build_digraph(s)
    A = build_matrix(g)
    res = fvct_fixed(s.opinions, g)
    want = _matrix_limit(A) @ s.opinions
    scale = max(1.0, np.abs(s.opinions).max())
    np.testing.assert_allclose(res.fvct, want, atol=1e-8 * scale)
    # fixed point of the frozen matrix
    np.testing.assert_allclose(A @ res.fvct, res.fvct, atol=1e-10 * scale)
    # idempotence under the same frozen matrix
    np.testing.assert_allclose(fvct_fixed(res.fvct, g).fvct, res.fvct, atol=1e-10 * scale)


@settings(max_examples=300, deadline=None)
@given(states(n_max=12))
def test_closed_means_and_mstar(s):
    g = build_digraph(s)
    st = analyze_structure(g)
    A = build_matrix(g)
    res = fvct_fixed(s.opinions, g, st)
    pos = {int(v): t for t, v in enumerate(res.moderate)}
    for k, c in enumerate(st.class_of):
        m = st.sccs[k]
        if c is Mind.CLOSED:
            np.testing.assert_allclose(res.fvct[m], s.opinions[m].mean(), atol=1e-12 * max(1, np.abs(s.opinions).max()))
        if c is Mind.MODERATE:
            idx = [pos[int(v)] for v in m]
            block = res.m_star[np.ix_(idx, idx)]
            np.testing.assert_allclose(block, block[0][None, :].repeat(len(m), 0), atol=1e-12)
            np.testing.assert_allclose(block.sum(axis=1), 1.0, atol=1e-12)
            assert np.all(block > -1e-15)
            oracle = _matrix_limit(A[np.ix_(m, m)])
            np.testing.assert_allclose(block, oracle, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(states(n_max=10))
def test_linearity_at_frozen_topology(s):
    g = build_digraph(s)
    f = fvct_fixed(s.opinions, g).fvct
    g2 = fvct_fixed(2.5 * s.opinions - 1.0, g).fvct
    np.testing.assert_allclose(g2, 2.5 * f - 1.0, atol=1e-9 * max(1, np.abs(s.opinions).max()))


def test_prop1_part2_implication_on_converged_states():
    rng = np.random.default_rng(11)
    hits = 0
    for _ in range(300):
        n = int(rng.integers(2, 16))
        s = OpinionState(rng.uniform(0, 1, n), rng.uniform(0.05, 0.5, n))
        rep = simulate(s, max_steps=rng.integers(1, 40))
        y = s.with_opinions(rep.final_opinions)
        p = check_prop1_part2(y)
        if p.same_topology:
            hits += 1
            assert p.fvct_is_equilibrium and p.no_moderate and p.extremes_closed_minded
    assert hits >= 100


def test_frozen_limit_matches_fvct():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(2, 15))
        s = OpinionState(rng.uniform(0, 1, n), rng.uniform(0.05, 0.5, n))
        rep = simulate(s, max_steps=200_000, mode="frozen")
        assert rep.converged
        tol = rep.convergence_tol
        f = fvct(s).fvct
        # the last step is within tol; the remaining distance is bounded by the contraction
        assert np.max(np.abs(rep.final_opinions - f)) <= max(10 * tol, 1e-9)


def test_stationary_distribution_power_oracle():
    M = np.array([[0.5, 0.5, 0], [1 / 3, 1 / 3, 1 / 3], [0, 0.5, 0.5]])
    pi = stationary_distribution(M)
    np.testing.assert_allclose(pi, _matrix_limit(M)[0], atol=1e-12)


def test_singular_resolvent_is_structural_error():
    with pytest.raises(StructuralError):
        solve_resolvent(np.array([[1.0]]), np.array([1.0]))


def test_frozen_step_of_fvct_is_fixed():
    s = OpinionState(A3_X, A3_R)
    g = build_digraph(s)
    f = fvct(s).fvct
    np.testing.assert_allclose(step_with(f, g), f, atol=1e-15)
