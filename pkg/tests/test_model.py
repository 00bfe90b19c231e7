import numpy as np
import pytest
from hypothesis import given, settings

from hthk import OpinionState, ProximityDigraph, build_digraph, build_matrix, step
from hthk.model import step_with

from conftest import A3_R, A3_X, states


def test_example_digraph():
    g = build_digraph(OpinionState(A3_X, A3_R))
    assert [list(v) for v in g.out_neighbors] == [[0], [0, 1, 2], [2]]


def test_identical_opinions_give_complete_digraph():
    g = build_digraph(OpinionState([0.3, 0.3, 0.3], [0.01, 1, 2]))
    assert g.mask.all()


def test_matrix_rows():
    A = build_matrix(build_digraph(OpinionState(A3_X, A3_R)))
    np.testing.assert_array_equal(A[1], [1 / 3] * 3)
    np.testing.assert_array_equal(A[0], [1, 0, 0])


def test_step_example():
    y = step(OpinionState(A3_X, A3_R)).opinions
    np.testing.assert_allclose(y, [0, 1.6 / 3, 1], atol=1e-15)


def test_boundary_is_inclusive():
    g = build_digraph(OpinionState([0.0, 0.5], [0.5, 0.1]))
    assert g.mask[0, 1] and not g.mask[1, 0]


def test_tie_tol_widens():
    s = OpinionState([0.0, 0.5 + 1e-13], [0.5, 0.1])
    assert not build_digraph(s).mask[0, 1]
    assert build_digraph(OpinionState(s.opinions, s.bounds, 1e-12)).mask[0, 1]


@pytest.mark.parametrize("x,r,msg", [
    ([], [], "at least one"),
    ([1, 2], [1], "differ in length"),
    ([1, np.nan], [1, 1], "finite"),
    ([1, 2], [1, np.inf], "finite"),
    ([1, 2], [1, 0], "strictly positive"),
    ([1, 2], [1, -1], "strictly positive"),
])
def test_state_validation(x, r, msg):
    with pytest.raises(ValueError, match=msg):
        OpinionState(x, r)


def test_negative_tie_tol_rejected():
    with pytest.raises(ValueError):
        OpinionState([1.0], [1.0], -1e-3)


def test_state_is_read_only():
    s = OpinionState([1.0, 2.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        s.opinions[0] = 3.0


def test_digraph_needs_self_loops():
    with pytest.raises(ValueError, match="self-loop"):
        ProximityDigraph(np.array([[True, False], [True, False]]))


def test_fingerprint_and_equality():
    a = build_digraph(OpinionState(A3_X, A3_R))
    b = build_digraph(OpinionState([0, 0.61, 1], A3_R))
    c = build_digraph(OpinionState([0, 0.45, 1], A3_R))
    assert a == b and a.fingerprint() == b.fingerprint() and hash(a) == hash(b)
    assert a != c and a.fingerprint() != c.fingerprint()


@settings(max_examples=200, deadline=None)
@given(states())
def test_digraph_matches_definition(s):
    y, r = s.opinions, s.bounds
    g = build_digraph(s)
    for i in range(s.n):
        expect = [j for j in range(s.n) if abs(y[i] - y[j]) <= r[i]]
        assert list(g.out_neighbors[i]) == expect


@settings(max_examples=200, deadline=None)
@given(states())
def test_matrix_invariants(s):
    g = build_digraph(s)
    A = build_matrix(g)
    assert np.all(A >= 0)
    np.testing.assert_allclose(A.sum(axis=1), 1.0, atol=1e-14)
    assert np.all(np.diag(A) > 0)
    deg = g.mask.sum(axis=1)
    for i in range(s.n):
        assert np.all(A[i, g.mask[i]] == 1.0 / deg[i])
        assert np.all(A[i, ~g.mask[i]] == 0.0)


@settings(max_examples=200, deadline=None)
@given(states())
def test_step_matches_matrix_product_and_shrinks_range(s):
    y = s.opinions
    nxt = step(s).opinions
    A = build_matrix(build_digraph(s))
    np.testing.assert_allclose(nxt, A @ y, atol=1e-12)
    assert nxt.max() <= y.max() and nxt.min() >= y.min()
    np.testing.assert_array_equal(nxt, step_with(y, build_digraph(s)))


def test_consensus_is_exact_fixed_point():
    s = OpinionState([0.1] * 5, [0.3] * 5)
    np.testing.assert_array_equal(step(s).opinions, s.opinions)
