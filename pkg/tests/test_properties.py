import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geofol.frames import affine_field, lie_bracket, signature
from geofol.metrics import smooth_step
from geofol.sasaki import SasakiModel
from geofol.surfaces import pseudosphere
from geofol.thurston import ThurstonModel, heisenberg_act, heisenberg_compose
from geofol.verify import heisenberg_quotient

HEIS = heisenberg_quotient()
THURSTON = ThurstonModel("xi")
finite = st.floats(-20, 20, allow_nan=False)
points = st.tuples(finite, finite, finite, finite, finite).map(np.array)
words = st.tuples(*[st.integers(-4, 4)] * 5)
small = st.floats(-3, 3, allow_nan=False)


@given(points)
def test_reduce_lands_in_domain_and_is_idempotent(p):
    r, word = HEIS.reduce(p)
    assert 0 <= r[0] < 1 and 0 <= r[1] < 1 and 0 <= r[2] < 1
    assert 0 <= r[3] < 2 * math.pi and 0 <= r[4] < 2 * math.pi
    r2, word2 = HEIS.reduce(r)
    assert np.array_equal(r2, r) and word2 == (0,) * 5
    assert np.allclose(HEIS.act(word, p), r, atol=1e-9)


@given(words, words, points)
def test_compose_matches_sequential_action(a, b, p):
    both = heisenberg_act(heisenberg_compose(a, b), p)
    assert np.allclose(both, heisenberg_act(a, heisenberg_act(b, p)), atol=1e-9)


@given(words, points)
def test_quotient_action_matches_group_action(w, p):
    assert np.allclose(HEIS.act(w, p), heisenberg_act(w, p), atol=1e-12)


@settings(max_examples=50)
@given(arrays(float, (3, 3), elements=small), arrays(float, (3, 3), elements=small),
       arrays(float, 3, elements=small))
def test_bracket_is_antisymmetric(A, B, p):
    X, Y = affine_field(np.zeros(3), A), affine_field(np.ones(3), B)
    assert np.allclose(lie_bracket(X, Y, p), -lie_bracket(Y, X, p), atol=1e-12)


@settings(max_examples=50)
@given(points, st.floats(-2, 2), st.floats(-2, 2))
def test_exact_flow_is_a_one_parameter_group(p, s, r):
    if abs(math.sin(p[4])) < 0.2:
        p = p.copy()
        p[4] = 1.0
    a = THURSTON.exact_flow("W", THURSTON.exact_flow("W", p, r), s)
    b = THURSTON.exact_flow("W", p, s + r)
    assert np.allclose(a, b, atol=1e-9 * (1 + np.max(np.abs(p))))


@settings(max_examples=50)
@given(arrays(float, (4, 4), elements=small), st.lists(st.sampled_from([-2.0, -1.0, 1.0, 3.0]), min_size=4,
                                                          max_size=4))
def test_signature_invariant_under_congruence(P, diag):
    P = P + 7 * np.eye(4)  # diagonally dominant, hence invertible
    S = np.diag(diag)
    assert tuple(signature(P.T @ S @ P)) == tuple(signature(S))


@given(st.floats(-1, 2, allow_nan=False))
def test_smooth_step_symmetry(x):
    assert abs(smooth_step(x) + smooth_step(1 - x) - 1) < 1e-14
    assert 0 <= smooth_step(x) <= 1


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0, 6), small, small, small, small)
def test_horizontal_lift_is_isometric(w, th, v0, v1, a, b):
    S = SasakiModel(pseudosphere().metric)
    q = np.array([w, th, v0, v1])
    x = np.array([a, b])
    h = S.horizontal_lift(q, x)
    g = S.base(q[:2])
    assert abs(S.inner(q, h, h) - x @ g @ x) <= 1e-10 * (1 + abs(x @ g @ x) + float(q @ q) * (x @ x))
