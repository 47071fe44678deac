import math

import numpy as np
import pytest

from geofol.connection import (
    CoordinateMetric,
    christoffels,
    covariant_deriv,
    covariant_deriv_christoffel,
    geodesic_residual,
    koszul_pair,
    metric_compatibility_defect,
    richardson_derivative,
)
from geofol.frames import (
    DegenerateMetricError,
    FrameSpec,
    MetricModel,
    affine_field,
    constant_field,
    coordinate_field,
)
from geofol.surfaces import pseudosphere, round_sphere


def euclidean(n=3):
    frame = FrameSpec(tuple(coordinate_field(i, n) for i in range(n)))
    return MetricModel(frame, lambda p: np.eye(n), lambda p: np.zeros((n, n, n)))


def test_flat_connection_is_directional_derivative():
    g = euclidean()
    K = np.array([[0.0, 1.0, 2.0], [-1.0, 0.5, 0.0], [0.3, 0.0, 1.0]])
    A, B = constant_field([1.0, 2.0, -1.0]), affine_field([0, 1, 0], K)
    p = np.array([0.2, 0.1, -0.4])
    assert np.allclose(covariant_deriv(g, A, B, p), K @ A(p), atol=1e-14)


def test_koszul_is_symmetric_in_torsion_free_sense():
    # nabla_A B - nabla_B A = [A, B]
    g = euclidean()
    A = affine_field([1, 0, 0], [[0, 1, 0], [0, 0, 0], [0, 0, 0]])
    B = affine_field([0, 1, 0], [[0, 0, 0], [0, 0, 1], [1, 0, 0]])
    p = np.array([0.3, 0.5, 0.7])
    from geofol.frames import lie_bracket
    diff = covariant_deriv(g, A, B, p) - covariant_deriv(g, B, A, p)
    assert np.allclose(diff, lie_bracket(A, B, p), atol=1e-14)


def test_round_sphere_christoffels_oracle():
    m = round_sphere().metric
    th = 0.7
    G = christoffels(m, np.array([th, 0.3]))
    assert G[0, 1, 1] == pytest.approx(-math.sin(th) * math.cos(th))
    assert G[1, 0, 1] == pytest.approx(math.cos(th) / math.sin(th))
    assert G[1, 1, 0] == pytest.approx(math.cos(th) / math.sin(th))
    assert abs(G[0, 0, 0]) < 1e-15


def test_pseudosphere_christoffels_oracle():
    m = pseudosphere().metric
    w = 0.4
    G = christoffels(m, np.array([w, 1.0]))
    # g = diag(-1, cosh^2 w): Gamma^w_thth = cosh w sinh w, Gamma^th_wth = tanh w
    assert G[0, 1, 1] == pytest.approx(math.cosh(w) * math.sinh(w))
    assert G[1, 0, 1] == pytest.approx(math.tanh(w))


def test_fd_christoffels_match_analytic():
    m = pseudosphere().metric
    fd = CoordinateMetric(2, m.matrix, None, "fd")
    p = np.array([0.8, 2.0])
    assert np.max(np.abs(christoffels(m, p) - christoffels(fd, p))) < 1e-10


def test_richardson_derivative_order():
    f = lambda p: np.array(math.exp(p[0]) * math.sin(p[1]))  # noqa: E731
    p = np.array([0.3, 1.1])
    d = richardson_derivative(f, p)
    assert d[0] == pytest.approx(math.exp(0.3) * math.sin(1.1), abs=1e-11)
    assert d[1] == pytest.approx(math.exp(0.3) * math.cos(1.1), abs=1e-11)


def test_metric_compatibility(typechange):
    coord = CoordinateMetric.from_frame_metric(typechange.metric)
    assert metric_compatibility_defect(coord, np.array([0.1, 0.2, 0.3, 0.4, 1.0])) < 1e-8


@pytest.mark.parametrize("u", [0.0, 0.3, 1.0, 1.4, 2.0, math.pi, -0.9, -2.5])
def test_two_routes_agree_on_typechange(typechange, u, rng):
    coord = CoordinateMetric.from_frame_metric(typechange.metric)
    p = np.array([0.3, 0.6, 0.2, 1.7, u])
    A = affine_field(rng.normal(size=5), 0.3 * rng.normal(size=(5, 5)))
    B = affine_field(rng.normal(size=5), 0.3 * rng.normal(size=(5, 5)))
    a = covariant_deriv(typechange.metric, A, B, p)
    b = covariant_deriv_christoffel(coord, A, B, p)
    assert np.max(np.abs(a - b)) <= 1e-8 * max(1.0, np.max(np.abs(a)))


def test_koszul_pair_accepts_metric_and_point(lightlike):
    p = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    X = lightlike.X
    assert abs(koszul_pair(lightlike.metric, X, X, X, p)) < 1e-14


def test_degenerate_gram_detected():
    frame = FrameSpec((coordinate_field(0, 2), coordinate_field(1, 2)))
    g = MetricModel(frame, lambda p: np.array([[1.0, 1.0], [1.0, 1.0]]), lambda p: np.zeros((2, 2, 2)))
    with pytest.raises(DegenerateMetricError):
        covariant_deriv(g, coordinate_field(0, 2), coordinate_field(1, 2), np.zeros(2))


def test_geodesic_residual_of_nongeodesic_field():
    # the rotation field on the plane is not geodesic: nabla_R R = -x
    g = euclidean(2)
    R = affine_field([0, 0], [[0, -1], [1, 0]])
    assert geodesic_residual(g, R, np.array([2.0, 0.0])) == pytest.approx(2.0)
