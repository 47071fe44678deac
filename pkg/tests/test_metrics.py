import math

import numpy as np
import pytest

from geofol.connection import geodesic_residual
from geofol.frames import FrameSpec, MetricModel, constant_field, coordinate_field, signature
from geofol.metrics import (
    LIGHTLIKE_GRAM,
    LightlikeFoliationError,
    LightlikeModel,
    ModelConstructionError,
    TypeChangeModel,
    divergence,
    find_eta,
    riemannize,
    smooth_step,
    smooth_step_deriv,
)
from geofol.verify import seam_jumps, xi_norm_in_frame

PTS = [np.array([0.1, 0.7, 0.3, 2.0, u]) for u in (0.0, 0.2, 0.9, 1.5, 2.4, math.pi, -0.4, -1.6, -3.0)]


def test_lightlike_gram_oracle(lightlike):
    p = PTS[3]
    X, du = lightlike.X(p), np.eye(5)[4]
    g = lightlike.metric
    assert g.inner(p, du, du) == pytest.approx(0.0, abs=1e-14)
    assert g.inner(p, X, du) == pytest.approx(1.0)
    assert tuple(signature(LIGHTLIKE_GRAM)) == (4, 1, 0)


def test_lightlike_block_validation():
    with pytest.raises(ValueError):
        LightlikeModel(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        LightlikeModel(np.array([[1.0, 2.0, 0], [0, 1.0, 0], [0, 0, 1.0]]))
    m = LightlikeModel(np.diag([1.0, -1.0, 2.0]))
    assert geodesic_residual(m.metric, m.X, PTS[2]) < 1e-12


@pytest.mark.parametrize("p", PTS)
def test_x_geodesic_for_lightlike_metric(lightlike, p):
    assert geodesic_residual(lightlike.metric, lightlike.X, p) < 1e-12


def test_g0_at_bad_set_oracle(typechange):
    G = typechange.G0(0.0)
    expected = np.zeros((5, 5))
    expected[0, 0] = 0.25
    expected[1, 2] = expected[2, 1] = 0.5
    expected[3, 4] = expected[4, 3] = -1.0
    expected[4, 4] = 1.0
    assert np.array_equal(G, expected)
    assert tuple(signature(G)) == (3, 2, 0)


def test_eta_certified_and_halved(typechange):
    assert typechange.eta_certified == pytest.approx(math.pi / 4)
    assert typechange.eta == pytest.approx(math.pi / 8)


def test_analytic_gram_derivatives(typechange):
    h = 1e-6
    for u in (0.3, 0.85, 1.2, 1.5, 2.0, 2.6, -0.5, -1.3):
        fd = (typechange.frame_gram_E(u + h) - typechange.frame_gram_E(u - h)) / (2 * h)
        assert np.max(np.abs(fd - typechange.frame_gram_E_deriv(u))) < 1e-6 * max(1, np.max(np.abs(fd)))


def test_l_block_is_complement_of_w(typechange):
    # diag(sigma, L) is G0 written in the frame (W_xi, V1, V2, dz, Y)
    for u in (0.3, 0.6, -0.5, 2.8):
        assert typechange.branch_mismatch(u) < 1e-30


@pytest.mark.parametrize("p", PTS)
def test_xxi_geodesic(typechange, p):
    assert geodesic_residual(typechange.metric, typechange.thurston.Xxi, p) < 1e-10


@pytest.mark.parametrize("u, sign", [(0.5, 1), (2.0, 1), (0.0, 0), (math.pi, 0), (-0.5, -1), (-2.9, -1)])
def test_xxi_causal_type(typechange, u, sign):
    v = xi_norm_in_frame(typechange, u)
    assert (v > 0) - (v < 0) == sign


def test_signature_everywhere(typechange):
    for u in np.linspace(-math.pi, math.pi, 301):
        assert tuple(signature(typechange.metric.coordinate_matrix(np.array([0.2, 0.1, 0.5, 0.7, u])))) == (3, 2, 0)


def test_divergence_routes(typechange):
    for p in PTS[:5]:
        a = divergence(typechange.thurston.Xxi, typechange.metric, p, "volume")
        b = divergence(typechange.thurston.Xxi, typechange.metric, p, "trace")
        assert abs(a) < 1e-9 and abs(b) < 1e-9
    with pytest.raises(ValueError):
        divergence(typechange.thurston.Xxi, typechange.metric, PTS[0], "flux")


def test_divergence_of_nontrivial_field(typechange):
    # d/du is not divergence free for this metric in general; both routes must agree
    du = coordinate_field(4, 5)
    p = np.array([0.2, 0.3, 0.4, 0.5, 1.1])
    a = divergence(du, typechange.metric, p, "volume")
    b = divergence(du, typechange.metric, p, "trace")
    assert abs(a - b) < 1e-8


def test_sin_variant_norm(sin_model):
    X = sin_model.thurston.X
    for u in (0.0, 0.4, 1.5, -1.0, 3.0):
        p = np.array([0.1, 0.2, 0.3, 0.4, u])
        assert sin_model.metric.inner(p, X(p), X(p)) == pytest.approx(4 * math.sin(u) ** 4, abs=1e-12)


def test_seams_are_smooth(typechange):
    assert max(seam_jumps(typechange).values()) < 1e-6


def test_smooth_step():
    assert smooth_step(-1) == 0 and smooth_step(2) == 1
    assert smooth_step(0.5) == pytest.approx(0.5)
    h = 1e-6
    for x in (0.1, 0.5, 0.9):
        assert smooth_step_deriv(x) == pytest.approx((smooth_step(x + h) - smooth_step(x - h)) / (2 * h), rel=1e-6)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        TypeChangeModel(variant="cos", audit_points=10)
    with pytest.raises(ValueError):
        TypeChangeModel(flatten_start=1.4, audit_points=10)
    with pytest.raises(ValueError):
        TypeChangeModel(mutation="flip:2,2", audit_points=10)
    with pytest.raises(ModelConstructionError):
        TypeChangeModel(eta_override=-0.1, audit_points=10)


def test_find_eta_fails_for_broken_g0():
    class Broken:
        signature_tol = 1e-9

        def G0(self, u):
            return np.diag([1.0, 1.0, 1.0, 1.0, 1.0])

    with pytest.raises(ModelConstructionError):
        find_eta(Broken())


def _minkowski():
    frame = FrameSpec((coordinate_field(0, 2), coordinate_field(1, 2)))
    return MetricModel(frame, lambda p: np.diag([1.0, -1.0]), lambda p: np.zeros((2, 2, 2)))


def test_riemannize_oracle():
    g = _minkowski()
    p = np.zeros(2)
    h = riemannize(g, coordinate_field(0, 2), lambda q: np.eye(2))
    assert np.allclose(h.coordinate_matrix(p), np.eye(2))
    h = riemannize(g, coordinate_field(1, 2), lambda q: np.eye(2))
    assert np.allclose(h.coordinate_matrix(p), np.eye(2))


def test_riemannize_boosted_is_positive_and_geodesic():
    g = _minkowski()
    X = constant_field([math.cosh(0.5), math.sinh(0.5)])
    h0 = lambda q: np.array([[2 + math.sin(q[1]), 0.1], [0.1, 1 + 0.5 * math.cos(q[0])]])  # noqa: E731
    h = riemannize(g, X, h0)
    for p in (np.array([0.3, 1.0]), np.array([-2.0, 0.5])):
        assert np.min(np.linalg.eigvalsh(h.coordinate_matrix(p))) > 0
        assert geodesic_residual(h, X, p) < 1e-8


def test_riemannize_rejects_lightlike_and_non_unit():
    g = _minkowski()
    with pytest.raises(LightlikeFoliationError):
        riemannize(g, constant_field([1.0, 1.0]), lambda q: np.eye(2))
    with pytest.raises(ValueError):
        riemannize(g, constant_field([2.0, 0.0]), lambda q: np.eye(2))
