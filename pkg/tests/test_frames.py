import math

import numpy as np
import pytest

from geofol.frames import (
    DegenerateMetricError,
    FrameSpec,
    InvalidFrameError,
    MetricModel,
    ScalarField,
    affine_field,
    combine,
    constant_field,
    coordinate_field,
    flat,
    jacobian_mismatch,
    lie_bracket,
    sharp,
    signature,
)


def polar_frame():
    # radial and angular fields on the punctured plane
    def radial(p):
        return p / np.linalg.norm(p)

    def radial_jac(p):
        r = np.linalg.norm(p)
        return (np.eye(2) - np.outer(p, p) / r**2) / r

    rot = affine_field([0, 0], [[0, -1], [1, 0]], "angular")
    from geofol.frames import VectorField
    return FrameSpec((VectorField("radial", radial, radial_jac), rot))


def test_coordinate_fields_commute():
    a, b = coordinate_field(0, 3), coordinate_field(2, 3)
    assert np.all(lie_bracket(a, b, np.array([0.3, -1.0, 2.0])) == 0)


def test_bracket_of_linear_fields_is_matrix_commutator():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = np.array([[0.0, 0.0], [1.0, 0.0]])
    p = np.array([0.7, -0.2])
    got = lie_bracket(affine_field([0, 0], A), affine_field([0, 0], B), p)
    # [Ax, Bx] = (BA - AB) x
    assert np.allclose(got, (B @ A - A @ B) @ p, atol=1e-15)


def test_rotation_and_dilation_commute():
    rot = affine_field([0, 0], [[0, -1], [1, 0]])
    dil = affine_field([0, 0], np.eye(2))
    assert np.allclose(lie_bracket(rot, dil, np.array([1.2, 0.4])), 0)


def test_combine_product_rule_matches_finite_differences():
    f = ScalarField(lambda p: math.sin(p[0]) * p[1], lambda p: np.array([math.cos(p[0]) * p[1], math.sin(p[0])]))
    V = combine("V", [(f, coordinate_field(0, 2)), (2.0, affine_field([1, 0], [[0, 1], [1, 0]]))])
    assert jacobian_mismatch(V, np.array([0.4, 1.3])) < 1e-9


def test_frame_matrix_rejects_dependent_fields():
    frame = FrameSpec((constant_field([1.0, 1.0]), constant_field([2.0, 2.0])))
    with pytest.raises(InvalidFrameError):
        frame.matrix(np.zeros(2))


def test_polar_frame_degenerates_only_at_origin():
    frame = polar_frame()
    assert abs(np.linalg.det(frame.matrix(np.array([2.0, 0.0])))) == pytest.approx(2.0)


@pytest.mark.parametrize(
    "S, expected",
    [
        (np.diag([1.0, -1.0]), (1, 1, 0)),
        (np.diag([2.0, 3.0, -1.0, 0.0]), (2, 1, 1)),
        (np.array([[0.0, 1.0], [1.0, 0.0]]), (1, 1, 0)),
        (np.eye(4), (4, 0, 0)),
    ],
)
def test_signature_oracles(S, expected):
    assert tuple(signature(S)) == expected


def test_signature_rejects_asymmetric():
    with pytest.raises(ValueError):
        signature(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_polar_metric_in_frame_gives_euclidean_coordinates():
    # Gram diag(1, r^2) in (radial, angular) is the Euclidean metric
    frame = polar_frame()
    g = MetricModel(frame, lambda p: np.diag([1.0, float(p @ p)]))
    p = np.array([0.6, -1.1])
    assert np.allclose(g.coordinate_matrix(p), np.eye(2), atol=1e-14)


def test_flat_and_sharp_are_inverse():
    frame = FrameSpec((coordinate_field(0, 2), coordinate_field(1, 2)))
    g = MetricModel(frame, lambda p: np.array([[1.0, 0.5], [0.5, -2.0]]))
    X = constant_field([0.3, 0.9])
    p = np.zeros(2)
    assert np.allclose(sharp(g, flat(g, X, p), p), X(p))


def test_flat_refuses_degenerate_metric():
    frame = FrameSpec((coordinate_field(0, 2), coordinate_field(1, 2)))
    g = MetricModel(frame, lambda p: np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(DegenerateMetricError):
        flat(g, constant_field([1.0, 0.0]), np.zeros(2))


def test_gram_must_be_symmetric():
    frame = FrameSpec((coordinate_field(0, 2), coordinate_field(1, 2)))
    g = MetricModel(frame, lambda p: np.array([[1.0, 0.2], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        g.frame_gram(np.zeros(2))
