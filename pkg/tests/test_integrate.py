import csv
import math

import numpy as np
import pytest

from geofol.connection import CoordinateMetric
from geofol.frames import affine_field, constant_field
from geofol.integrate import (
    ADAPTIVE_METHODS,
    GeodesicState,
    IntegrationError,
    QuotientSpec,
    arc_length,
    causal_type,
    detect_closed_orbit,
    integrate_flow,
    integrate_geodesic,
    write_trajectory_csv,
)
from geofol.surfaces import round_sphere
from geofol.verify import heisenberg_quotient, rk4_order

HEIS = heisenberg_quotient()


def test_reduce_oracles():
    p, word = HEIS.reduce([0.5, 0.3, 2.7, 0.0, 0.0])
    assert np.allclose(p, [0.5, 0.3, 0.7, 0, 0])
    assert word == (0, 0, -2, 0, 0)
    p, word = HEIS.reduce([1.5, 0.3, 0.0, 0.0, 0.0])
    assert np.allclose(p, [0.5, 0.3, 0.7, 0, 0])
    assert word == (-1, 0, 1, 0, 0)


def test_reduce_angles():
    p, word = HEIS.reduce([0.1, 0.1, 0.1, 7.0, -1.0])
    assert p[3] == pytest.approx(7.0 - 2 * math.pi)
    assert p[4] == pytest.approx(2 * math.pi - 1.0)
    assert word[3:] == (-1, 1)


def test_quotient_kinds():
    with pytest.raises(ValueError):
        QuotientSpec("klein")
    with pytest.raises(ValueError):
        QuotientSpec("heisenberg-torus", 3)
    cyl = QuotientSpec("cylinder", 2, periodic_axis=1)
    assert np.allclose(cyl.act((2,), [0.5, 0.1]), [0.5, 0.1 + 4 * math.pi])


def test_x_orbit_closes_with_period_pi(thurston):
    start = np.array([0.2, 0.3, 0.4, 0.5, math.pi / 2])
    rep = detect_closed_orbit(thurston.X, start, HEIS, tol=1e-8, horizon=100)
    assert rep.closed
    assert rep.period == pytest.approx(math.pi, abs=1e-8)


def test_x_orbit_on_bad_set_has_period_one(thurston):
    start = np.array([0.2, 0.3, 0.4, 0.5, 0.0])
    rep = detect_closed_orbit(thurston.X, start, HEIS, tol=1e-8, horizon=100)
    assert rep.closed
    assert rep.period == pytest.approx(1.0, abs=1e-8)
    assert rep.word == (0, 0, -1, 0, 0)


def test_irrational_line_on_torus_does_not_close():
    q = QuotientSpec("flat-torus", 2)
    rep = detect_closed_orbit(constant_field([1.0, math.sqrt(2)]), np.zeros(2), q, tol=1e-8, horizon=200)
    assert not rep.closed


def test_rational_line_on_torus_closes():
    q = QuotientSpec("flat-torus", 2)
    rep = detect_closed_orbit(constant_field([1.0, 2.0]), np.zeros(2), q, tol=1e-8, horizon=200)
    assert rep.closed
    assert rep.period == pytest.approx(2 * math.pi, abs=1e-8)
    assert rep.length == pytest.approx(2 * math.pi * math.sqrt(5), rel=1e-10)


def test_rk4_order(thurston):
    p0 = np.array([0.1, 0.2, 0.3, 0.4, 0.9])
    slope = rk4_order(thurston.W, p0, 2.0, lambda s: thurston.exact_flow("W", p0, s))
    assert slope == pytest.approx(4.0, abs=0.3)


@pytest.mark.parametrize("method", ADAPTIVE_METHODS)
def test_flow_methods_agree_with_closed_form(thurston, method):
    p0 = np.array([0.1, 0.2, 0.3, 0.4, 0.9])
    traj = integrate_flow(thurston.W, p0, [0, 3.0], 1e-11, method=method)
    assert np.max(np.abs(traj.point(3.0) - thurston.exact_flow("W", p0, 3.0))) < 1e-8


def test_rotation_flow_is_circle():
    rot = affine_field([0, 0], [[0, -1], [1, 0]])
    traj = integrate_flow(rot, [1.0, 0.0], [0, math.pi], 1e-12)
    assert np.allclose(traj.point(math.pi), [-1.0, 0.0], atol=1e-10)
    assert arc_length(traj) == pytest.approx(math.pi, rel=1e-10)


def test_energy_drift_on_sphere():
    m = round_sphere().metric
    st = GeodesicState.create(m, [1.0, 0.0], [0.3, 0.8])
    tol = 1e-10
    traj = integrate_geodesic(m, st, [0, 20.0], tol)
    assert traj.energy_drift <= 100 * tol
    assert st.causal == "spacelike"


def test_great_circle_length():
    m = round_sphere().metric
    st = GeodesicState.create(m, [math.pi / 2, 0.0], [0.0, 1.0])
    rep = detect_closed_orbit(m, st, QuotientSpec("cylinder", 2, periodic_axis=1), tol=1e-8, horizon=50,
                              integ_tol=1e-12, aux=m)
    assert rep.closed
    assert rep.length == pytest.approx(2 * math.pi, rel=1e-9)


def test_causal_type():
    assert causal_type(1.0) == "spacelike"
    assert causal_type(-1.0) == "timelike"
    assert causal_type(1e-14) == "lightlike"


def test_nonfinite_state_rejected():
    m = CoordinateMetric.constant(np.eye(2))
    with pytest.raises(ValueError):
        GeodesicState.create(m, [math.nan, 0.0], [1.0, 0.0])


def test_blowup_raises_integration_error():
    from geofol.frames import VectorField
    quad = VectorField("quad", lambda p: np.array([p[0] ** 2]), lambda p: np.array([[2 * p[0]]]))
    with pytest.raises(IntegrationError):
        integrate_flow(quad, [1.0], [0, 2.0], 1e-10)


def test_csv_columns(tmp_path, lightlike):
    p0 = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    coord = CoordinateMetric.from_frame_metric(lightlike.metric)
    st = GeodesicState.create(coord, p0, lightlike.X(p0))
    traj = integrate_geodesic(coord, st, [0, 1.0], 1e-10)
    path = tmp_path / "t.csv"
    write_trajectory_csv(traj, path, ["x", "y", "z", "t", "u"], lambda p, v: coord.inner(p, v, v), samples=5)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["s", "x", "y", "z", "t", "u", "vx", "vy", "vz", "vt", "vu", "g_vv"]
    assert len(rows) == 6
    assert all(abs(float(r[-1])) < 1e-9 for r in rows[1:])


def test_reduce_of_value_just_below_lattice_point():
    p, word = HEIS.reduce([0.0, 0.0, 0.0, 0.0, -5e-324])
    assert p[4] == 0.0 and word == (0, 0, 0, 0, 0)
