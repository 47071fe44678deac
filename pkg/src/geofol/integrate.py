"""Flow and geodesic integration, lattice quotients, closed-orbit detection, arclength."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq, minimize_scalar

from .connection import CoordinateMetric, geodesic_acceleration
from .frames import VectorField

Array = np.ndarray
TWO_PI = 2 * math.pi


class IntegrationError(RuntimeError):
    """The integrator could not continue (step-size underflow, non-finite state)."""


# ---------------------------------------------------------------- states

def causal_type(value: float, tol: float = 1e-12) -> str:
    if value > tol:
        return "spacelike"
    if value < -tol:
        return "timelike"
    return "lightlike"


@dataclass(frozen=True)
class GeodesicState:
    point: Array
    velocity: Array
    causal: str = "unknown"

    @classmethod
    def create(cls, metric: CoordinateMetric, point, velocity, lightlike_tol: float = 1e-12) -> "GeodesicState":
        p = np.asarray(point, dtype=float)
        v = np.asarray(velocity, dtype=float)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
            raise ValueError("geodesic state must be finite")
        return cls(p, v, causal_type(metric.inner(p, v, v), lightlike_tol))

    def stacked(self) -> Array:
        return np.concatenate([self.point, self.velocity])


@dataclass
class Trajectory:
    """Samples of an integrated curve plus its dense interpolant."""

    s: Array
    states: Array
    dense: Callable[[Array], Array]
    dim: int
    tol: float
    kind: str
    velocity_fn: Callable[[Array], Array] | None = None
    energy: Array | None = None
    status: str = "completed"

    def __call__(self, s) -> Array:
        return self.dense(s)

    def point(self, s) -> Array:
        return np.asarray(self.dense(s))[: self.dim]

    def velocity(self, s) -> Array:
        y = np.asarray(self.dense(s))
        if self.kind == "geodesic":
            return y[self.dim:]
        return self.velocity_fn(y)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.s[0]), float(self.s[-1])

    @property
    def energy_drift(self) -> float:
        if self.energy is None or len(self.energy) == 0:
            return 0.0
        return float(np.max(np.abs(self.energy - self.energy[0])))


ADAPTIVE_METHODS = ("DOP853", "RK45")
DEFAULT_METHOD = "DOP853"


def _solve(rhs, y0, span, tol, events, max_step, method=DEFAULT_METHOD):
    sol = solve_ivp(rhs, span, y0, method=method, rtol=tol, atol=tol, dense_output=True,
                    events=events, max_step=max_step)
    if sol.status == -1:
        where = sol.t[-1] if len(sol.t) else span[0]
        raise IntegrationError(f"integration failed at s={where!r}: {sol.message}")
    if not np.all(np.isfinite(sol.y)):
        raise IntegrationError("non-finite state encountered")
    status = "event" if sol.status == 1 else "completed"
    return sol, status


def rk4(rhs: Callable[[float, Array], Array], y0: Array, s_end: float, steps: int) -> tuple[Array, Array]:
    """Classical fixed-step fourth-order Runge-Kutta; returns (s, states)."""
    h = s_end / steps
    y = np.array(y0, dtype=float)
    ys = [y.copy()]
    s = 0.0
    for _ in range(steps):
        k1 = rhs(s, y)
        k2 = rhs(s + h / 2, y + h / 2 * k1)
        k3 = rhs(s + h / 2, y + h / 2 * k2)
        k4 = rhs(s + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s += h
        ys.append(y.copy())
    return np.linspace(0.0, s_end, steps + 1), np.array(ys)


def _hermite_dense(s: Array, ys: Array, rhs) -> Callable:
    dy = np.array([rhs(si, yi) for si, yi in zip(s, ys)])
    spline = CubicHermiteSpline(s, ys, dy, axis=0)
    return lambda q: spline(q).T if np.ndim(q) else spline(q)


def integrate_flow(field_: VectorField, p0, span: Sequence[float], tol: float = 1e-10,
                   method: str = DEFAULT_METHOD, steps: int = 1000, events=None,
                   max_step: float = np.inf) -> Trajectory:
    """Integral curve of a vector field. ``method="rk4"`` uses the fixed-step cross-check scheme."""
    p0 = np.asarray(p0, dtype=float)

    def rhs(s, y):
        return field_(y)

    if method == "rk4":
        s, ys = rk4(rhs, p0, span[1], steps)
        return Trajectory(s, ys, _hermite_dense(s, ys, rhs), p0.size, tol, "flow", field_.components,
                          status="completed")
    if method not in ADAPTIVE_METHODS:
        raise ValueError(f"unknown method {method!r}")
    sol, status = _solve(rhs, p0, span, tol, events, max_step, method)
    return Trajectory(sol.t, sol.y.T, sol.sol, p0.size, tol, "flow", field_.components, status=status)


def integrate_geodesic(metric: CoordinateMetric, state: GeodesicState, span: Sequence[float],
                       tol: float = 1e-10, method: str = DEFAULT_METHOD, steps: int = 1000, events=None,
                       max_step: float = np.inf) -> Trajectory:
    """Solve x'' + Gamma(x', x') = 0 and log g(x', x') at every sample."""
    n = metric.dim

    def rhs(s, y):
        return np.concatenate([y[n:], geodesic_acceleration(metric, y[:n], y[n:])])

    y0 = state.stacked()
    # g(v, v) is a sum of terms that can be much larger than the result for
    # near-null directions; tighten the solver so the energy bound holds in absolute terms
    terms = np.abs(metric(state.point) * np.outer(state.velocity, state.velocity)).sum()
    solver_tol = tol / max(1.0, float(terms))
    if method == "rk4":
        s, ys = rk4(rhs, y0, span[1], steps)
        dense, status = _hermite_dense(s, ys, rhs), "completed"
    elif method in ADAPTIVE_METHODS:
        sol, status = _solve(rhs, y0, span, solver_tol, events, max_step, method)
        s, ys, dense = sol.t, sol.y.T, sol.sol
    else:
        raise ValueError(f"unknown method {method!r}")
    energy = np.array([metric.inner(y[:n], y[n:], y[n:]) for y in ys])
    return Trajectory(s, ys, dense, n, tol, "geodesic", energy=energy, status=status)


# ---------------------------------------------------------------- quotients

def _floor_reduce(v: float, period: float) -> tuple[float, int]:
    """(r, k) with r = v + k*period in [0, period)."""
    k = -math.floor(v / period)
    r = v + k * period
    if r >= period:
        r -= period
        k -= 1
    elif r < 0:
        r += period
        k += 1
        if r >= period:  # v sat within rounding below a lattice point
            r = 0.0
            k -= 1
    return r, k


@dataclass(frozen=True)
class QuotientSpec:
    """Lattice quotient of a chart.

    ``heisenberg-torus``: Heisenberg lattice on (x, y, z) plus 2pi shifts of (t, u).
    ``flat-torus``: 2pi shifts of every coordinate.
    ``cylinder``: 2pi shifts of the single axis ``periodic_axis``.
    ``none``: no identification.
    """

    kind: str = "none"
    dim: int = 5
    periodic_axis: int = 1

    def __post_init__(self):
        if self.kind not in ("heisenberg-torus", "flat-torus", "cylinder", "none"):
            raise ValueError(f"unknown quotient kind {self.kind!r}")
        if self.kind == "heisenberg-torus" and self.dim != 5:
            raise ValueError("heisenberg-torus quotient needs a 5-dimensional chart")

    def _periodic_axes(self) -> list[int]:
        if self.kind == "flat-torus":
            return list(range(self.dim))
        if self.kind == "cylinder":
            return [self.periodic_axis]
        if self.kind == "heisenberg-torus":
            return [3, 4]
        return []

    def act(self, word, p) -> Array:
        p = np.array(p, dtype=float)
        if self.kind == "heisenberg-torus":
            a, b, c, mt, mu = word
            x, y, z, t, u = p
            return np.array([x + a, y + b, z + c + a * y, t + TWO_PI * mt, u + TWO_PI * mu])
        for ax, m in zip(self._periodic_axes(), word):
            p[ax] += TWO_PI * m
        return p

    def push(self, word, v) -> Array:
        v = np.array(v, dtype=float)
        if self.kind == "heisenberg-torus":
            v[2] += word[0] * v[1]
        return v

    def identity(self) -> tuple:
        return (0,) * (5 if self.kind == "heisenberg-torus" else len(self._periodic_axes()))

    def reduce(self, p) -> tuple[Array, tuple]:
        """Representative in the fundamental domain and the lattice word mapping p to it."""
        p = np.array(p, dtype=float)
        if self.kind == "heisenberg-torus":
            x, a = _floor_reduce(p[0], 1.0)
            z = p[2] + a * p[1]
            y, b = _floor_reduce(p[1], 1.0)
            z, c = _floor_reduce(z, 1.0)
            t, mt = _floor_reduce(p[3], TWO_PI)
            u, mu = _floor_reduce(p[4], TWO_PI)
            return np.array([x, y, z, t, u]), (a, b, c, mt, mu)
        word = []
        for ax in self._periodic_axes():
            p[ax], k = _floor_reduce(p[ax], TWO_PI)
            word.append(k)
        return p, tuple(word)

    def nearest_image(self, points: Array, p0: Array) -> tuple[Array, list]:
        """For each row of ``points`` the distance to the closest lattice image of p0, and that word."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        p0 = np.asarray(p0, dtype=float)
        if self.kind == "none":
            return np.linalg.norm(P - p0, axis=1), [()] * len(P)
        if self.kind == "heisenberg-torus":
            a0 = np.round(P[:, 0] - p0[0])
            b0 = np.round(P[:, 1] - p0[1])
            t0 = np.round((P[:, 3] - p0[3]) / TWO_PI)
            u0 = np.round((P[:, 4] - p0[4]) / TWO_PI)
            best = np.full(len(P), np.inf)
            words = np.zeros((len(P), 5))
            for da, db, dt, du in product((-1, 0, 1), repeat=4):
                a, b, mt, mu = a0 + da, b0 + db, t0 + dt, u0 + du
                c = np.round(P[:, 2] - p0[2] - a * p0[1])
                img = np.stack([p0[0] + a, p0[1] + b, p0[2] + c + a * p0[1],
                                p0[3] + TWO_PI * mt, p0[4] + TWO_PI * mu], axis=1)
                d = np.linalg.norm(P - img, axis=1)
                better = d < best
                best[better] = d[better]
                words[better] = np.stack([a, b, c, mt, mu], axis=1)[better]
            return best, [tuple(int(v) for v in w) for w in words]
        axes = self._periodic_axes()
        diff = P - p0
        m = np.zeros((len(P), len(axes)))
        for j, ax in enumerate(axes):
            m[:, j] = np.round(diff[:, ax] / TWO_PI)
            diff[:, ax] -= TWO_PI * m[:, j]
        return np.linalg.norm(diff, axis=1), [tuple(int(v) for v in w) for w in m]


# ---------------------------------------------------------------- closure

@dataclass
class ClosureReport:
    closed: bool
    period: float
    length: float
    closure_residual: float
    velocity_mismatch: float
    return_count: int
    word: tuple = ()
    best_approach: float = math.inf
    horizon: float = 0.0
    escaped: bool = False
    trajectory: Trajectory | None = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "closed": bool(self.closed),
            "period": float(self.period),
            "length": float(self.length),
            "closure_residual": float(self.closure_residual),
            "velocity_mismatch": float(self.velocity_mismatch),
            "return_count": int(self.return_count),
            "best_approach": float(self.best_approach),
            "escaped": bool(self.escaped),
        }


def _unit(v: Array) -> Array:
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def _angle(a: Array, b: Array) -> float:
    d = np.linalg.norm(_unit(a) - _unit(b))
    return float(2 * math.asin(min(1.0, d / 2)))


def find_closure(traj: Trajectory, quotient: QuotientSpec, tol: float, relative: bool = False,
                 subdivide: int = 8, aux: Callable[[Array], Array] | None = None,
                 max_chord: float = 0.02) -> ClosureReport:
    """Smallest s > 0 at which the curve returns to a lattice image of its start with matching tangent."""
    s_nodes = traj.s
    nodes_p = np.asarray(traj.states)[:, : traj.dim]
    scale = (1.0 + float(np.max(np.abs(nodes_p)))) if relative else 1.0
    chords = np.linalg.norm(np.diff(nodes_p, axis=0), axis=1) / scale
    pieces = [np.linspace(s_nodes[i], s_nodes[i + 1], max(subdivide, int(math.ceil(chords[i] / max_chord))) + 1)
              for i in range(len(s_nodes) - 1)]
    fine = np.unique(np.concatenate(pieces)) if pieces else s_nodes
    Y = np.asarray(traj(fine)).T
    P = Y[:, : traj.dim]
    p0 = P[0]
    v0 = traj.velocity(fine[0])
    dist, words = quotient.nearest_image(P, p0)
    dist = dist / scale
    step = np.max(np.linalg.norm(np.diff(P, axis=0), axis=1)) / scale if len(P) > 1 else 0.0
    radius = max(4 * step, 100 * tol)
    left = np.nonzero(dist > radius)[0]
    report = ClosureReport(False, math.nan, math.nan, math.inf, math.inf, 0,
                           horizon=float(fine[-1]), escaped=traj.status == "event", trajectory=traj)
    if len(left) == 0:
        return report
    start = left[0]
    for i in range(start + 1, len(dist) - 1):
        if not (dist[i] <= dist[i - 1] and dist[i] <= dist[i + 1] and dist[i] < radius):
            continue
        report.return_count += 1
        word = words[i]
        target = quotient.act(word, p0)

        def slope(s):
            return float((traj.point(s) - target) @ traj.velocity(s))

        lo, hi = fine[i - 1], fine[i + 1]
        try:
            s_star = brentq(slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        except ValueError:
            res = minimize_scalar(lambda s: float(np.linalg.norm(traj.point(s) - target)),
                                  bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
            s_star = float(res.x)
        residual = float(np.linalg.norm(traj.point(s_star) - target)) / scale
        mismatch = _angle(traj.velocity(s_star), quotient.push(word, v0))
        report.best_approach = min(report.best_approach, residual)
        if residual <= tol and mismatch <= tol:
            report.closed = True
            report.period = float(s_star)
            report.closure_residual = residual
            report.velocity_mismatch = mismatch
            report.word = word
            report.length = arc_length(traj, aux, s_max=s_star)
            return report
    return report


def detect_closed_orbit(source, start, quotient: QuotientSpec, tol: float = 1e-8,
                        horizon: float = 1e4, integ_tol: float = 1e-12, relative: bool = False,
                        initial_span: float = 16.0, events=None,
                        aux: Callable[[Array], Array] | None = None) -> ClosureReport:
    """Integrate a field (or geodesic) with a doubling span until it closes or the horizon is reached."""
    span = min(initial_span, horizon)
    while True:
        if isinstance(source, VectorField):
            traj = integrate_flow(source, start, [0.0, span], integ_tol, events=events)
        elif isinstance(source, CoordinateMetric):
            traj = integrate_geodesic(source, start, [0.0, span], integ_tol, events=events)
        else:
            raise TypeError("source must be a VectorField or a CoordinateMetric")
        report = find_closure(traj, quotient, tol, relative, aux=aux)
        if report.closed or traj.status == "event" or span >= horizon:
            return report
        span = min(2 * span, horizon)


# ---------------------------------------------------------------- arclength

def arc_length(traj: Trajectory, aux: Callable[[Array], Array] | None = None,
               s_max: float | None = None, rtol: float = 1e-13) -> float:
    """Integral of sqrt|v^T A(p) v| (A = aux Gram matrix, Euclidean by default).

    Composite Gauss-Legendre on the solver steps; the order is raised until the
    total stabilizes.
    """
    s0, s1 = traj.span
    s_max = s1 if s_max is None else min(s_max, s1)
    nodes = np.concatenate([traj.s[(traj.s > s0) & (traj.s < s_max)], [s_max]])
    nodes = np.concatenate([[s0], nodes])

    def speed(s):
        p, v = traj.point(s), traj.velocity(s)
        if aux is None:
            return float(np.linalg.norm(v))
        return math.sqrt(abs(float(v @ aux(p) @ v)))

    prev = None
    for order in (4, 8, 16):
        x, w = leggauss(order)
        total = 0.0
        for a, b in zip(nodes[:-1], nodes[1:]):
            mid, half = (a + b) / 2, (b - a) / 2
            total += half * sum(wi * speed(mid + half * xi) for xi, wi in zip(x, w))
        if prev is not None and abs(total - prev) <= rtol * max(1.0, abs(total)):
            return total
        prev = total
    return prev


# ---------------------------------------------------------------- CSV

def write_trajectory_csv(traj: Trajectory, path, coord_names: Sequence[str],
                         inner: Callable[[Array, Array], float], samples: int = 400,
                         s_max: float | None = None) -> None:
    """Columns: s, coordinates, velocity components (prefixed v), g_vv."""
    s0, s1 = traj.span
    s_max = s1 if s_max is None else min(s_max, s1)
    header = ["s", *coord_names, *(f"v{c}" for c in coord_names), "g_vv"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for s in np.linspace(s0, s_max, samples):
            p, v = traj.point(s), traj.velocity(s)
            w.writerow([repr(float(s)), *(repr(float(c)) for c in p), *(repr(float(c)) for c in v),
                        repr(float(inner(p, v)))])
