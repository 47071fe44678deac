"""Closed-geodesic audits on 2-dimensional model geometries.

The one-sheeted hyperboloid S^2_1(r) = {<x, x>_1 = r^2} in R^3 with
<x, x>_1 = -x0^2 + x1^2 + x2^2 is charted by
F(w, theta) = r (sinh w, cosh w cos theta, cosh w sin theta), theta mod 2pi.
The Einstein torus is R^2 / (2pi Z)^2 with metric d theta^2 - d phi^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np
from shapely.geometry import MultiLineString

from .connection import CoordinateMetric
from .integrate import (
    ClosureReport,
    GeodesicState,
    QuotientSpec,
    Trajectory,
    causal_type,
    detect_closed_orbit,
)

Array = np.ndarray


class RankDeficientEmbedding(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingSpec:
    """Chart map into (R^m, <,>_nu) with its Jacobian; ``nu`` leading minus signs."""

    ambient_dim: int
    nu: int
    map: Callable[[Array], Array]
    jacobian: Callable[[Array], Array]
    radius: float = 1.0
    name: str = "embedding"
    mp_map: Callable | None = None

    def ambient_form(self) -> Array:
        return np.diag([-1.0] * self.nu + [1.0] * (self.ambient_dim - self.nu))

    def inner(self, a: Array, b: Array) -> float:
        return float(a @ self.ambient_form() @ b)


def pseudosphere_embedding(r: float = 1.0) -> EmbeddingSpec:
    def F(p):
        w, th = p
        return r * np.array([math.sinh(w), math.cosh(w) * math.cos(th), math.cosh(w) * math.sin(th)])

    def J(p):
        w, th = p
        ch, sh = math.cosh(w), math.sinh(w)
        return r * np.array([[ch, 0.0], [sh * math.cos(th), -ch * math.sin(th)], [sh * math.sin(th), ch * math.cos(th)]])

    def F_mp(p):
        w, th = (mpmath.mpf(float(c)) for c in p)
        return [r * mpmath.sinh(w), r * mpmath.cosh(w) * mpmath.cos(th), r * mpmath.cosh(w) * mpmath.sin(th)]

    return EmbeddingSpec(3, 1, F, J, r, f"S2_1({r})", F_mp)


def sphere_embedding(r: float = 1.0) -> EmbeddingSpec:
    """Round sphere, chart (polar angle, azimuth)."""

    def F(p):
        th, ph = p
        return r * np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])

    def J(p):
        th, ph = p
        return r * np.array([
            [math.cos(th) * math.cos(ph), -math.sin(th) * math.sin(ph)],
            [math.cos(th) * math.sin(ph), math.sin(th) * math.cos(ph)],
            [-math.sin(th), 0.0],
        ])

    return EmbeddingSpec(3, 0, F, J, r, f"S2({r})")


def pullback_metric(E: EmbeddingSpec, p, rank_tol: float = 1e-12) -> Array:
    """g_ij = <d_i F, d_j F>_nu."""
    J = E.jacobian(np.asarray(p, dtype=float))
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] <= rank_tol * max(1.0, sv[0]):
        raise RankDeficientEmbedding(f"{E.name}: Jacobian rank deficient at {np.asarray(p).tolist()}")
    return J.T @ E.ambient_form() @ J


# ---------------------------------------------------------------- models

@dataclass(frozen=True)
class SurfaceModel:
    kind: str
    metric: CoordinateMetric
    quotient: QuotientSpec
    embedding: EmbeddingSpec | None = None
    radius: float = 1.0
    coord_names: tuple[str, str] = ("q0", "q1")

    @property
    def escape_axis(self) -> int | None:
        return 0 if self.kind == "pseudosphere" else None


def pseudosphere(r: float = 1.0) -> SurfaceModel:
    r2 = r * r

    def g(p):
        return np.diag([-r2, r2 * math.cosh(p[0]) ** 2])

    def dg(p):
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = 2 * r2 * math.cosh(p[0]) * math.sinh(p[0])
        return out

    return SurfaceModel("pseudosphere", CoordinateMetric(2, g, dg, f"S2_1({r})"),
                        QuotientSpec("cylinder", 2, periodic_axis=1), pseudosphere_embedding(r), r, ("w", "theta"))


def einstein_torus() -> SurfaceModel:
    return SurfaceModel("einstein-torus", CoordinateMetric.constant(np.diag([1.0, -1.0]), "einstein-torus"),
                        QuotientSpec("flat-torus", 2), None, 1.0, ("theta", "phi"))


def round_sphere(r: float = 1.0) -> SurfaceModel:
    r2 = r * r

    def g(p):
        return np.diag([r2, r2 * math.sin(p[0]) ** 2])

    def dg(p):
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = 2 * r2 * math.sin(p[0]) * math.cos(p[0])
        return out

    return SurfaceModel("round-sphere", CoordinateMetric(2, g, dg, f"S2({r})"),
                        QuotientSpec("cylinder", 2, periodic_axis=1), sphere_embedding(r), r, ("theta", "phi"))


def flat_plane() -> SurfaceModel:
    return SurfaceModel("flat-plane", CoordinateMetric.constant(np.eye(2), "flat-plane"), QuotientSpec("none", 2),
                        coord_names=("x", "y"))


def minkowski_plane() -> SurfaceModel:
    return SurfaceModel("minkowski-plane", CoordinateMetric.constant(np.diag([1.0, -1.0]), "minkowski-plane"),
                        QuotientSpec("none", 2), coord_names=("t", "x"))


# ---------------------------------------------------------------- audits

@dataclass
class GeodesicAudit:
    point: list
    velocity: list
    causal: str
    closed: bool
    period: float
    length: float
    closure_residual: float
    max_abs_escape_coord: float
    simple: bool | None
    energy_drift: float
    embedding_drift: float = 0.0
    planarity: float = 0.0
    report: ClosureReport | None = field(default=None, repr=False)

    def summary(self) -> dict:
        return {
            "point": self.point,
            "velocity": self.velocity,
            "causal": self.causal,
            "closed": self.closed,
            "period": self.period,
            "length": self.length,
            "closure_residual": self.closure_residual,
            "max_abs_escape_coord": self.max_abs_escape_coord,
            "simple": self.simple,
            "energy_drift": self.energy_drift,
            "embedding_drift": self.embedding_drift,
            "planarity": self.planarity,
        }


def _trace_pieces(points: Array, quotient: QuotientSpec) -> list[Array]:
    """Cut an unwrapped polyline into pieces lying in single fundamental cells, shifted into the base cell."""
    axes = quotient._periodic_axes()
    period = 2 * math.pi
    cells = np.floor(points[:, axes] / period).astype(int) if axes else np.zeros((len(points), 0), int)
    pieces, cur = [], [points[0]]
    for i in range(1, len(points)):
        if np.array_equal(cells[i], cells[i - 1]):
            cur.append(points[i])
            continue
        a, b = points[i - 1], points[i]
        # first periodic boundary crossed between a and b
        best_f, best_shift = 1.0, None
        for j, ax in enumerate(axes):
            if cells[i][j] != cells[i - 1][j]:
                edge = period * max(cells[i][j], cells[i - 1][j])
                f = (edge - a[ax]) / (b[ax] - a[ax])
                if f < best_f or best_shift is None:
                    best_f, best_shift = f, j
        cross = a + best_f * (b - a)
        cur.append(cross)
        pieces.append((np.array(cur), cells[i - 1]))
        cur = [cross, b]
    pieces.append((np.array(cur), cells[-1]))
    out = []
    for pts, cell in pieces:
        shifted = pts.copy()
        for j, ax in enumerate(axes):
            shifted[:, ax] -= period * cell[j]
        out.append(shifted)
    return out


def is_simple_closed(traj: Trajectory, period: float, quotient: QuotientSpec, samples: int = 1200) -> bool:
    """No self-intersection of the position trace on [0, period) in the quotient."""
    s = np.linspace(0.0, period, samples + 1)
    pts = np.asarray(traj(s)).T[:, : traj.dim]
    shift = pts[-1] - pts[0]
    pts[-1] = pts[0] + np.round(shift / (2 * math.pi)) * 2 * math.pi  # snap the closing point onto the lattice image
    pieces = [p for p in _trace_pieces(pts, quotient) if len(p) >= 2]
    return bool(MultiLineString([p.tolist() for p in pieces]).is_simple)


def embedding_drift(E: EmbeddingSpec, points: Array) -> float:
    """max |<F, F>_nu - r^2| along a trace, evaluated in 40-digit arithmetic."""
    worst = mpmath.mpf(0)
    with mpmath.workdps(40):
        for p in points:
            F = E.mp_map(p)
            val = -sum(F[i] ** 2 for i in range(E.nu)) + sum(F[i] ** 2 for i in range(E.nu, E.ambient_dim))
            worst = max(worst, abs(val - E.radius**2))
    return float(worst)


def planarity_defect(E: EmbeddingSpec, p0: Array, v0: Array, points: Array) -> float:
    """Geodesics of a pseudo-sphere lie in the 2-plane span{F(p0), dF v0}; relative volume defect."""
    a = E.map(p0)
    b = E.jacobian(p0) @ v0
    worst = 0.0
    for p in points:
        c = E.map(p)
        vol = abs(np.linalg.det(np.stack([a, b, c])))
        worst = max(worst, vol / (np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(c)))
    return float(worst)


def classify_geodesic(model: SurfaceModel, state: GeodesicState, horizon: float = 100.0, tol: float = 1e-8,
                      integ_tol: float = 1e-11, escape_bound: float = 10.5) -> GeodesicAudit:
    events = None
    if model.escape_axis is not None:
        ax = model.escape_axis

        def escape(s, y):
            return abs(y[ax]) - escape_bound

        escape.terminal = True
        events = [escape]
    rep = detect_closed_orbit(model.metric, state, model.quotient, tol=tol, horizon=horizon,
                              integ_tol=integ_tol, events=events, initial_span=8.0,
                              aux=model.metric)
    traj = rep.trajectory
    s_end = rep.period if rep.closed else traj.span[1]
    dense_s = np.linspace(0.0, s_end, 400)
    pts = np.asarray(traj(dense_s)).T[:, :2]
    escape_coord = float(np.max(np.abs(pts[:, model.escape_axis]))) if model.escape_axis is not None else 0.0
    simple = is_simple_closed(traj, rep.period, model.quotient) if rep.closed else None
    emb = plan = 0.0
    if model.embedding is not None and model.embedding.mp_map is not None:
        emb = embedding_drift(model.embedding, pts)
        plan = planarity_defect(model.embedding, state.point, state.velocity, pts)
    return GeodesicAudit(
        state.point.tolist(), state.velocity.tolist(), state.causal, rep.closed, rep.period, rep.length,
        rep.closure_residual, escape_coord, simple, traj.energy_drift, emb, plan, rep,
    )


def random_state(model: SurfaceModel, causal: str, rng: np.random.Generator,
                 box: tuple[tuple[float, float], tuple[float, float]] | None = None) -> GeodesicState:
    """Uniform point in the chart box, uniform direction, scaled to |g(v, v)| = 1 with the requested sign."""
    if box is None:
        box = ((-1.0, 1.0), (0.0, 2 * math.pi)) if model.kind == "pseudosphere" else ((0.0, 2 * math.pi),) * 2
    p = np.array([rng.uniform(*box[0]), rng.uniform(*box[1])])
    g = model.metric(p)
    if causal == "lightlike":
        a, b, c = g[0, 0], g[0, 1], g[1, 1]
        disc = b * b - a * c
        if disc <= 0:
            raise ValueError("metric has no null directions (Riemannian)")
        root = (-b + (1 if rng.integers(2) else -1) * math.sqrt(disc)) / c
        return GeodesicState.create(model.metric, p, [1.0, root])
    want = 1 if causal == "spacelike" else -1
    for _ in range(1000):
        ang = rng.uniform(0, 2 * math.pi)
        d = np.array([math.cos(ang), math.sin(ang)])
        q = float(d @ g @ d)
        if q * want > 1e-3 * float(np.max(np.abs(g))):
            return GeodesicState.create(model.metric, p, d / math.sqrt(abs(q)))
    raise ValueError(f"could not draw a {causal} direction at {p.tolist()}")


def sc_audit(model: SurfaceModel, causal: str, samples: int = 20, seed: int = 0, horizon: float = 100.0,
             tol: float = 1e-8, integ_tol: float = 1e-11) -> dict:
    """Closure statistics for random unit geodesics of one causal type."""
    if causal not in ("spacelike", "timelike", "lightlike"):
        raise ValueError(causal)
    rng = np.random.default_rng(seed)
    audits = []
    for _ in range(samples):
        st = random_state(model, causal, rng)
        audits.append(classify_geodesic(model, st, horizon, tol, integ_tol))
    closed = [a for a in audits if a.closed]
    lengths = [a.length for a in closed]
    periods = [a.period for a in closed]
    return {
        "model": model.kind,
        "causal": causal,
        "samples": samples,
        "seed": seed,
        "closed": len(closed),
        "fraction_closed": len(closed) / samples if samples else 0.0,
        "length_dispersion": (max(lengths) / min(lengths) - 1) if lengths and min(lengths) > 0 else None,
        "mean_length": float(np.mean(lengths)) if lengths else None,
        "period_range": [min(periods), max(periods)] if periods else None,
        "all_simple": all(a.simple for a in closed) if closed else None,
        "min_escape_coord": min(a.max_abs_escape_coord for a in audits) if audits else None,
        "max_energy_drift": max(a.energy_drift for a in audits) if audits else 0.0,
        "max_embedding_drift": max(a.embedding_drift for a in audits) if audits else 0.0,
        "max_planarity_defect": max(a.planarity for a in audits) if audits else 0.0,
        "audits": audits,
    }


def causal_of(model: SurfaceModel, p, v) -> str:
    return causal_type(model.metric.inner(np.asarray(p, float), np.asarray(v, float), np.asarray(v, float)))
