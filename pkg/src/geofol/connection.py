"""Levi-Civita connection by two independent routes.

The Koszul route works directly with a frame Gram matrix and analytic field
Jacobians. The Christoffel route differentiates a coordinate metric
(analytically when a derivative callback is supplied, otherwise with
Richardson-extrapolated central differences).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .frames import DegenerateMetricError, MetricModel, VectorField, lie_bracket

Array = np.ndarray

DEFAULT_COND_LIMIT = 1e12


@dataclass(frozen=True)
class LocalGeometry:
    """Coordinate metric at a point and its coordinate partials ``dg[k]``."""

    point: Array
    g: Array
    dg: Array
    frame: Array
    frame_gram: Array


def local_geometry(metric: MetricModel, p: Array) -> LocalGeometry:
    p = np.asarray(p, dtype=float)
    F = metric.frame.matrix(p)
    P = np.linalg.inv(F)
    G = metric.frame_gram(p)
    dG = metric.gram_derivative(p)
    n = p.size
    # column j of dF[k] is d_k E_j
    jacs = [f.jacobian(p) for f in metric.frame.fields]
    g = P.T @ G @ P
    dg = np.empty((n, n, n))
    for k in range(n):
        dF = np.column_stack([J[:, k] for J in jacs])
        dP = -P @ dF @ P
        dg[k] = dP.T @ G @ P + P.T @ dG[k] @ P + P.T @ G @ dP
    g = 0.5 * (g + g.T)
    dg = 0.5 * (dg + np.transpose(dg, (0, 2, 1)))
    return LocalGeometry(p, g, dg, F, G)


def _inner(geo: LocalGeometry, a: Array, b: Array) -> float:
    return float(a @ geo.g @ b)


def directional_inner(geo: LocalGeometry, A: VectorField, B: VectorField, C: VectorField) -> float:
    """``A . g(B, C)`` at the point of ``geo``."""
    p = geo.point
    a, b, c = A(p), B(p), C(p)
    dB = B.jacobian(p) @ a
    dC = C.jacobian(p) @ a
    dg_a = np.tensordot(a, geo.dg, axes=1)
    return float(dB @ geo.g @ c + b @ geo.g @ dC + b @ dg_a @ c)


def koszul_pair(metric: MetricModel | LocalGeometry, A: VectorField, B: VectorField, C: VectorField, p: Array | None = None) -> float:
    """``2 g(nabla_A B, C)`` from the Koszul formula."""
    geo = metric if isinstance(metric, LocalGeometry) else local_geometry(metric, p)
    q = geo.point
    a, b, c = A(q), B(q), C(q)
    return (
        directional_inner(geo, A, B, C)
        + directional_inner(geo, B, A, C)
        - directional_inner(geo, C, A, B)
        + _inner(geo, lie_bracket(A, B, q), c)
        - _inner(geo, lie_bracket(A, C, q), b)
        - _inner(geo, lie_bracket(B, C, q), a)
    )


def gram_solve(G: Array, rhs: Array, cond_limit: float = DEFAULT_COND_LIMIT, where=None) -> Array:
    """Pivoted LU solve with a condition-number guard."""
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > cond_limit:
        raise DegenerateMetricError(f"Gram system ill-conditioned (cond={cond:.3e}) at {where}")
    return np.linalg.solve(G, rhs)


def covariant_deriv(metric: MetricModel, A: VectorField, B: VectorField, p: Array,
                    geo: LocalGeometry | None = None, cond_limit: float = DEFAULT_COND_LIMIT) -> Array:
    """``nabla_A B`` in coordinate components, via Koszul against each frame field."""
    geo = geo or local_geometry(metric, p)
    k = np.array([koszul_pair(geo, A, B, E) / 2 for E in metric.frame.fields])
    coef = gram_solve(geo.frame_gram, k, cond_limit, where=np.asarray(p).tolist())
    return geo.frame @ coef


def euclidean_norm(v: Array, p: Array | None = None) -> float:
    return float(np.linalg.norm(v))


def geodesic_residual(metric: MetricModel, X: VectorField, p: Array,
                      aux: Callable[[Array, Array], float] = euclidean_norm) -> float:
    """Size of ``nabla_X X`` in an auxiliary norm (Euclidean chart norm by default)."""
    return aux(covariant_deriv(metric, X, X, p), p)


# ---------------------------------------------------------------- Christoffel route

def richardson_derivative(func: Callable[[Array], Array], p: Array, h: float = 3e-4, levels: int = 2) -> Array:
    """``out[k] = d_k func(p)`` by central differences with ``levels`` Richardson steps.

    Two levels (steps h, h/2, h/4) give a sixth-order estimate; the steep
    smooth steps in the glued metrics need it to reach 1e-9.
    """
    p = np.asarray(p, dtype=float)
    out = []
    for k in range(p.size):
        step = h * (1.0 + abs(p[k]))
        e = np.zeros(p.size)
        e[k] = step
        table = []
        for i in range(levels + 1):
            f = 0.5**i
            table.append((np.asarray(func(p + f * e)) - np.asarray(func(p - f * e))) / (2 * f * step))
        for lev in range(1, levels + 1):
            w = 4.0**lev
            table = [(w * table[i + 1] - table[i]) / (w - 1) for i in range(len(table) - 1)]
        out.append(table[0])
    return np.array(out)


@dataclass(frozen=True)
class CoordinateMetric:
    """A metric given by its coordinate matrix, with optional analytic partials."""

    dim: int
    matrix: Callable[[Array], Array]
    derivative: Callable[[Array], Array] | None = None
    name: str = "metric"
    fd_step: float = 3e-4

    def __call__(self, p: Array) -> Array:
        return np.asarray(self.matrix(np.asarray(p, dtype=float)), dtype=float)

    def partials(self, p: Array) -> Array:
        if self.derivative is not None:
            return np.asarray(self.derivative(np.asarray(p, dtype=float)), dtype=float)
        return richardson_derivative(self.__call__, p, self.fd_step)

    def inner(self, p: Array, a: Array, b: Array) -> float:
        return float(a @ self(p) @ b)

    @classmethod
    def constant(cls, matrix, name: str = "flat") -> "CoordinateMetric":
        M = np.array(matrix, dtype=float)
        n = M.shape[0]
        return cls(n, lambda p: M, lambda p: np.zeros((n, n, n)), name)

    @classmethod
    def from_frame_metric(cls, metric: MetricModel, fd_step: float = 3e-4) -> "CoordinateMetric":
        """Coordinate metric ``F^-T G F^-1`` differentiated by finite differences only."""
        return cls(metric.dim, metric.coordinate_matrix, None, metric.name, fd_step)


def christoffels(metric: CoordinateMetric, p: Array) -> Array:
    """``Gamma[k, i, j]`` (upper index first)."""
    g = metric(p)
    dg = metric.partials(p)  # dg[l, i, j] = d_l g_ij
    # first kind: Gamma_{l i j} = (d_i g_lj + d_j g_li - d_l g_ij) / 2
    first = 0.5 * (np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (1, 2, 0)) - dg)
    gamma = np.linalg.solve(g, first.reshape(g.shape[0], -1)).reshape(first.shape)
    return 0.5 * (gamma + np.transpose(gamma, (0, 2, 1)))


def covariant_deriv_christoffel(metric: CoordinateMetric, A: VectorField, B: VectorField, p: Array) -> Array:
    p = np.asarray(p, dtype=float)
    a, b = A(p), B(p)
    return B.jacobian(p) @ a + np.einsum("kij,i,j->k", christoffels(metric, p), a, b)


def geodesic_acceleration(metric: CoordinateMetric, p: Array, v: Array) -> Array:
    return -np.einsum("kij,i,j->k", christoffels(metric, p), v, v)


def metric_compatibility_defect(metric: CoordinateMetric, p: Array) -> float:
    """max |d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il|."""
    g = metric(p)
    dg = metric.partials(p)
    G = christoffels(metric, p)
    lowered = np.einsum("lki,lj->kij", G, g)
    return float(np.max(np.abs(dg - lowered - np.transpose(lowered, (0, 2, 1)))))
