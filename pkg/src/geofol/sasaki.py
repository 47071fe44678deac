"""Sasaki metric on the tangent bundle of a coordinate chart.

A tangent vector to TM at (x, v) is written (xdot, vdot). The connection map
sends it to ``vdot + Gamma(x)(xdot, v)`` and the bundle projection to ``xdot``;
the Sasaki metric is g on both pieces added together.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .connection import CoordinateMetric, christoffels, richardson_derivative
from .frames import DegenerateMetricError, signature
from .integrate import GeodesicState, Trajectory, causal_type, integrate_geodesic

Array = np.ndarray


@dataclass(frozen=True)
class SasakiModel:
    base: CoordinateMetric
    det_floor: float = 1e-12
    fd_step: float = 3e-4

    @property
    def dim(self) -> int:
        return 2 * self.base.dim

    def split(self, q) -> tuple[Array, Array]:
        q = np.asarray(q, dtype=float)
        n = self.base.dim
        return q[:n], q[n:]

    def _base_metric(self, x: Array) -> Array:
        g = self.base(x)
        if abs(np.linalg.det(g)) < self.det_floor:
            raise DegenerateMetricError(f"base metric degenerate at {x.tolist()}")
        return g

    def connection_matrix(self, q) -> Array:
        """``A[k, i] = Gamma^k_ij(x) v^j``, so the connection map is ``vdot + A xdot``."""
        x, v = self.split(q)
        return np.einsum("kij,j->ki", christoffels(self.base, x), v)

    def connection_map(self, q, xi) -> Array:
        n = self.base.dim
        xi = np.asarray(xi, dtype=float)
        return xi[n:] + self.connection_matrix(q) @ xi[:n]

    @staticmethod
    def projection(xi) -> Array:
        xi = np.asarray(xi, dtype=float)
        return xi[: xi.size // 2]

    def metric(self, q) -> Array:
        """Coordinate matrix of the Sasaki metric, as ``T^T diag(g, g) T``."""
        x, _ = self.split(q)
        n = self.base.dim
        g = self._base_metric(x)
        T = np.eye(2 * n)
        T[n:, :n] = self.connection_matrix(q)
        D = np.zeros((2 * n, 2 * n))
        D[:n, :n] = g
        D[n:, n:] = g
        M = T.T @ D @ T
        return 0.5 * (M + M.T)

    def metric_blocks(self, q) -> Array:
        """Same matrix assembled block by block; used to cross-check ``metric``."""
        x, _ = self.split(q)
        n = self.base.dim
        g = self._base_metric(x)
        A = self.connection_matrix(q)
        M = np.empty((2 * n, 2 * n))
        M[:n, :n] = g + A.T @ g @ A
        M[:n, n:] = A.T @ g
        M[n:, :n] = g @ A
        M[n:, n:] = g
        return M

    def inner(self, q, a, b) -> float:
        return float(np.asarray(a) @ self.metric(q) @ np.asarray(b))

    def horizontal_lift(self, q, w) -> Array:
        w = np.asarray(w, dtype=float)
        return np.concatenate([w, -self.connection_matrix(q) @ w])

    def vertical_lift(self, w) -> Array:
        w = np.asarray(w, dtype=float)
        return np.concatenate([np.zeros_like(w), w])

    def as_coordinate_metric(self) -> CoordinateMetric:
        """The Sasaki metric with finite-difference partials on the 2n-chart."""
        return CoordinateMetric(self.dim, self.metric, None, f"sasaki({self.base.name})", self.fd_step)

    def spray(self, q) -> Array:
        """Geodesic spray ``(v, -Gamma(v, v))``: the velocity of a tangent-lifted geodesic."""
        x, v = self.split(q)
        return np.concatenate([v, -np.einsum("kij,i,j->k", christoffels(self.base, x), v, v)])


@dataclass
class LiftReport:
    base_causal: str
    max_residual: float
    max_energy_gap: float
    lift_energy: float
    base_energy: float
    lift_causal: str
    samples: int
    residuals: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "base_causal": self.base_causal,
            "lift_causal": self.lift_causal,
            "max_residual": self.max_residual,
            "max_energy_gap": self.max_energy_gap,
            "base_energy": self.base_energy,
            "lift_energy": self.lift_energy,
            "samples": self.samples,
        }


def lift_residual(model: SasakiModel, q) -> float:
    """Norm of the Sasaki geodesic equation applied to the lifted curve through q."""
    q = np.asarray(q, dtype=float)
    Z = model.spray(q)
    accel = richardson_derivative(model.spray, q, model.fd_step).T @ Z
    Gbar = christoffels(model.as_coordinate_metric(), q)
    return float(np.linalg.norm(accel + np.einsum("kij,i,j->k", Gbar, Z, Z)))


def tangent_lift_check(model: SasakiModel, geodesic: Trajectory, samples: int = 9,
                       causal_tol: float = 1e-9) -> LiftReport:
    """Lift ``gamma`` to ``c = (gamma, gamma')`` and test it against the Sasaki metric."""
    s0, s1 = geodesic.span
    res, gaps, lift_e, base_e = [], [], [], []
    for s in np.linspace(s0, s1, samples):
        x, v = geodesic.point(s), geodesic.velocity(s)
        q = np.concatenate([x, v])
        cdot = model.spray(q)
        e_base = model.base.inner(x, v, v)
        e_lift = model.inner(q, cdot, cdot)
        res.append(lift_residual(model, q))
        gaps.append(abs(e_lift - e_base))
        lift_e.append(e_lift)
        base_e.append(e_base)
    return LiftReport(
        base_causal=causal_type(base_e[0], causal_tol),
        max_residual=max(res),
        max_energy_gap=max(gaps),
        lift_energy=lift_e[0],
        base_energy=base_e[0],
        lift_causal=causal_type(lift_e[0], causal_tol),
        samples=samples,
        residuals=res,
    )


def lift_geodesic(model: SasakiModel, point, velocity, length: float = 2.0, tol: float = 1e-11,
                  samples: int = 9) -> LiftReport:
    state = GeodesicState.create(model.base, point, velocity)
    traj = integrate_geodesic(model.base, state, [0.0, length], tol)
    return tangent_lift_check(model, traj, samples)


def splitting_defects(model: SasakiModel, q, w1, w2) -> dict:
    """Submersion and orthogonality defects for lifts of base vectors ``w1``, ``w2``."""
    x, _ = model.split(q)
    g = model.base(x)
    h1, h2 = model.horizontal_lift(q, w1), model.horizontal_lift(q, w2)
    v1, v2 = model.vertical_lift(w1), model.vertical_lift(w2)
    G = model.metric(q)
    return {
        "submersion": abs(h1 @ G @ h2 - w1 @ g @ w2),
        "vertical": abs(v1 @ G @ v2 - w1 @ g @ w2),
        "orthogonality": max(abs(h1 @ G @ v2), abs(v1 @ G @ h2)),
        "projection": float(np.max(np.abs(model.projection(h1) - w1))),
    }


def sasaki_signature(model: SasakiModel, q):
    return signature(model.metric(q))
