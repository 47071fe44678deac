"""Metrics making Thurston's field (or its deformation) geodesic.

* ``LightlikeModel``: constant Gram matrix in the frame (X, du, V1, V2, 2dt+dz).
* ``TypeChangeModel``: a signature (3, 2) metric for which X_xi is geodesic
  and changes causal type across the bad set.
* ``riemannize``: the Riemannian metric built from a unit geodesic field.
* ``divergence``: volume-form and trace-of-connection routes.

The type-changing metric is always assembled in the frame
E = (dt, V1, V2, dz, du). Close to the bad set the closed-form matrix ``G0``
is used directly. Elsewhere the metric is diag(sigma, B(u)) in the frame
B = (W_xi, V1, V2, dz, Y) converted back to E. The change of frame E <- B has
entries of size 1/xi^2, so the conversion is only done where xi is moderate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .connection import covariant_deriv, local_geometry, richardson_derivative
from .frames import (
    FrameSpec,
    MetricModel,
    VectorField,
    coordinate_field,
    signature,
)
from .thurston import FLOAT, Backend, Cutoff, ThurstonModel, mp_backend

Array = np.ndarray


class ModelConstructionError(RuntimeError):
    """Model audit failed; the message names the offending parameter value."""


class LightlikeFoliationError(ValueError):
    """Riemannization requested for a field with g(X, X) = 0."""


# ---------------------------------------------------------------- lightlike

LIGHTLIKE_GRAM = np.array([
    [0.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 1.0],
])


class LightlikeModel:
    """Metric with g(X, du) = 1, g(X, X) = g(du, du) = 0 and a fixed 3x3 block on (V1, V2, 2dt+dz)."""

    def __init__(self, block: Array | None = None):
        self.thurston = ThurstonModel("xi")
        G = LIGHTLIKE_GRAM.copy()
        if block is not None:
            block = np.asarray(block, dtype=float)
            if block.shape != (3, 3) or np.max(np.abs(block - block.T)) > 0:
                raise ValueError("lightlike block must be a symmetric 3x3 matrix")
            if abs(np.linalg.det(block)) < 1e-12:
                raise ValueError("lightlike block must be non-degenerate")
            G[2:, 2:] = block
        self.gram = G
        zero = np.zeros((5, 5, 5))
        self.metric = MetricModel(
            self.thurston.frame_lightlike(), lambda p: G, lambda p: zero, name="lightlike"
        )

    @property
    def X(self) -> VectorField:
        return self.thurston.X


# ---------------------------------------------------------------- smooth steps

def _bump_tail(x: float) -> float:
    return math.exp(-1.0 / x) if x > 0 else 0.0


def smooth_step(x: float) -> float:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    a, b = _bump_tail(x), _bump_tail(1 - x)
    return a / (a + b)


def smooth_step_deriv(x: float) -> float:
    if x <= 0 or x >= 1:
        return 0.0
    a, b = _bump_tail(x), _bump_tail(1 - x)
    da, db = a / x**2, b / (1 - x) ** 2
    return (da * b + a * db) / (a + b) ** 2


def _wrap(u: float) -> float:
    """Representative in (-pi, pi]."""
    r = math.remainder(u, 2 * math.pi)
    return math.pi if r == -math.pi else r


# ---------------------------------------------------------------- type change

@dataclass
class TypeChangeModel:
    """Signature (3, 2) metric under which X_xi is geodesic and changes causal type.

    ``mutation`` is a fault-injection hook: ``"flip:i,j"`` negates one
    off-diagonal entry of ``G0``; ``"u2"`` replaces the cutoff by u^2.
    """

    variant: str = "xi"
    eta_override: float | None = None
    eta_grid: int = 2001
    eta_tol: float = 1e-9
    flatten_start: float = 0.8
    flatten_width: float = 0.3
    rotation_halfwidth: float = 0.3
    audit_points: int = 10000
    signature_tol: float = 1e-9
    mutation: str | None = None
    strict: bool = True
    eta: float = field(init=False)
    eta_certified: float = field(init=False)
    audit: dict = field(init=False)

    def __post_init__(self):
        if self.variant not in ("xi", "sin"):
            raise ValueError(f"variant must be 'xi' or 'sin', got {self.variant!r}")
        self._flip = None
        cutoff = self.variant
        if self.mutation:
            if self.mutation == "u2":
                cutoff = "u2"
            elif self.mutation.startswith("flip:"):
                i, j = (int(k) for k in self.mutation[5:].split(","))
                if i == j or not (0 <= i < 5 and 0 <= j < 5):
                    raise ValueError(f"flip mutation needs an off-diagonal entry, got {self.mutation!r}")
                self._flip = (i, j)
            else:
                raise ValueError(f"unknown mutation {self.mutation!r}")
        self.cutoff = Cutoff(cutoff)
        self.thurston = ThurstonModel(self.cutoff)
        u1, d, w = self.flatten_start, self.flatten_width, self.rotation_halfwidth
        if not (0 < u1 and d > 0 and u1 + d < math.pi / 2 - w and 0 < w < math.pi / 4):
            raise ValueError("need 0 < flatten_start, flatten_start + flatten_width < pi/2 - rotation_halfwidth")
        self.sigma_pos = self._sigma(math.pi / 2)
        self.sigma_neg = self._sigma(-math.pi / 2)
        self.eta_certified = find_eta(self, self.eta_grid, self.eta_tol)
        self.eta = self.eta_override if self.eta_override is not None else self.eta_certified / 2
        if not self.eta > 0:
            raise ModelConstructionError(f"eta must be positive, got {self.eta}")
        if self.eta / 2 > self.flatten_start:
            raise ModelConstructionError("eta/2 exceeds the exact zone; lower eta or raise flatten_start")
        zero = np.zeros((5, 5, 5))

        def gram_jac(p):
            out = zero.copy()
            out[4] = self.frame_gram_E_deriv(p[4])
            return out

        self.metric = MetricModel(
            self.thurston.frame_E(), lambda p: self.frame_gram_E(p[4]), gram_jac,
            name=f"typechange-{self.variant}",
        )
        self.audit = self.construction_audit(self.audit_points)
        if self.strict and not self.audit["passed"]:
            raise ModelConstructionError(self.audit["failure"])

    # ------------------------------------------------------------ scalars

    def _sigma(self, u: float) -> int:
        x, a = self.cutoff.value(u), self.cutoff.absval(u)
        return 1 if a / x > 0 else -1

    def sigma(self, u: float) -> int:
        return self.sigma_pos if _wrap(u) > 0 else self.sigma_neg

    def _parts(self, u, lib: Backend):
        c, s = lib.cos(u), lib.sin(u)
        x, a, dx, da = self.cutoff.all(u, lib)
        return c, s, x, a, dx, da

    # ------------------------------------------------------------ G0

    def G0(self, u, lib: Backend = FLOAT) -> Array:
        """Closed-form matrix in (dt, V1, V2, dz, du)."""
        c, s, x, a, _, _ = self._parts(u, lib)
        G = lib.zeros((5, 5))
        G[0, 0] = c**4 / 4
        G[0, 1] = a / (2 * c)
        G[0, 3] = c**2 * x**2 / 2 - x * a / c**2
        G[1, 2] = lib.cos(0) / 2
        G[1, 3] = a * x**2 / c**3
        G[2, 3] = x / c
        G[3, 3] = x**4
        G[3, 4] = -lib.cos(0)
        G[4, 4] = lib.cos(0)
        return self._symmetrize(G)

    def G0_deriv(self, u) -> Array:
        c, s, x, a, dx, da = self._parts(u, FLOAT)
        D = np.zeros((5, 5))
        D[0, 0] = -(c**3) * s
        D[0, 1] = da / (2 * c) + a * s / (2 * c**2)
        D[0, 3] = -c * s * x**2 + c**2 * x * dx - (dx * a + x * da) / c**2 - 2 * x * a * s / c**3
        D[1, 3] = (da * x**2 + 2 * a * x * dx) / c**3 + 3 * a * x**2 * s / c**4
        D[2, 3] = dx / c + x * s / c**2
        D[3, 3] = 4 * x**3 * dx
        return self._symmetrize(D)

    def _symmetrize(self, G: Array) -> Array:
        if self._flip is not None:
            i, j = self._flip
            G[min(i, j), max(i, j)] = -G[min(i, j), max(i, j)]
        for i in range(5):
            for j in range(i):
                G[i, j] = G[j, i]
        return G

    # ------------------------------------------------------------ L and the frame change

    def L(self, u, lib: Backend = FLOAT) -> Array:
        """4x4 block on (V1, V2, dz, Y), the orthogonal complement of W_xi."""
        c, s, x, a, _, _ = self._parts(u, lib)
        M = lib.zeros((4, 4))
        M[0, 1] = lib.cos(0) / 2
        M[0, 2] = a**3 / c**3
        M[0, 3] = -c * a / 2
        M[1, 2] = x / c
        M[2, 2] = x**4
        M[2, 3] = -(c**4) * x**2 / 2 - x * a
        M[3, 3] = c**8 / 4 + 4 * x**4
        for i in range(4):
            for j in range(i):
                M[i, j] = M[j, i]
        return M

    def L_deriv(self, u) -> Array:
        c, s, x, a, dx, da = self._parts(u, FLOAT)
        D = np.zeros((4, 4))
        D[0, 2] = 3 * a**2 * da / c**3 + 3 * a**3 * s / c**4
        D[0, 3] = (s * a - c * da) / 2
        D[1, 2] = dx / c + x * s / c**2
        D[2, 2] = 4 * x**3 * dx
        D[2, 3] = 2 * c**3 * s * x**2 - c**4 * x * dx - dx * a - x * da
        D[3, 3] = -2 * c**7 * s + 16 * x**3 * dx
        return D + np.triu(D, 1).T

    def T(self, u, lib: Backend = FLOAT) -> Array:
        """Columns: (W_xi, V1, V2, dz, Y) expressed in (dt, V1, V2, dz, du)."""
        c, s, x, a, _, _ = self._parts(u, lib)
        one = lib.cos(0)
        T = lib.zeros((5, 5))
        T[0, 0] = one
        T[1, 0] = c / x
        T[3, 0] = -(c**2) / (2 * x**2)
        T[1, 1] = T[2, 2] = T[3, 3] = one
        T[0, 4] = -(c**2)
        T[4, 4] = 2 * x * a
        return T

    def T_deriv(self, u) -> Array:
        c, s, x, a, dx, da = self._parts(u, FLOAT)
        D = np.zeros((5, 5))
        D[1, 0] = -(s * x + c * dx) / x**2
        D[3, 0] = c * s / x**2 + c**2 * dx / x**3
        D[0, 4] = 2 * c * s
        D[4, 4] = 2 * (dx * a + x * da)
        return D

    # ------------------------------------------------------------ interpolation

    def _fold(self, u):
        """(wrapped u, folded distance v to the bad set, dv/du)."""
        r = _wrap(u)
        ar = abs(r)
        if ar <= math.pi / 2:
            v, dv = ar, (1.0 if r >= 0 else -1.0)
        else:
            v, dv = math.pi - ar, (-1.0 if r >= 0 else 1.0)
        return r, v, dv

    def flatten(self, v: float) -> float:
        u1, d = self.flatten_start, self.flatten_width
        if v <= u1:
            return v
        return u1 + (v - u1) * (1 - smooth_step((v - u1) / d))

    def flatten_deriv(self, v: float) -> float:
        u1, d = self.flatten_start, self.flatten_width
        if v <= u1:
            return 1.0
        x = (v - u1) / d
        return (1 - smooth_step(x)) - x * smooth_step_deriv(x)

    def rotation_angle(self, u: float) -> float:
        w = self.rotation_halfwidth
        return math.pi * smooth_step((abs(_wrap(u)) - (math.pi / 2 - w)) / (2 * w))

    def rotation_angle_deriv(self, u: float) -> float:
        w = self.rotation_halfwidth
        r = _wrap(u)
        sgn = 1.0 if r >= 0 else -1.0
        return math.pi * smooth_step_deriv((abs(r) - (math.pi / 2 - w)) / (2 * w)) * sgn / (2 * w)

    @staticmethod
    def _rotation(theta: float) -> Array:
        R = np.eye(4)
        c, s = math.cos(theta), math.sin(theta)
        R[2, 2] = R[3, 3] = c
        R[2, 3], R[3, 2] = -s, s
        return R

    @staticmethod
    def _rotation_deriv(theta: float) -> Array:
        D = np.zeros((4, 4))
        c, s = math.cos(theta), math.sin(theta)
        D[2, 2] = D[3, 3] = -s
        D[2, 3], D[3, 2] = -c, c
        return D

    def interpolated_block(self, u: float, branch: str | None = None) -> Array:
        """M(u) on (0, pi) or N(u) on (-pi, 0): R^T L(+-flatten(v)) R."""
        r, v, _ = self._fold(u)
        if r == 0 or r == math.pi:
            raise ValueError(f"interpolated block undefined on the bad set (u={u})")
        if branch is not None:
            want = "M" if r > 0 else "N"
            if branch != want:
                raise ValueError(f"u={u} lies outside the interval of branch {branch}")
        arg = math.copysign(self.flatten(v), r)
        R = self._rotation(self.rotation_angle(r))
        return R.T @ self.L(arg) @ R

    def interpolated_block_deriv(self, u: float) -> Array:
        r, v, dv = self._fold(u)
        arg = math.copysign(self.flatten(v), r)
        darg = math.copysign(1.0, r) * self.flatten_deriv(v) * dv
        th = self.rotation_angle(r)
        R, dR = self._rotation(th), self._rotation_deriv(th) * self.rotation_angle_deriv(r)
        Lm = self.L(arg)
        dL = self.L_deriv(arg) * darg
        return dR.T @ Lm @ R + R.T @ dL @ R + R.T @ Lm @ dR

    # ------------------------------------------------------------ assembled metric

    def in_exact_zone(self, u: float) -> bool:
        return self._fold(u)[1] <= self.flatten_start

    def frame_gram_E(self, u: float) -> Array:
        """Gram matrix of the glued metric in (dt, V1, V2, dz, du)."""
        r = _wrap(u)
        if self.in_exact_zone(r):
            return self.G0(r)
        Ti = np.linalg.inv(self.T(r))
        B = np.zeros((5, 5))
        B[0, 0] = self.sigma(r)
        B[1:, 1:] = self.interpolated_block(r)
        G = Ti.T @ B @ Ti
        return 0.5 * (G + G.T)

    def frame_gram_E_deriv(self, u: float) -> Array:
        r = _wrap(u)
        if self.in_exact_zone(r):
            return self.G0_deriv(r)
        Ti = np.linalg.inv(self.T(r))
        dTi = -Ti @ self.T_deriv(r) @ Ti
        B = np.zeros((5, 5))
        B[0, 0] = self.sigma(r)
        B[1:, 1:] = self.interpolated_block(r)
        dB = np.zeros((5, 5))
        dB[1:, 1:] = self.interpolated_block_deriv(r)
        D = dTi.T @ B @ Ti + Ti.T @ dB @ Ti + Ti.T @ B @ dTi
        return 0.5 * (D + D.T)

    def branch_gram_E(self, u, branch: str, lib: Backend = FLOAT) -> Array:
        """Gram matrix in E from one named branch: g0 (G0), g1 / g2 (diag(+-1, L) pulled back)."""
        if branch == "g0":
            return self.G0(u, lib)
        if branch not in ("g1", "g2"):
            raise ValueError(f"unknown branch {branch!r}")
        sgn = self.sigma_pos if branch == "g1" else self.sigma_neg
        T = self.T(u, lib)
        B = lib.zeros((5, 5))
        B[0, 0] = B[0, 0] + sgn
        B[1:, 1:] = self.L(u, lib)
        Ti = _inverse(T, lib)
        return Ti.T @ B @ Ti

    def global_metric(self, p: Array, branch: str | None = None, lib: Backend = FLOAT) -> Array:
        """Coordinate matrix of the glued metric (optionally forcing one branch)."""
        u = p[4]
        G = self.frame_gram_E(float(u)) if branch is None else self.branch_gram_E(u, branch, lib)
        model = self.thurston if lib is FLOAT else ThurstonModel(self.cutoff, lib)
        F = np.column_stack([f(p) for f in model.frame_E().fields])
        P = _inverse(F, lib)
        return P.T @ G @ P

    def branch_mismatch(self, u: float, dps: int | None = None) -> float:
        """max |T^T G0 T - diag(sigma, L)| at u in extended precision."""
        import mpmath

        if dps is None:
            s2 = math.sin(u) ** 2
            dps = 40 + int(math.ceil(4 / (s2 * math.log(10))))
        with mpmath.workdps(dps):
            lib = mp_backend()
            um = mpmath.mpf(u)
            T = self.T(um, lib)
            A = T.T @ self.G0(um, lib) @ T
            B = lib.zeros((5, 5))
            B[0, 0] = mpmath.mpf(self.sigma(u))
            B[1:, 1:] = self.L(um, lib)
            return float(max(abs(v) for v in (A - B).ravel()))

    # ------------------------------------------------------------ audit

    def construction_audit(self, n: int) -> dict:
        """Signature / invertibility of the interpolated blocks and the glued matrix on a u-grid."""
        us = np.linspace(-math.pi, math.pi, n + 1)[1:]
        worst_block, worst_cond = math.inf, 0.0
        failure = None
        for u in us:
            r = _wrap(u)
            G = self.frame_gram_E(r)
            sig = signature(G, self.signature_tol)
            if sig != (3, 2, 0):
                failure = failure or f"glued metric signature {tuple(sig)} at u={u!r}"
            lam = np.linalg.eigvalsh(G)
            worst_cond = max(worst_cond, float(np.max(np.abs(lam)) / np.min(np.abs(lam))))
            if r in (0.0, math.pi):
                continue
            s = self.sigma(r)
            want = (2, 2, 0) if s > 0 else (3, 1, 0)
            if self.in_exact_zone(r):
                # block equals L here; diag(sigma, L) is congruent to G0 through T, so
                # its inertia is that of G0 minus the W_xi direction
                bs = (sig.plus - (s > 0), sig.minus - (s < 0), sig.zero)
            else:
                blk = self.interpolated_block(r)
                bs = tuple(signature(blk, self.signature_tol))
                worst_block = min(worst_block, float(np.min(np.abs(np.linalg.eigvalsh(blk)))))
            if tuple(bs) != want:
                failure = failure or f"block {'M' if r > 0 else 'N'} signature {tuple(bs)} != {want} at u={u!r}"
        return {
            "points": int(n),
            "block_signature_method": "eigenvalues outside the exact zone; congruence to G0 inside it",
            "min_abs_block_eigenvalue": worst_block,
            "max_condition_number": worst_cond,
            "passed": failure is None,
            "failure": failure,
        }

    def seams(self) -> list[float]:
        base = [self.eta / 2, self.flatten_start, self.flatten_start + self.flatten_width,
                math.pi / 2 - self.rotation_halfwidth, math.pi / 2 + self.rotation_halfwidth]
        out = []
        for s in base:
            for v in (s, -s, math.pi - s, -(math.pi - s)):
                if v not in out:
                    out.append(v)
        return sorted(out)


def _inverse(M: Array, lib: Backend) -> Array:
    if lib.dtype is object:
        import mpmath

        inv = mpmath.matrix(M.tolist()) ** -1
        return np.array(inv.tolist(), dtype=object)
    return np.linalg.inv(M)


def find_eta(model: TypeChangeModel, grid: int = 2001, tol: float = 1e-9, cap: float = math.pi / 4) -> float:
    """Largest grid point eta <= cap with signature(G0) = (3, 2) and min |eigenvalue| > tol on |u|, |u - pi| <= eta."""
    good = 0.0
    for i in range(1, grid + 1):
        d = cap * i / (grid - 1) if grid > 1 else cap
        if d > cap:
            break
        ok = True
        for u in (d, -d, math.pi - d, -math.pi + d):
            G = model.G0(u)
            lam = np.linalg.eigvalsh(G)
            if signature(G, model.signature_tol) != (3, 2, 0) or np.min(np.abs(lam)) <= tol:
                ok = False
                break
        if not ok:
            break
        good = d
    sig0 = signature(model.G0(0.0), model.signature_tol)
    if good == 0.0 or sig0 != (3, 2, 0):
        raise ModelConstructionError(f"G0 has no certified (3, 2) neighbourhood of the bad set (signature at 0: {tuple(sig0)})")
    return good


def sin_variant(**kwargs) -> TypeChangeModel:
    """Same pipeline with the cutoff replaced by sin(u) (no absolute values)."""
    return TypeChangeModel(variant="sin", **kwargs)


# ---------------------------------------------------------------- divergence

def divergence(field_: VectorField, metric: MetricModel, p: Array, method: str = "volume") -> float:
    """div V either as (1/rho) d_i(rho V^i) with rho = sqrt|det g| or as trace of nabla V."""
    p = np.asarray(p, dtype=float)
    if method == "volume":
        def log_rho(q):
            return np.array(0.5 * math.log(abs(np.linalg.det(metric.coordinate_matrix(q)))))

        grad = richardson_derivative(log_rho, p, 1e-4)
        return float(np.trace(field_.jacobian(p)) + field_(p) @ grad)
    if method == "trace":
        geo = local_geometry(metric, p)
        P = np.linalg.inv(geo.frame)
        total = 0.0
        for j, E in enumerate(metric.frame.fields):
            total += (P @ covariant_deriv(metric, E, field_, p, geo))[j]
        return float(total)
    raise ValueError(f"unknown divergence method {method!r}")


# ---------------------------------------------------------------- Riemannization

def riemannize(g: MetricModel, unit_field: VectorField, h0: Callable[[Array], Array],
               probe_points: list[Array] | None = None, lightlike_tol: float = 1e-9,
               unit_tol: float = 1e-9) -> MetricModel:
    """h = h0(P., P.) + g(X, .) (x) g(X, .), P the g-orthogonal projection onto X^perp."""

    def gram(p):
        gc = g.coordinate_matrix(p)
        x = unit_field(p)
        eps = float(x @ gc @ x)
        if abs(eps) < lightlike_tol:
            raise LightlikeFoliationError(f"foliation field is lightlike at {np.asarray(p).tolist()}")
        if abs(abs(eps) - 1) > unit_tol:
            raise ValueError(f"foliation field not unit: g(X, X) = {eps!r}")
        omega = gc @ x
        P = np.eye(len(x)) - eps * np.outer(x, omega)
        h = P.T @ np.asarray(h0(p), dtype=float) @ P + np.outer(omega, omega)
        return 0.5 * (h + h.T)

    n = g.dim
    frame = FrameSpec(tuple(coordinate_field(i, n) for i in range(n)))
    for q in probe_points if probe_points is not None else [np.zeros(n)]:
        gram(np.asarray(q, dtype=float))
    return MetricModel(frame, gram, None, name=f"riemannized-{g.name}")
