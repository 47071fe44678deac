"""Thurston's flow on the Heisenberg nilmanifold times a 2-torus.

Chart coordinates are ``(x, y, z, t, u)``. The Heisenberg lattice acts on
``(x, y, z)`` by ``(a, b, c) . (x, y, z) = (x + a, y + b, z + c + a y)`` and
``t, u`` are 2pi-periodic.

Every field constructor takes a scalar backend (``math`` by default, or
``mpmath``) so that identities can be checked in extended precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .frames import FrameSpec, ScalarField, VectorField, combine

DIM = 5
IX, IY, IZ, IT, IU = range(5)
COORD_NAMES = ("x", "y", "z", "t", "u")


class BadSetError(ValueError):
    """A reparametrized field was evaluated on u in pi*Z."""


@dataclass(frozen=True)
class Backend:
    """Scalar functions plus an array constructor for one number type."""

    sin: Callable
    cos: Callable
    exp: Callable
    pi: object
    dtype: object

    def vec(self, values) -> np.ndarray:
        return np.array(values, dtype=self.dtype)

    def zeros(self, shape) -> np.ndarray:
        if self.dtype is object:
            out = np.empty(shape, dtype=object)
            out.fill(self.cos(0) * 0)
            return out
        return np.zeros(shape)


FLOAT = Backend(math.sin, math.cos, math.exp, math.pi, float)


def mp_backend():
    import mpmath

    return Backend(mpmath.sin, mpmath.cos, mpmath.exp, mpmath.pi, object)


# ---------------------------------------------------------------- cutoffs

XI_UNDERFLOW_SIN2 = 1e-3


@dataclass(frozen=True)
class Cutoff:
    """The function of u that replaces sin(u) in the deformed field.

    ``kind``:
      * ``"xi"``  sign(sin u) exp(-1/sin^2 u), flat on u in pi*Z
      * ``"sin"`` sin(u) with the absolute value also replaced by sin(u)
      * ``"u2"``  u^2 (a deliberately wrong cutoff used for fault injection)
    """

    kind: str = "xi"

    def __post_init__(self):
        if self.kind not in ("xi", "sin", "u2"):
            raise ValueError(f"unknown cutoff kind {self.kind!r}")

    def _xi_parts(self, u, lib: Backend):
        s = lib.sin(u)
        s2 = s * s
        if lib.dtype is not object and s2 < XI_UNDERFLOW_SIN2:
            return 0.0, 0.0, s
        if s2 == 0:
            return s * 0, s * 0, s
        mag = lib.exp(-1 / s2)
        return (mag if s > 0 else -mag), mag, s

    def value(self, u, lib: Backend = FLOAT):
        if self.kind == "xi":
            return self._xi_parts(u, lib)[0]
        if self.kind == "sin":
            return lib.sin(u)
        return u * u

    def absval(self, u, lib: Backend = FLOAT):
        if self.kind == "xi":
            return self._xi_parts(u, lib)[1]
        if self.kind == "sin":
            return lib.sin(u)
        return u * u

    def deriv(self, u, lib: Backend = FLOAT):
        if self.kind == "xi":
            x, _, s = self._xi_parts(u, lib)
            return x * 2 * lib.cos(u) / s**3 if x != 0 else x
        if self.kind == "sin":
            return lib.cos(u)
        return 2 * u

    def absderiv(self, u, lib: Backend = FLOAT):
        if self.kind == "xi":
            _, a, s = self._xi_parts(u, lib)
            return a * 2 * lib.cos(u) / s**3 if a != 0 else a
        return self.deriv(u, lib)

    def all(self, u, lib: Backend = FLOAT):
        """(xi, |xi|, xi', |xi|')"""
        return self.value(u, lib), self.absval(u, lib), self.deriv(u, lib), self.absderiv(u, lib)


# ---------------------------------------------------------------- fields

def _u_scalar(f: Callable, df: Callable, lib: Backend) -> ScalarField:
    def grad(p):
        g = lib.zeros(DIM)
        g[IU] = df(p[IU])
        return g

    return ScalarField(lambda p: f(p[IU]), grad)


def _coordinate(index: int, name: str, lib: Backend) -> VectorField:
    def comp(p):
        e = lib.zeros(DIM)
        e[index] = e[index] + 1
        return e

    return VectorField(name, comp, lambda p: lib.zeros((DIM, DIM)))


def _rotating(name: str, second: bool, lib: Backend) -> VectorField:
    """V1 (second=False) or V2 (second=True)."""

    def comp(p):
        x, t = p[IX], p[IT]
        c, s = lib.cos(t), lib.sin(t)
        if second:
            c, s = -s, c
        z = c * 0
        return lib.vec([c, s, x * s, z, z])

    def jac(p):
        x, t = p[IX], p[IT]
        c, s = lib.cos(t), lib.sin(t)
        if second:
            c, s = -s, c
        # for both fields d/dt(c, s) = (-s, c) after the swap above
        dc, ds = -s, c
        J = lib.zeros((DIM, DIM))
        J[IZ, IX] = s
        J[IX, IT] = dc
        J[IY, IT] = ds
        J[IZ, IT] = x * ds
        return J

    return VectorField(name, comp, jac)


class ThurstonModel:
    """Field constructors and lattice action for Thurston's example."""

    dim = DIM
    coord_names = COORD_NAMES

    def __init__(self, cutoff: Cutoff | str = "xi", lib: Backend = FLOAT):
        self.cutoff = cutoff if isinstance(cutoff, Cutoff) else Cutoff(cutoff)
        self.lib = lib
        L = lib
        self.dx = _coordinate(IX, "dx", L)
        self.dy = _coordinate(IY, "dy", L)
        self.dz = _coordinate(IZ, "dz", L)
        self.dt = _coordinate(IT, "dt", L)
        self.du = _coordinate(IU, "du", L)
        self.V1 = _rotating("V1", False, L)
        self.V2 = _rotating("V2", True, L)
        sin, cos = L.sin, L.cos
        cut = self.cutoff

        self.X = self._vtz(
            "X",
            _u_scalar(lambda u: sin(2 * u), lambda u: 2 * cos(2 * u), L),
            _u_scalar(lambda u: 2 * sin(u) ** 2, lambda u: 2 * sin(2 * u), L),
            _u_scalar(lambda u: -cos(u) ** 2, lambda u: sin(2 * u), L),
        )
        self.W = self._guarded(self._vtz(
            "W",
            _u_scalar(lambda u: cos(u) / sin(u), lambda u: -1 / sin(u) ** 2, L),
            1,
            _u_scalar(lambda u: -(cos(u) / sin(u)) ** 2 / 2, lambda u: cos(u) / sin(u) ** 3, L),
        ), lambda u: abs(sin(u)) < 1e-12)

        def xi(u):
            return cut.value(u, L)

        def dxi(u):
            return cut.deriv(u, L)

        def axi(u):
            return cut.absval(u, L)

        def daxi(u):
            return cut.absderiv(u, L)

        self.Xxi = self._vtz(
            "Xxi",
            _u_scalar(lambda u: 2 * xi(u) * cos(u), lambda u: 2 * dxi(u) * cos(u) - 2 * xi(u) * sin(u), L),
            _u_scalar(lambda u: 2 * xi(u) ** 2, lambda u: 4 * xi(u) * dxi(u), L),
            _u_scalar(lambda u: -cos(u) ** 2, lambda u: sin(2 * u), L),
        )
        self.Wxi = self._guarded(self._vtz(
            "Wxi",
            _u_scalar(lambda u: cos(u) / xi(u), lambda u: -(sin(u) * xi(u) + cos(u) * dxi(u)) / xi(u) ** 2, L),
            1,
            _u_scalar(
                lambda u: -cos(u) ** 2 / (2 * xi(u) ** 2),
                lambda u: cos(u) * sin(u) / xi(u) ** 2 + cos(u) ** 2 * dxi(u) / xi(u) ** 3,
                L,
            ),
        ), lambda u: xi(u) == 0)
        self.Y = combine("Y", [
            (_u_scalar(lambda u: -cos(u) ** 2, lambda u: sin(2 * u), L), self.dt),
            (_u_scalar(lambda u: 2 * xi(u) * axi(u), lambda u: 2 * (dxi(u) * axi(u) + xi(u) * daxi(u)), L), self.du),
        ])

    def _vtz(self, name, a, b, d) -> VectorField:
        """``a V1 + b dt + d dz``."""
        return combine(name, [(a, self.V1), (b, self.dt), (d, self.dz)])

    @staticmethod
    def _guarded(field: VectorField, on_bad_set: Callable) -> VectorField:
        def check(p):
            if on_bad_set(p[IU]):
                raise BadSetError(f"{field.name} is undefined on the bad set (u={p[IU]})")

        def comp(p):
            check(p)
            return field.components(p)

        def jac(p):
            check(p)
            return field.jacobian(p)

        return VectorField(field.name, comp, jac)

    def field(self, kind: str) -> VectorField:
        try:
            return getattr(self, kind)
        except AttributeError:
            raise KeyError(f"unknown field {kind!r}") from None

    def frame_E(self) -> FrameSpec:
        """(dt, V1, V2, dz, du): the frame of the near-bad-set matrix."""
        return FrameSpec((self.dt, self.V1, self.V2, self.dz, self.du))

    def frame_lightlike(self) -> FrameSpec:
        comb = combine("2dt+dz", [(2, self.dt), (1, self.dz)])
        return FrameSpec((self.X, self.du, self.V1, self.V2, comb))

    # ------------------------------------------------------------ flows

    def flow_rate(self, kind: str, u):
        """Rotation coefficient k(u) of the closed-form flow."""
        L = self.lib
        if kind == "W":
            s = L.sin(u)
            if abs(s) < 1e-12:
                raise BadSetError("W flow undefined on the bad set")
            return L.cos(u) / s
        if kind == "Wxi":
            x = self.cutoff.value(u, L)
            if x == 0:
                raise BadSetError("Wxi flow undefined on the bad set")
            return L.cos(u) / x
        raise KeyError(kind)

    def exact_flow(self, kind: str, p, s):
        """Closed-form flow of W or Wxi (corrected sign on the x-term of z)."""
        L = self.lib
        x, y, z, t, u = p
        k = self.flow_rate(kind, u)
        st, ct = L.sin(t), L.cos(t)
        sts, cts = L.sin(t + s), L.cos(t + s)
        return L.vec([
            x + k * (sts - st),
            y + k * (ct - cts),
            z + k * x * (ct - cts) + k * k * (L.sin(2 * t) - L.sin(2 * t + 2 * s)) / 4 + k * k * st * (cts - ct),
            t + s,
            u,
        ])

    def printed_flow_z(self, p, s):
        """z-component with the opposite sign on the x-term (kept to show it disagrees with integration)."""
        L = self.lib
        x, y, z, t, u = p
        k = self.flow_rate("W", u)
        st, ct = L.sin(t), L.cos(t)
        sts, cts = L.sin(t + s), L.cos(t + s)
        return z + k * x * (cts - ct) + k * k * (L.sin(2 * t) - L.sin(2 * t + 2 * s)) / 4 + k * k * st * (cts - ct)

    def bad_set_contains(self, u) -> bool:
        return self.lib.sin(u) == 0 or (self.lib.dtype is not object and abs(math.sin(u)) < 1e-15)


# ---------------------------------------------------------------- lattice

def heisenberg_act(word, p):
    """Left action of (a, b, c, m_t, m_u) on a chart point."""
    a, b, c, mt, mu = word
    x, y, z, t, u = p
    return np.array([x + a, y + b, z + c + a * y, t + 2 * math.pi * mt, u + 2 * math.pi * mu])


def heisenberg_pushforward(word, v):
    """Differential of the action: only dz picks up a*dy."""
    a = word[0]
    out = np.array(v, dtype=float)
    out[IZ] = out[IZ] + a * v[IY]
    return out


def heisenberg_compose(second, first):
    """Word of ``second . first`` (apply ``first`` then ``second``)."""
    a1, b1, c1, t1, u1 = first
    a2, b2, c2, t2, u2 = second
    return (a1 + a2, b1 + b2, c1 + c2 + a2 * b1, t1 + t2, u1 + u2)


def lattice_generators():
    return [
        (1, 0, 0, 0, 0),
        (0, 1, 0, 0, 0),
        (0, 0, 1, 0, 0),
        (0, 0, 0, 1, 0),
        (0, 0, 0, 0, 1),
    ]


# ---------------------------------------------------------------- aux metric

def aux_metric_matrix(model: ThurstonModel, p) -> np.ndarray:
    """Riemannian metric with orthonormal frame (X, du, V1, V2, 2dt+dz), so h(X, X) = 1."""
    F = model.frame_lightlike().matrix(np.asarray(p, dtype=float))
    P = np.linalg.inv(F)
    return P.T @ P


def aux_metric_xi_matrix(model: ThurstonModel, p) -> np.ndarray:
    """Same construction with X_xi in place of X (requires u off the bad set)."""
    fr = FrameSpec((model.Xxi, model.du, model.V1, model.V2, combine("2dt+dz", [(2, model.dt), (1, model.dz)])))
    P = np.linalg.inv(fr.matrix(np.asarray(p, dtype=float)))
    return P.T @ P
