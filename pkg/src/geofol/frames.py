"""Moving frames, vector fields with analytic Jacobians, and metrics given in a frame.

Points and vectors are plain numpy arrays. Fields may be evaluated on
``dtype=object`` arrays holding :mod:`mpmath` numbers; the linear algebra in
this module is then restricted to products and sums (no solves).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np

Array = np.ndarray

SIGNATURE_METHOD = "symmetric eigendecomposition (numpy.linalg.eigvalsh)"


class InvalidFrameError(ValueError):
    """Frame fields fail to be pointwise independent."""


class DegenerateMetricError(ValueError):
    """Metric (or Gram system) is singular or too badly conditioned at a point."""


@dataclass(frozen=True)
class ScalarField:
    """A function on the chart together with its gradient."""

    value: Callable[[Array], object]
    gradient: Callable[[Array], Array]

    @classmethod
    def constant(cls, c: float, dim: int) -> "ScalarField":
        return cls(lambda p: c, lambda p: np.zeros(dim))


@dataclass(frozen=True)
class VectorField:
    """Coordinate components of a vector field and their Jacobian.

    ``jacobian(p)[i, j]`` is the partial derivative of component ``i`` along
    coordinate ``j``.
    """

    name: str
    components: Callable[[Array], Array]
    jacobian: Callable[[Array], Array]

    def __call__(self, p: Array) -> Array:
        return self.components(p)


Coefficient = Union[ScalarField, float, int]


def coordinate_field(index: int, dim: int, name: str | None = None) -> VectorField:
    e = np.zeros(dim)
    e[index] = 1.0
    zero = np.zeros((dim, dim))
    return VectorField(name or f"d{index}", lambda p: e.copy(), lambda p: zero.copy())


def constant_field(vector: Sequence[float], name: str = "const") -> VectorField:
    v = np.asarray(vector, dtype=float)
    n = v.size
    return VectorField(name, lambda p: v.copy(), lambda p: np.zeros((n, n)))


def affine_field(offset: Sequence[float], matrix: Sequence[Sequence[float]], name: str = "affine") -> VectorField:
    """The field ``p -> offset + matrix @ p``."""
    b = np.asarray(offset, dtype=float)
    K = np.asarray(matrix, dtype=float)
    return VectorField(name, lambda p: b + K @ p, lambda p: K.copy())


def combine(name: str, terms: Sequence[tuple[Coefficient, VectorField]]) -> VectorField:
    """Linear combination ``sum c_k V_k`` with function coefficients.

    The Jacobian follows the product rule ``c J_V + V (grad c)^T``.
    """

    def _coef(c: Coefficient, p: Array):
        if isinstance(c, ScalarField):
            return c.value(p), c.gradient(p)
        return c, None

    def components(p):
        out = None
        for c, v in terms:
            val, _ = _coef(c, p)
            term = val * v(p)
            out = term if out is None else out + term
        return out

    def jacobian(p):
        out = None
        for c, v in terms:
            val, grad = _coef(c, p)
            term = val * v.jacobian(p)
            if grad is not None:
                term = term + np.outer(v(p), grad)
            out = term if out is None else out + term
        return out

    return VectorField(name, components, jacobian)


def lie_bracket(A: VectorField, B: VectorField, p: Array) -> Array:
    """``[A, B]^i = A^j d_j B^i - B^j d_j A^i`` at ``p``."""
    a, b = A(p), B(p)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return B.jacobian(p) @ a - A.jacobian(p) @ b


def bracket_field(A: VectorField, B: VectorField) -> VectorField:
    """``[A, B]`` as a field; its Jacobian is finite-differenced."""
    def comp(p):
        return lie_bracket(A, B, p)

    return VectorField(f"[{A.name},{B.name}]", comp, lambda p: jacobian_fd(comp, p))


def jacobian_fd(func: Callable[[Array], Array], p: Array, h: float = 1e-5) -> Array:
    """Central differences with one Richardson extrapolation step."""
    p = np.asarray(p, dtype=float)
    n = p.size
    cols = []
    for j in range(n):
        step = h * (1.0 + abs(p[j]))
        e = np.zeros(n)
        e[j] = step
        d1 = (np.asarray(func(p + e)) - np.asarray(func(p - e))) / (2 * step)
        d2 = (np.asarray(func(p + e / 2)) - np.asarray(func(p - e / 2))) / step
        cols.append((4 * d2 - d1) / 3)
    return np.stack(cols, axis=-1)


def jacobian_mismatch(field: VectorField, p: Array, h: float = 1e-5) -> float:
    """Max abs difference between a field's analytic and finite-difference Jacobian."""
    return float(np.max(np.abs(field.jacobian(p) - jacobian_fd(field.components, p, h))))


@dataclass(frozen=True)
class FrameSpec:
    fields: tuple[VectorField, ...]
    det_floor: float = 1e-12

    @property
    def dim(self) -> int:
        return len(self.fields)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)

    def matrix(self, p: Array) -> Array:
        return frame_matrix(self, p)


def frame_matrix(frame: FrameSpec, p: Array) -> Array:
    """Column ``j`` holds the coordinate components of frame field ``j``."""
    F = np.column_stack([f(p) for f in frame.fields])
    if F.shape != (frame.dim, frame.dim):
        raise ValueError(f"frame of {frame.dim} fields evaluated to shape {F.shape}")
    if F.dtype != object:
        det = np.linalg.det(F)
        if not np.isfinite(det) or abs(det) < frame.det_floor:
            raise InvalidFrameError(f"frame degenerate at p={np.asarray(p).tolist()}: det={det:.3e}")
    return F


class SignatureTriple(NamedTuple):
    plus: int
    minus: int
    zero: int


def signature(S: Array, tol: float = 1e-9) -> SignatureTriple:
    """Eigenvalue sign counts; ``|lambda| < tol * max|lambda|`` counts as zero."""
    S = np.asarray(S, dtype=float)
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if np.max(np.abs(S - S.T), initial=0.0) > 1e-12 * scale:
        raise ValueError("signature() needs a symmetric matrix")
    lam = np.linalg.eigvalsh(S)
    cut = tol * max(float(np.max(np.abs(lam))), np.finfo(float).tiny)
    plus = int(np.sum(lam > cut))
    minus = int(np.sum(lam < -cut))
    return SignatureTriple(plus, minus, lam.size - plus - minus)


def min_abs_eigenvalue(S: Array) -> float:
    return float(np.min(np.abs(np.linalg.eigvalsh(np.asarray(S, dtype=float)))))


@dataclass(frozen=True)
class MetricModel:
    """A metric given by its Gram matrix in a moving frame.

    ``gram_jacobian(p)[k]`` is the coordinate partial of the Gram matrix
    along coordinate ``k``; when absent, central differences are used.
    """

    frame: FrameSpec
    gram: Callable[[Array], Array]
    gram_jacobian: Callable[[Array], Array] | None = None
    name: str = "metric"
    det_floor: float = 1e-12

    @property
    def dim(self) -> int:
        return self.frame.dim

    def frame_gram(self, p: Array) -> Array:
        G = np.asarray(self.gram(p), dtype=float)
        scale = max(1.0, float(np.max(np.abs(G))))
        if np.max(np.abs(G - G.T)) > 1e-14 * scale:
            raise ValueError(f"{self.name}: Gram matrix not symmetric at {np.asarray(p).tolist()}")
        return G

    def gram_derivative(self, p: Array) -> Array:
        if self.gram_jacobian is not None:
            return np.asarray(self.gram_jacobian(p), dtype=float)
        p = np.asarray(p, dtype=float)
        n = p.size
        out = np.empty((n, n, n))
        for k in range(n):
            h = 1e-5 * (1.0 + abs(p[k]))
            e = np.zeros(n)
            e[k] = h
            out[k] = (self.frame_gram(p + e) - self.frame_gram(p - e)) / (2 * h)
        return out

    def coordinate_matrix(self, p: Array) -> Array:
        """``g_coord = F^{-T} G F^{-1}``."""
        F = self.frame.matrix(p)
        P = np.linalg.inv(F)
        g = P.T @ self.frame_gram(p) @ P
        return 0.5 * (g + g.T)

    def inner(self, p: Array, a: Array, b: Array) -> float:
        return float(a @ self.coordinate_matrix(p) @ b)

    def check_nondegenerate(self, p: Array) -> None:
        g = self.coordinate_matrix(p)
        lam = np.linalg.eigvalsh(g)
        if np.min(np.abs(lam)) < self.det_floor * max(1.0, np.max(np.abs(lam))):
            raise DegenerateMetricError(f"{self.name} degenerate at p={np.asarray(p).tolist()}")


def flat(g: MetricModel, X: VectorField, p: Array) -> Array:
    """Covector ``g(X, .)`` in the coordinate cobasis."""
    g.check_nondegenerate(p)
    return g.coordinate_matrix(p) @ X(p)


def sharp(g: MetricModel, omega: Array, p: Array) -> Array:
    return np.linalg.solve(g.coordinate_matrix(p), np.asarray(omega, dtype=float))
