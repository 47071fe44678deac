"""Verification suites.

Each suite returns a ``SuiteResult`` holding named checks. A check records
what was measured, the threshold, and which acceptance criterion (1-12) it
belongs to. Suites never raise on a failed property; construction errors
become failing checks with the message attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import mpmath
import numpy as np

from .connection import (
    CoordinateMetric,
    covariant_deriv,
    covariant_deriv_christoffel,
    geodesic_residual,
)
from .frames import (
    FrameSpec,
    MetricModel,
    VectorField,
    affine_field,
    constant_field,
    coordinate_field,
    jacobian_fd,
    lie_bracket,
    signature,
)
from .integrate import (
    GeodesicState,
    QuotientSpec,
    Trajectory,
    detect_closed_orbit,
    integrate_flow,
    integrate_geodesic,
    rk4,
)
from .metrics import (
    LightlikeFoliationError,
    LightlikeModel,
    ModelConstructionError,
    TypeChangeModel,
    divergence,
    riemannize,
)
from .sasaki import SasakiModel, splitting_defects, tangent_lift_check
from .surfaces import einstein_torus, minkowski_plane, pseudosphere, random_state, sc_audit
from .thurston import COORD_NAMES, ThurstonModel, aux_metric_matrix, mp_backend

Array = np.ndarray
TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    measured: Any
    threshold: Any
    passed: bool
    criterion: int | None = None
    relation: str = "<="

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "criterion": self.criterion,
            "measured": _plain(self.measured),
            "relation": self.relation,
            "threshold": _plain(self.threshold),
            "pass": bool(self.passed),
        }


@dataclass
class Artifact:
    filename: str
    trajectory: Trajectory
    coord_names: tuple
    inner: Callable[[Array, Array], float]
    s_max: float | None = None


@dataclass
class SuiteResult:
    name: str
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)
    artifacts: list[Artifact] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def at_most(name, anchor, measured, threshold, criterion=None) -> Check:
    m = float(measured)
    return Check(name, anchor, m, float(threshold), bool(math.isfinite(m) and m <= threshold), criterion, "<=")


def strictly_below(name, anchor, measured, threshold, criterion=None) -> Check:
    m = float(measured)
    return Check(name, anchor, m, float(threshold), bool(math.isfinite(m) and m < threshold), criterion, "<")


def equals(name, anchor, measured, expected, criterion=None) -> Check:
    return Check(name, anchor, measured, expected, measured == expected, criterion, "==")


def holds(name, anchor, ok: bool, criterion=None, measured: Any = None) -> Check:
    return Check(name, anchor, bool(ok) if measured is None else measured, True, bool(ok), criterion, "holds")


def failed_construction(name: str, exc: Exception, criterion=None) -> Check:
    return Check(name, "model construction", f"{type(exc).__name__}: {exc}", "constructed", False, criterion, "holds")


# ---------------------------------------------------------------- sampling

def quotient_points(rng: np.random.Generator, n: int, u_values: list[float] | None = None) -> Array:
    """Uniform points in the fundamental box [0,1)^3 x [0, 2pi)^2, optionally pinning u."""
    pts = np.column_stack([rng.uniform(0, 1, (n, 3)), rng.uniform(0, TWO_PI, (n, 2))])
    if u_values:
        k = n // (4 * len(u_values))
        for j, u in enumerate(u_values):
            pts[j * k:(j + 1) * k, 4] = u
    return pts


def _energy_check(name: str, trajs: list[Trajectory], criterion: int = 11) -> Check:
    ratio = max((t.energy_drift / t.tol for t in trajs), default=0.0)
    return at_most(name, "geodesic energy g(v, v) is a first integral", ratio, 100.0, criterion)


# ---------------------------------------------------------------- brackets

def _mp_point(p) -> Array:
    return np.array([mpmath.mpf(float(v)) for v in p], dtype=object)


def bracket_errors(model: ThurstonModel, p) -> list[float]:
    """Deviation of the four W_xi bracket identities at one point (model built on any backend)."""
    L = model.lib
    u = p[4]
    x, a, dx, da = model.cutoff.all(u, L)
    c, s = L.cos(u), L.sin(u)
    W = model.Wxi
    V1, V2, dz = model.V1(p), model.V2(p), model.dz(p)
    d_c_over_xi = (-s * x - c * dx) / x**2
    d_c2_over_xi2 = (-2 * c * s * x**2 - 2 * c**2 * x * dx) / x**4
    expected = [
        V2,
        (c / x) * dz - V1,
        dz * 0,
        -2 * x * a * d_c_over_xi * V1 + (c**3 / x) * V2 + x * a * d_c2_over_xi2 * dz,
    ]
    got = [lie_bracket(W, B, p) for B in (model.V1, model.V2, model.dz, model.Y)]
    return [float(max(abs(v) for v in (g - e))) for g, e in zip(got, expected)]


def suite_brackets(points: int = 100, seed: int = 0, dps: int = 50, cutoff: str = "xi") -> SuiteResult:
    res = SuiteResult("brackets")
    rng = np.random.default_rng(seed)
    names = ["[W_xi, V1] = V2", "[W_xi, V2] = (cos u / xi) dz - V1", "[W_xi, dz] = 0",
             "[W_xi, Y] in span(V1, V2, dz) with the stated coefficients"]
    worst = [0.0] * 4
    with mpmath.workdps(dps):
        model = ThurstonModel(cutoff, mp_backend())
        for _ in range(points):
            p = np.concatenate([rng.uniform(0, 1, 3), [rng.uniform(0, TWO_PI), rng.uniform(0.2, math.pi - 0.2)]])
            errs = bracket_errors(model, _mp_point(p))
            worst = [max(w, e) for w, e in zip(worst, errs)]
    for nm, w in zip(names, worst):
        res.add(at_most(f"bracket {nm}", "bracket table of the deformed field", w, 1e-8, 1))
    res.info = {"points": points, "precision_digits": dps, "u_range": [0.2, math.pi - 0.2]}
    return res


# ---------------------------------------------------------------- lightlike

def suite_lightlike(points: int = 1000, seed: int = 0, block=None) -> SuiteResult:
    res = SuiteResult("lightlike")
    try:
        model = LightlikeModel(block)
    except (ValueError, ModelConstructionError) as exc:
        res.add(failed_construction("lightlike model", exc, 2))
        return res
    g, X = model.metric, model.X
    rng = np.random.default_rng(seed)
    pts = quotient_points(rng, points, [0.0, math.pi])
    gxx = flat_err = dflat = resid = 0.0
    du = np.array([0, 0, 0, 0, 1.0])

    def x_flat(q):
        return g.coordinate_matrix(q) @ X(q)

    # X is the first frame field, so g(X, X) is a Gram entry and is exact
    if g.frame.fields[0] is not X:
        raise AssertionError("lightlike frame must start with X")
    coord_gxx = 0.0
    for k, p in enumerate(pts):
        x = X(p)
        gxx = max(gxx, abs(float(g.frame_gram(p)[0, 0])))
        coord_gxx = max(coord_gxx, abs(g.inner(p, x, x)))
        flat_err = max(flat_err, float(np.max(np.abs(x_flat(p) - du))))
        if k < max(1, points // 10):
            J = jacobian_fd(x_flat, p)  # J[i, j] = d_j flat_i
            dflat = max(dflat, float(np.max(np.abs(J - J.T))))
        resid = max(resid, geodesic_residual(g, X, p))
    res.add(equals("g(X, X) = 0", "lightlike metric: X is null", gxx, 0.0, 2))
    res.add(at_most("X-flat = du", "lightlike metric: X-flat equals du", flat_err, 1e-12, 2))
    res.add(strictly_below("d(X-flat) = 0 (finite differences)", "lightlike metric: X-flat is closed", dflat, 1e-8, 2))
    res.add(strictly_below("geodesic residual of X", "lightlike metric: nabla_X X = 0", resid, 1e-7, 2))
    res.info = {"points": points, "exterior_derivative_points": max(1, points // 10),
                "g_XX_through_coordinate_matrix": coord_gxx}
    return res


# ---------------------------------------------------------------- type change

def one_sided_derivative(f: Callable[[float], Array], s: float, h: float, side: int) -> Array:
    """Fourth-order one-sided first derivative from points s, s + side*h, ..., s + 4*side*h."""
    c = (-25, 48, -36, 16, -3)
    return side * sum(ci * np.asarray(f(s + side * i * h)) for i, ci in enumerate(c)) / (12 * h)


def seam_jumps(model: TypeChangeModel, h: float = 1e-3, where=(0.3, 0.4, 0.5, 0.7)) -> dict:
    """Relative one-sided mismatch of value, first and second u-derivatives of the coordinate metric at every seam."""
    x, y, z, t = where
    frame = model.thurston.frame_E()

    def P(u):
        return np.linalg.inv(frame.matrix(np.array([x, y, z, t, u])))

    def g(u):
        Pm = P(u)
        return Pm.T @ model.frame_gram_E(u) @ Pm

    def dg(u):
        Pm = P(u)
        return Pm.T @ model.frame_gram_E_deriv(u) @ Pm

    out = {}
    for s in model.seams():
        # the seam point itself is evaluated on both sides' stencils
        v_jump = np.max(np.abs(g(s - 1e-12) - g(s + 1e-12))) / max(1.0, np.max(np.abs(g(s))))
        d1l, d1r = one_sided_derivative(g, s, h, -1), one_sided_derivative(g, s, h, 1)
        d1_jump = np.max(np.abs(d1l - d1r)) / max(1.0, np.max(np.abs(d1l)))
        d2l, d2r = one_sided_derivative(dg, s, h, -1), one_sided_derivative(dg, s, h, 1)
        d2_jump = np.max(np.abs(d2l - d2r)) / max(1.0, np.max(np.abs(d2l)))
        out[s] = max(float(v_jump), float(d1_jump), float(d2_jump))
    return out


def xi_norm_in_frame(model: TypeChangeModel, u: float, dps: int = 30):
    """g(X_xi, X_xi) from the frame coefficients (2 xi^2, 2 xi cos u, 0, -cos^2 u, 0).

    Every term is O(xi^4), so there is no cancellation; inside the exact zone
    the value is computed with mpmath so that xi^4 does not underflow.
    """
    if not model.in_exact_zone(u):
        x, c = model.cutoff.value(u), math.cos(u)
        coef = np.array([2 * x * x, 2 * x * c, 0.0, -c * c, 0.0])
        return float(coef @ model.frame_gram_E(u) @ coef)
    with mpmath.workdps(dps):
        lib = mp_backend()
        if model.thurston.bad_set_contains(u):
            # a float on the bad set stands for an exact multiple of pi, where xi = 0 and X_xi = -dz
            G = model.G0(u)
            return float(G[3, 3])
        um = mpmath.mpf(u)
        x, c = model.cutoff.value(um, lib), lib.cos(um)
        coef = np.array([2 * x * x, 2 * x * c, 0 * x, -c * c, 0 * x], dtype=object)
        return coef @ model.G0(um, lib) @ coef


def build_typechange(variant: str = "xi", **params) -> TypeChangeModel:
    return TypeChangeModel(variant=variant, **params)


def suite_typechange(model: TypeChangeModel | None = None, points: int = 1000, seed: int = 0,
                     u_grid: int = 2001, overlap_points: int = 12, crosspath_points: int = 100,
                     **params) -> SuiteResult:
    res = SuiteResult("typechange")
    if model is None:
        try:
            model = build_typechange(**params)
        except (ModelConstructionError, ValueError) as exc:
            res.add(failed_construction("type-changing metric", exc, 3))
            return res
    sign_expected = model.variant == "xi"
    audit = model.audit
    res.info["construction_audit"] = {k: v for k, v in audit.items()}
    res.info["eta"] = model.eta
    res.info["eta_certified"] = model.eta_certified
    res.add(holds("construction audit: signature (3, 2) and interpolated block inertia",
                  "glued metric has signature (3, 2)", audit["passed"], 3,
                  measured=audit["failure"] or "ok"))
    rng = np.random.default_rng(seed)
    g = model.metric
    th = model.thurston
    cut = model.cutoff

    # g(X_xi, X_xi) = 4 xi^3 |xi| and its sign pattern
    us = np.linspace(-math.pi, math.pi, u_grid)
    norm_err = 0.0
    sign_bad = []
    for u in us:
        p = np.array([0.1, 0.2, 0.3, 0.4, u])
        xv = th.Xxi(p)
        val = g.inner(p, xv, xv)
        x, a = cut.value(u), cut.absval(u)
        norm_err = max(norm_err, abs(val - 4 * x**3 * a))
        if sign_expected:
            r = math.remainder(u, TWO_PI)
            want = 0 if (r == 0 or abs(r) == math.pi) else (1 if r > 0 else -1)
            fv = xi_norm_in_frame(model, float(u))
            got = 0 if fv == 0 else (1 if fv > 0 else -1)
            if want != got:
                sign_bad.append(float(u))
    res.add(strictly_below("g(X_xi, X_xi) - 4 xi^3 |xi|", "deformed field has g-norm 4 xi^3 |xi|", norm_err, 1e-12, 3))
    if sign_expected:
        res.add(equals("sign of g(X_xi, X_xi) is +, 0, - on (0, pi), {0, pi}, (-pi, 0)",
                       "deformed field changes causal type across the bad set", len(sign_bad), 0, 3))

    # g(W_xi, W_xi) = +-1 on each half interval, away from where float64 can hold 1/xi^2
    worst = {1: 0.0, -1: 0.0}
    for u in np.linspace(0.4, math.pi - 0.4, 201):
        for sgn in (1, -1):
            p = np.array([0.1, 0.2, 0.3, 0.4, sgn * u])
            w = th.Wxi(p)
            want = model.sigma(sgn * u)
            worst[sgn] = max(worst[sgn], abs(g.inner(p, w, w) - want))
    res.add(at_most("g(W_xi, W_xi) = sigma on (0, pi)", "W_xi is a unit field", worst[1], 1e-10, 3))
    res.add(at_most("g(W_xi, W_xi) = sigma on (-pi, 0)", "W_xi is a unit field", worst[-1], 1e-10, 3))

    # geodesic residual and divergence
    pts = quotient_points(rng, points, [0.0, math.pi])
    resid = div_vol = div_tr = div_gap = 0.0
    for p in pts:
        resid = max(resid, geodesic_residual(g, th.Xxi, p))
        dv = divergence(th.Xxi, g, p, "volume")
        dt = divergence(th.Xxi, g, p, "trace")
        div_vol, div_tr, div_gap = max(div_vol, abs(dv)), max(div_tr, abs(dt)), max(div_gap, abs(dv - dt))
    res.add(strictly_below("geodesic residual of X_xi (incl. u = 0, pi)", "X_xi is g-geodesic", resid, 1e-6, 3))
    res.add(strictly_below("div X_xi (volume form)", "X_xi is divergence free", div_vol, 1e-8, 4))
    res.add(strictly_below("div X_xi (trace of nabla)", "X_xi is divergence free", div_tr, 1e-8, 4))
    res.add(at_most("divergence routes agree", "X_xi is divergence free", div_gap, 1e-9, 4))

    # branch overlap in extended precision
    lo = min(model.eta / 8, 0.05)
    mism = 0.0
    for v in np.linspace(lo, model.flatten_start, overlap_points):
        for u in (v, -v, math.pi - v, -(math.pi - v)):
            mism = max(mism, model.branch_mismatch(float(u)))
    res.add(strictly_below("branch overlap g0 vs g1/g2", "glued branches agree on their overlap", mism, 1e-12, 3))

    jumps = seam_jumps(model)
    worst_seam = max(jumps.values())
    res.add(strictly_below("seam continuity (value, first and second derivative, relative)",
                           "glued metric is smooth across the seams", worst_seam, 1e-6, 3))
    res.info["seam_jumps"] = {repr(k): v for k, v in sorted(jumps.items())}

    res.add(crosspath_check(g, rng, crosspath_points, f"type-changing ({model.variant})"))
    return res


def crosspath_check(metric: MetricModel, rng: np.random.Generator, n: int, label: str,
                    sampler: Callable[[np.random.Generator], Array] | None = None) -> Check:
    """Koszul (frame) vs Christoffel (coordinate FD) covariant derivatives on random affine fields."""
    coord = CoordinateMetric.from_frame_metric(metric)
    dim = metric.dim
    worst = 0.0
    for _ in range(n):
        p = sampler(rng) if sampler else quotient_points(rng, 1)[0]
        A = affine_field(rng.normal(size=dim), 0.3 * rng.normal(size=(dim, dim)))
        B = affine_field(rng.normal(size=dim), 0.3 * rng.normal(size=(dim, dim)))
        a = covariant_deriv(metric, A, B, p)
        b = covariant_deriv_christoffel(coord, A, B, p)
        worst = max(worst, float(np.max(np.abs(a - b))) / max(1.0, float(np.max(np.abs(a)))))
    return at_most(f"Koszul vs Christoffel covariant derivative: {label}",
                   "Levi-Civita connection computed two ways", worst, 1e-8, 11)


def suite_sin_variant(points: int = 1000, seed: int = 0, u_grid: int = 2001, **params) -> SuiteResult:
    res = SuiteResult("typechange-sin")
    try:
        model = build_typechange("sin", **params)
    except (ModelConstructionError, ValueError) as exc:
        res.add(failed_construction("sin-variant metric", exc, 7))
        return res
    res.info["eta"] = model.eta
    res.info["construction_audit"] = dict(model.audit)
    g, X = model.metric, model.thurston.X
    rng = np.random.default_rng(seed)
    resid = max(geodesic_residual(g, X, p) for p in quotient_points(rng, points, [0.0, math.pi]))
    res.add(strictly_below("geodesic residual of X (sin variant)", "sin variant: X is g-geodesic", resid, 1e-7, 7))
    worst, negative = 0.0, 0
    for u in np.linspace(-math.pi, math.pi, u_grid):
        p = np.array([0.1, 0.2, 0.3, 0.4, u])
        x = X(p)
        val = g.inner(p, x, x)
        worst = max(worst, abs(val - 4 * math.sin(u) ** 4))
        negative += val < -1e-12
    res.add(at_most("g(X, X) = 4 sin^4 u", "sin variant: X is never timelike", worst, 1e-12, 7))
    res.add(equals("g(X, X) >= 0 on the grid", "sin variant: X is never timelike", int(negative), 0, 7))
    res.add(holds("construction audit (sin variant)", "glued metric has signature (3, 2)",
                  model.audit["passed"], 7, measured=model.audit["failure"] or "ok"))
    res.add(crosspath_check(g, rng, 100, "type-changing (sin)"))
    return res


# ---------------------------------------------------------------- flows

def suite_exact_flow(starts: int = 20, seed: int = 0, tol: float = 1e-10, samples: int = 400) -> SuiteResult:
    res = SuiteResult("exact-flow")
    th = ThurstonModel("xi")
    rng = np.random.default_rng(seed)
    sup = ident = 0.0
    for _ in range(starts):
        u = rng.uniform(0.3, math.pi - 0.3) * rng.choice([-1.0, 1.0])
        p0 = np.concatenate([rng.uniform(0, 1, 3), [rng.uniform(0, TWO_PI), u]])
        traj = integrate_flow(th.W, p0, [0.0, TWO_PI], tol)
        for s in np.linspace(0, TWO_PI, samples):
            sup = max(sup, float(np.max(np.abs(traj.point(s) - th.exact_flow("W", p0, s)))))
        end = th.exact_flow("W", p0, TWO_PI) - p0
        end[3] -= TWO_PI
        ident = max(ident, float(np.max(np.abs(end))))
    res.add(strictly_below("numerical W-flow vs closed form (sup over [0, 2pi])",
                           "closed-form flow of W", sup, 1e-8, 5))
    res.add(strictly_below("closed-form flow at 2pi is the identity (t mod 2pi)",
                           "W-orbits close after time 2pi", ident, 1e-10, 5))
    res.info = {"starts": starts, "tol": tol}
    return res


def rk4_order(field_: VectorField, p0, s_end: float, exact: Callable[[float], Array],
              steps=(50, 100, 200, 400)) -> float:
    """Least-squares slope of log error against log step for the fixed-step RK4."""
    errs, hs = [], []
    for n in steps:
        _, ys = rk4(lambda s, y: field_(y), np.asarray(p0, float), s_end, n)
        errs.append(float(np.max(np.abs(ys[-1] - exact(s_end)))))
        hs.append(s_end / n)
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


def heisenberg_quotient() -> QuotientSpec:
    return QuotientSpec("heisenberg-torus", 5)


def suite_orbits(u0s=(0.3, 0.7, 1.0, 1.5), tol: float = 1e-8, integ_tol: float = 1e-12,
                 horizon: float = 1e3, xi_u0s=(0.7, 0.85, 1.0, 1.5)) -> SuiteResult:
    res = SuiteResult("orbit-sweep")
    th = ThurstonModel("xi")
    quot = heisenberg_quotient()
    lightlike = LightlikeModel().metric

    def aux(p):
        return aux_metric_matrix(th, p)

    rows = []
    for u0 in u0s:
        start = np.array([0.0, 0.0, 0.0, 0.0, u0])
        rep = detect_closed_orbit(th.X, start, quot, tol=tol, horizon=horizon, integ_tol=integ_tol, aux=aux)
        const = rep.length * math.sin(u0) ** 2
        rows.append({"u0": u0, **rep.summary(), "word": list(rep.word), "length_sin2": const})
        if rep.trajectory is not None:
            res.artifacts.append(Artifact(f"orbit_X_u{u0:g}.csv", rep.trajectory, COORD_NAMES,
                                          lambda p, v: lightlike.inner(p, v, v),
                                          rep.period if rep.closed else None))
    closed = all(r["closed"] for r in rows)
    worst_res = max((r["closure_residual"] for r in rows), default=math.inf)
    res.add(holds("all X-orbits close", "Thurston's field has closed leaves", closed, 6,
                  measured=sum(r["closed"] for r in rows)))
    res.add(strictly_below("closure residual", "Thurston's field has closed leaves", worst_res, 1e-6, 6))
    consts = [r["length_sin2"] for r in rows]
    spread = (max(consts) / min(consts) - 1) if closed and min(consts) > 0 else math.inf
    res.add(at_most("length * sin^2(u0) constant", "leaf length scales like 1/sin^2(u)", spread, 1e-3, 6))
    by_u = sorted(rows, key=lambda r: r["u0"])
    increasing = closed and all(a["length"] > b["length"] for a, b in zip(by_u, by_u[1:]))
    res.add(holds("length strictly increases as u0 decreases", "leaf lengths are unbounded", increasing, 6))
    C = float(np.mean(consts)) if closed else math.nan
    nearest = min((math.pi, TWO_PI), key=lambda v: abs(v - C)) if closed else math.nan
    res.add(holds("constant C lies in {pi, 2pi}", "leaf length constant", closed and abs(C - nearest) <= 1e-3 * nearest,
                  6, measured=C))
    res.info = {"table": rows, "C": C, "C_matches": "pi" if nearest == math.pi else "2pi",
                "stated_constant": "2pi", "note": "length measured in the metric with orthonormal frame (X, du, V1, V2, 2dt+dz)"}

    # deformed field: X_xi = 2 xi^2 W_xi, so the X_xi-period is the W_xi-period over 2 xi^2
    xi_rows = []
    for u0 in xi_u0s:
        start = np.array([0.0, 0.0, 0.0, 0.0, u0])
        rep = detect_closed_orbit(th.Wxi, start, quot, tol=tol, horizon=horizon, integ_tol=integ_tol, relative=True)
        x = th.cutoff.value(u0)
        xi_rows.append({"u0": u0, "closed": rep.closed, "w_period": rep.period, "xi_period": rep.period / (2 * x * x)})
    xi_ok = all(r["closed"] for r in xi_rows)
    by_u = sorted(xi_rows, key=lambda r: r["u0"])
    res.add(holds("X_xi leaves close with periods increasing toward the bad set",
                  "deformed leaves have unbounded length",
                  xi_ok and all(a["xi_period"] > b["xi_period"] for a, b in zip(by_u, by_u[1:]))))
    res.info["xi_table"] = xi_rows

    # bad set: short z-circles
    rep = detect_closed_orbit(th.X, np.array([0.2, 0.3, 0.1, 0.5, 0.0]), quot, tol=tol, horizon=16, integ_tol=integ_tol)
    res.info["bad_set_orbit"] = {**rep.summary(), "word": list(rep.word)}

    # RK4 order on a W-orbit
    p0 = np.array([0.1, 0.2, 0.3, 0.4, 1.0])
    slope = rk4_order(th.W, p0, 1.0, lambda s: th.exact_flow("W", p0, s))
    res.info["rk4_order_slope"] = slope
    res.add(holds("fixed-step RK4 converges at order 4", "integrator cross-check", abs(slope - 4) < 0.3, None, slope))
    return res


# ---------------------------------------------------------------- Riemannization

def coordinate_frame_metric(matrix: Callable[[Array], Array], dim: int, name: str,
                            derivative: Callable[[Array], Array] | None = None) -> MetricModel:
    frame = FrameSpec(tuple(coordinate_field(i, dim) for i in range(dim)))
    return MetricModel(frame, matrix, derivative, name=name)


def _h0_plane(p):
    x, y = p
    return np.array([[2 + math.sin(y), 0.3 * math.cos(x)], [0.3 * math.cos(x), 1.5 + math.cos(y) * 0.5]])


def suite_riemannize(points: int = 200, seed: int = 0, rapidity: float = 0.7) -> SuiteResult:
    res = SuiteResult("riemannize")
    rng = np.random.default_rng(seed)
    mink = np.diag([1.0, -1.0])
    zero = np.zeros((2, 2, 2))
    g = coordinate_frame_metric(lambda p: mink, 2, "minkowski", lambda p: zero)
    ch, sh = math.cosh(rapidity), math.sinh(rapidity)
    cases = [
        ("Minkowski plane, boosted spacelike field", g, constant_field([ch, sh], "boosted-space")),
        ("Minkowski plane, boosted timelike field", g, constant_field([sh, ch], "boosted-time")),
        ("Einstein torus, d/dtheta", g, coordinate_field(0, 2, "d_theta")),
    ]
    for label, base, X in cases:
        pts = rng.uniform(0, TWO_PI, (points, 2))
        try:
            h = riemannize(base, X, _h0_plane, probe_points=list(pts[:5]))
        except (ValueError, LightlikeFoliationError) as exc:
            res.add(failed_construction(label, exc, 9))
            continue
        min_eig = min(float(np.min(np.linalg.eigvalsh(h.coordinate_matrix(p)))) for p in pts)
        resid = max(geodesic_residual(h, X, p) for p in pts)
        unit = max(abs(h.inner(p, X(p), X(p)) - 1) for p in pts)
        res.add(holds(f"h positive definite: {label}", "Riemannization is a Riemannian metric", min_eig > 0, 9, min_eig))
        res.add(strictly_below(f"h-geodesic residual: {label}", "the foliation stays geodesic for h", resid, 1e-7, 9))
        res.add(at_most(f"h(X, X) = 1: {label}", "the foliation stays geodesic for h", unit, 1e-12, 9))
    null = constant_field([1.0, 1.0], "null")
    try:
        riemannize(g, null, _h0_plane, probe_points=[np.zeros(2)])
        rejected = False
    except LightlikeFoliationError:
        rejected = True
    res.add(holds("lightlike foliation rejected", "Riemannization needs a non-null field", rejected, 9))
    return res


# ---------------------------------------------------------------- Sasaki

def suite_sasaki(geodesics: int = 5, seed: int = 0, length: float = 2.0, tol: float = 1e-11,
                 samples: int = 9) -> SuiteResult:
    res = SuiteResult("sasaki")
    rng = np.random.default_rng(seed)
    base = pseudosphere(1.0)
    S = SasakiModel(base.metric)
    worst_res = worst_gap = worst_split = 0.0
    causal_ok = True
    trajs = []
    rows = []
    for causal in ("spacelike", "timelike", "lightlike"):
        for _ in range(geodesics):
            st = random_state(base, causal, rng)
            traj = integrate_geodesic(base.metric, st, [0.0, length], tol)
            trajs.append(traj)
            rep = tangent_lift_check(S, traj, samples)
            worst_res = max(worst_res, rep.max_residual)
            worst_gap = max(worst_gap, rep.max_energy_gap)
            causal_ok &= rep.lift_causal == causal == rep.base_causal
            rows.append(rep.summary())
            q = np.concatenate([traj.point(length / 2), traj.velocity(length / 2)])
            d = splitting_defects(S, q, rng.normal(size=2), rng.normal(size=2))
            worst_split = max(worst_split, d["submersion"], d["vertical"], d["orthogonality"], d["projection"])
    res.add(strictly_below("Sasaki geodesic residual of tangent lifts", "tangent lifts of geodesics are geodesics",
                           worst_res, 1e-5, 8))
    res.add(strictly_below("Sasaki energy equals base energy", "tangent lifts keep their causal character",
                           worst_gap, 1e-10, 8))
    res.add(holds("causal character preserved", "tangent lifts keep their causal character", causal_ok, 8))
    res.add(at_most("submersion and horizontal/vertical orthogonality", "bundle projection is a submersion",
                    worst_split, 1e-10, 8))
    q = np.array([0.2, 0.5, 1.0, 0.5])
    sig = tuple(signature(S.metric(q)))
    res.add(equals("Sasaki signature doubles the base signature", "Sasaki metric signature", list(sig), [2, 2, 0], 8))
    res.add(_energy_check("energy conservation on lifted geodesics", trajs))

    # Minkowski witness: lifts of all three causal characters coexist
    mink = minkowski_plane()
    SM = SasakiModel(mink.metric)
    seen = set()
    for v in ([1.0, 0.3], [0.3, 1.0], [1.0, 1.0]):
        traj = integrate_geodesic(mink.metric, GeodesicState.create(mink.metric, [0.1, 0.2], v), [0.0, 1.0], tol)
        seen.add(tangent_lift_check(SM, traj, 3).lift_causal)
    res.add(equals("Minkowski base: lifts of every causal character", "type change on the tangent bundle",
                   sorted(seen), ["lightlike", "spacelike", "timelike"], 8))
    res.info = {"base": base.kind, "lifts": rows, "fd_note": "Sasaki Christoffels by finite differences on the 4-chart"}
    return res


# ---------------------------------------------------------------- surfaces

def suite_surfaces(samples: int = 20, seed: int = 0, horizon: float = 100.0, tol: float = 1e-8,
                   integ_tol: float = 1e-11) -> SuiteResult:
    res = SuiteResult("surface-audit")
    s21 = pseudosphere(1.0)
    space = sc_audit(s21, "spacelike", samples, seed, horizon, tol, integ_tol)
    time_ = sc_audit(s21, "timelike", samples, seed + 1, horizon, tol, integ_tol)
    torus = sc_audit(einstein_torus(), "lightlike", samples, seed + 2, horizon, tol, integ_tol)
    res.add(equals("S2_1 spacelike geodesics closed", "spacelike geodesics of S2_1 close", space["closed"], samples, 10))
    res.add(holds("S2_1 spacelike geodesics simple", "spacelike geodesics of S2_1 are simple", bool(space["all_simple"]), 10))
    disp = space["length_dispersion"] if space["length_dispersion"] is not None else math.inf
    res.add(strictly_below("S2_1 spacelike common length dispersion", "spacelike geodesics share one length",
                           disp, 1e-3, 10))
    res.add(equals("S2_1 timelike geodesics closed", "timelike geodesics of S2_1 escape", time_["closed"], 0, 10))
    res.add(holds("S2_1 timelike escape witness |w| > 10", "timelike geodesics of S2_1 escape",
                  time_["min_escape_coord"] > 10, 10, time_["min_escape_coord"]))
    res.add(equals("Einstein torus lightlike geodesics closed", "Einstein torus lightlike geodesics close",
                   torus["closed"], samples, 10))
    pr = torus["period_range"] or [math.nan, math.nan]
    dev = max(abs(pr[0] - TWO_PI), abs(pr[1] - TWO_PI))
    res.add(at_most("Einstein torus lightlike period 2pi", "Einstein torus lightlike geodesics close", dev, 1e-6, 10))
    emb = max(space["max_embedding_drift"], time_["max_embedding_drift"])
    res.add(strictly_below("S2_1 embedding constraint drift", "geodesics stay on the hyperboloid", emb, 1e-8, 10))
    plan = max(space["max_planarity_defect"], time_["max_planarity_defect"])
    res.add(strictly_below("S2_1 geodesics lie in a plane through the origin", "geodesics stay on the hyperboloid",
                           plan, 1e-8, 10))
    ratio = max(a["max_energy_drift"] / integ_tol for a in (space, time_, torus))
    res.add(at_most("energy conservation on surface geodesics", "geodesic energy g(v, v) is a first integral",
                    ratio, 100.0, 11))
    res.info = {k: {kk: vv for kk, vv in v.items() if kk != "audits"} | {"geodesics": [a.summary() for a in v["audits"]]}
                for k, v in (("S2_1_spacelike", space), ("S2_1_timelike", time_), ("einstein_torus_lightlike", torus))}
    res.info["S2_1_spacelike"]["oracle_common_length"] = TWO_PI
    for name, audit in (("S2_1_spacelike", space), ("S2_1_timelike", time_)):
        first = audit["audits"][0] if audit["audits"] else None
        if first is not None and first.report is not None and first.report.trajectory is not None:
            res.artifacts.append(Artifact(f"{name}_0.csv", first.report.trajectory, ("w", "theta"),
                                          lambda p, v, m=s21.metric: m.inner(p, v, v),
                                          first.period if first.closed else None))
    return res


# ---------------------------------------------------------------- cross-path

def suite_crosspath(points: int = 100, seed: int = 0) -> SuiteResult:
    """Koszul vs Christoffel on the lightlike model (the type-change models are covered by their suites)."""
    res = SuiteResult("cross-path")
    rng = np.random.default_rng(seed)
    res.add(crosspath_check(LightlikeModel().metric, rng, points, "lightlike"))
    return res


# ---------------------------------------------------------------- mutation

MUTATIONS = ("flip:0,1", "flip:0,3", "flip:1,2", "flip:1,3", "flip:2,3", "flip:3,4", "u2")


def suite_mutation(mutation: str, points: int = 200, seed: int = 0, **params) -> SuiteResult:
    """The type-change suite on a deliberately broken model; it should not pass."""
    res = SuiteResult(f"mutation {mutation}")
    try:
        model = build_typechange("xi", mutation=mutation, **params)
    except (ModelConstructionError, ValueError) as exc:
        res.add(failed_construction(f"type-changing metric ({mutation})", exc, 3))
        return res
    inner = suite_typechange(model, points=points, seed=seed, overlap_points=4, crosspath_points=10)
    res.checks = inner.checks
    res.info = {"failing": [c.name for c in inner.checks if not c.passed]}
    return res
