"""Scalar curvature, K-energy derivative, the yen invariant and the
Futaki-yen comparison.

Conventions: ``R = -sum_ij d_i d_j H^{ij}`` with ``H = (Hess u)^{-1}``, and
``Rbar = 2 Vol_sigma(dP) / Vol(P)``.  Integration by parts gives, for any
test function ``g``,

    int_P g (Rbar - R) dmu = -2 L(g) + int_P tr(H D^2 g) dmu,

where ``L(g) = int_dP g dsigma - (Vol_sigma / Vol) int_P g dmu``.  The
K-energy derivative along ``u_t`` is normalised as
``dE/dt = 1/2 int_P (-du/dt)(Rbar - R) dmu = L(f) - 1/2 int tr(H_t D^2 f)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.special import logsumexp, softmax

from . import _exact as ex
from .degeneration import ToricDegeneration, futaki_expansion
from .errors import (ConditioningError, ConsistencyError, DomainError, PreconditionError,
                     UnsupportedInputError)
from .geodesic import GeodesicRay
from .polytope import (PiecewiseLinearFn, Polytope, check_delzant, integrate_boundary,
                       integrate_interior, integrate_pl, integrate_pl_boundary, quadrature_rule)
from .potentials import (ClosedFormField, Dual1D, SumField, SymplecticPotential, _as_points,
                         metric_data)


# ---------------------------------------------------------------------------
# Curvature


def _inverse_hessian(u: SymplecticPotential, x: np.ndarray, cond_max: float) -> np.ndarray:
    G = u.hessian(x)
    cond = np.linalg.cond(G)
    if np.any(~np.isfinite(cond)) or np.any(cond > cond_max):
        i = int(np.argmax(np.where(np.isfinite(cond), cond, np.inf)))
        raise ConditioningError(f"Hessian is near-singular (condition {cond.ravel()[i]:.3g}) "
                                f"at x = {x.reshape(-1, u.dim)[i].tolist()}")
    return np.linalg.inv(G)


_D2 = (np.array([-2, -1, 0, 1, 2]), np.array([-1, 16, -30, 16, -1]) / 12.0)
_D1 = (np.array([-2, -1, 1, 2]), np.array([1, -8, 8, -1]) / 12.0)


def abreu_scalar_curvature(u: SymplecticPotential, x, step: float | None = None,
                           cond_max: float = 1e12) -> np.ndarray:
    """``R(x) = -sum_ij d_i d_j H^{ij}`` by fourth-order finite differences.

    The step shrinks with the distance to the boundary so stencils stay
    inside the polytope; evaluation within ``1e-3 diam`` of a crease is
    refused because ``H`` is only one-sided there.
    """
    x = _as_points(x, u.dim)
    flat = x.reshape(-1, u.dim)
    dist = u.polytope.facet_distance(flat)
    if np.any(dist <= 0):
        raise DomainError("curvature requested outside the open polytope")
    if u.ray and np.any(u.crease_distance(flat) < 1e-3 * u.polytope.diameter):
        raise DomainError("curvature requested on a crease of the ray term")
    if step is None:
        s = np.minimum(1e-3 * u.polytope.diameter, dist / 4)
    else:
        s = np.minimum(step, dist / 4)
    n = u.dim
    R = np.zeros(len(flat))
    for i in range(n):
        for j in range(i, n):
            if i == j:
                offs, w = _D2
                pts = flat[:, None, :] + offs[None, :, None] * s[:, None, None] * np.eye(n)[i]
                Hij = _inverse_hessian(u, pts, cond_max)[..., i, i]
                R -= (Hij * w).sum(-1) / s ** 2
            else:
                offs, w = _D1
                oi, oj = np.meshgrid(offs, offs, indexing="ij")
                wij = np.outer(w, w).ravel()
                disp = (oi.ravel()[:, None] * np.eye(n)[i] + oj.ravel()[:, None] * np.eye(n)[j])
                pts = flat[:, None, :] + disp[None] * s[:, None, None]
                Hij = _inverse_hessian(u, pts, cond_max)[..., i, j]
                R -= 2 * (Hij * wij).sum(-1) / s ** 2
    return R.reshape(x.shape[:-1])


def mean_scalar_curvature(P: Polytope) -> Fraction:
    if not check_delzant(P).is_delzant:
        raise UnsupportedInputError("mean curvature needs a Delzant polytope")
    return 2 * P.boundary_volume() / P.volume()


@dataclass
class CurvatureField:
    u: SymplecticPotential
    mean: Fraction

    def __call__(self, x):
        return abreu_scalar_curvature(self.u, x)

    def total(self, resolution: int = 64):
        """``int_P R dmu`` (should equal ``2 Vol_sigma(dP)``)."""
        P = self.u.polytope
        if self.u.ray:
            # the PL term only adds atoms on creases; off them R is that of
            # the smooth part
            smooth = CurvatureField(self.u.smooth_part(), self.mean)
            return smooth.total(resolution)
        return integrate_interior(P, lambda X: abreu_scalar_curvature(self.u, X),
                                  resolution=resolution)


def curvature_field(u: SymplecticPotential) -> CurvatureField:
    return CurvatureField(u, mean_scalar_curvature(u.polytope))


# ---------------------------------------------------------------------------
# Boundary functional


def boundary_functional(P: Polytope, g, resolution: int = 64):
    """``L(g) = int_dP g dsigma - (Vol_sigma / Vol) int_P g dmu``.

    Exact (a ``Fraction``) for PL ``g``; quadrature for a callable.
    """
    ratio = P.boundary_volume() / P.volume()
    if isinstance(g, PiecewiseLinearFn):
        return integrate_pl_boundary(P, g) - ratio * integrate_pl(P, g)
    fn = g.value if hasattr(g, "value") else g
    return integrate_boundary(P, fn) - float(ratio) * integrate_interior(
        P, fn, resolution=resolution).value


# ---------------------------------------------------------------------------
# K-energy derivative


def regularized_pl(f: PiecewiseLinearFn, eps: float) -> ClosedFormField:
    """``eps log sum_j exp((<a_j,x> + c_j)/eps)``, a smooth convex majorant of
    ``f`` within ``eps log(#pieces)``."""
    A, c = f._A, f._c

    def z(x):
        return (x @ A.T + c) / eps

    def val(x):
        return eps * logsumexp(z(x), axis=-1)

    def grad(x):
        return softmax(z(x), axis=-1) @ A

    def hess(x):
        w = softmax(z(x), axis=-1)
        m = w @ A
        return (np.einsum("...k,ki,kj->...ij", w, A, A) - m[..., :, None] * m[..., None, :]) / eps

    return ClosedFormField(f.dim, val, grad, hess, name=f"regularized(eps={eps})")


def _direction_parts(ray: GeodesicRay):
    f = ray.f
    return (f, True) if isinstance(f, PiecewiseLinearFn) else (f, False)


@dataclass
class KEnergyValue:
    value: float | Fraction
    error: float
    mode: str
    detail: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


def _symplectic_mode(ray: GeodesicRay, t: float, resolution: int) -> KEnergyValue:
    f, is_pl = _direction_parts(ray)
    P = ray.polytope
    if is_pl:
        if t <= 0 and not f.is_affine_on(P):
            raise PreconditionError("PL rays need t > 0 (creases carry no Hessian mass only "
                                    "after the segment has opened)")
        # D^2 f = 0 off creases; crease atoms carry zero weight for t > 0
        return KEnergyValue(boundary_functional(P, f), 0.0, "symplectic")
    Lf = boundary_functional(P, f, resolution)
    u_t = ray.potential(t)

    def trace(X):
        H = np.linalg.inv(u_t.hessian(X))
        return np.einsum("...ij,...ji->...", H, f.hessian(X))

    q = integrate_interior(P, trace, resolution=resolution)
    return KEnergyValue(Lf - 0.5 * q.value, 0.5 * q.error, "symplectic",
                        {"L": Lf, "trace_integral": q.value})


def _smooth_potential(ray: GeodesicRay, t: float, eps: float) -> SymplecticPotential:
    f, is_pl = _direction_parts(ray)
    u0 = ray.u0
    direction = regularized_pl(f, eps) if is_pl else f
    terms = ([(1.0, u0.correction)] if u0.correction is not None else []) + [(t, direction)]
    return SymplecticPotential(u0.polytope, u0.guillemin, SumField(terms)), direction


def _complex_once(ray: GeodesicRay, t: float, eps: float, dy: float, pad: float) -> float:
    P = ray.polytope
    u_t, direction = _smooth_potential(ray, t, eps)
    h = Dual1D(u_t)
    (a,), (b,) = P.bounding_box()
    delta = 1e-9 * P.diameter
    ends = np.array([[float(a) + delta], [float(b) - delta]])
    y_lo, y_hi = u_t.gradient(ends)[:, 0]
    y_lo, y_hi = max(y_lo, -pad) - 1.0, min(y_hi, pad + t) + 1.0
    ys = np.arange(y_lo, y_hi + dy, dy)
    x = h.gradient(ys[:, None])[:, 0]
    hpp = h.hessian(ys[:, None])[:, 0, 0]
    # d^2/dy^2 log h'' on the interior nodes; R h'' = -(log h'')''
    lg = np.log(hpp)
    d2 = (lg[2:] - 2 * lg[1:-1] + lg[:-2]) / dy ** 2
    Rbar = float(mean_scalar_curvature(P))
    hdot = -direction.value(x[1:-1, None])  # envelope identity
    integrand = 0.5 * hdot * (Rbar * hpp[1:-1] + d2)
    return float(np.trapezoid(integrand, dx=dy))


def _complex_mode(ray: GeodesicRay, t: float, eps: float, dy: float | None,
                  pad: float) -> KEnergyValue:
    if ray.u0.dim != 1:
        raise UnsupportedInputError("complex-mode quadrature is implemented in dimension one")
    f, is_pl = _direction_parts(ray)
    if is_pl and t <= 0 and not f.is_affine_on(ray.polytope):
        raise PreconditionError("PL rays need t > 0")
    if not is_pl:
        step = dy or 2e-3
        v1 = _complex_once(ray, t, 0.0, step, pad)
        v2 = _complex_once(ray, t, 0.0, step / 2, pad)
        return KEnergyValue(v2, abs(v2 - v1), "complex", {"dy": [step, step / 2],
                                                          "values": [v1, v2]})
    step = dy or eps / 10
    v1 = _complex_once(ray, t, eps, step, pad)
    v2 = _complex_once(ray, t, eps / 2, step / 2, pad)
    return KEnergyValue(v2, abs(v2 - v1), "complex",
                        {"eps": [eps, eps / 2], "values": [v1, v2]})


def kenergy_derivative(ray: GeodesicRay, t: float, mode: str = "symplectic",
                       resolution: int = 64, eps: float = 0.02, dy: float | None = None,
                       pad: float = 12.0) -> KEnergyValue:
    """``dE/dt`` along the ray at time ``t``.

    symplectic: ``L(f) - 1/2 int tr(H_t D^2 f)``; for PL ``f`` this is exactly
    ``L(f)``.  complex: trapezoid rule in ``y`` of
    ``1/2 dh/dt (Rbar h'' + (log h'')'')`` with ``dh/dt = -f(h')``; a PL
    direction is replaced by its log-sum-exp smoothing at width ``eps`` and
    the quadrature repeated at ``eps/2`` for an error estimate.
    """
    if mode == "symplectic":
        return _symplectic_mode(ray, t, resolution)
    if mode == "complex":
        return _complex_mode(ray, t, eps, dy, pad)
    raise ValueError(f"unknown mode {mode!r}")


def kenergy_crosscheck(ray: GeodesicRay, t: float, tol: float = 0.05, **kw) -> dict:
    """Evaluate both modes; a disagreement is reported and warned about."""
    s = kenergy_derivative(ray, t, "symplectic", **{k: v for k, v in kw.items()
                                                     if k == "resolution"})
    c = kenergy_derivative(ray, t, "complex", **{k: v for k, v in kw.items()
                                                  if k in ("eps", "dy", "pad")})
    gap = abs(float(s.value) - float(c.value))
    ok = gap <= tol + s.error + c.error
    if not ok:
        warnings.warn(f"K-energy modes disagree at t={t}: {float(s.value)} vs {c.value}",
                      RuntimeWarning)
    return {"symplectic": s, "complex": c, "gap": gap, "consistent": ok}


@dataclass
class YenEstimate:
    series: list  # (t, dE/dt)
    limit: float | Fraction
    closed_form: Fraction | None
    converged: bool


def yen_invariant(ray: GeodesicRay, t_max: int = 10, mode: str = "symplectic",
                  tol: float = 1e-6, **kw) -> YenEstimate:
    """``lim_{t -> inf} dE/dt`` from the series at ``t = 1, ..., t_max``."""
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    series = []
    for t in range(1, int(t_max) + 1):
        series.append((float(t), kenergy_derivative(ray, t, mode, **kw).value))
    inc = abs(float(series[-1][1]) - float(series[-2][1])) if len(series) > 1 else 0.0
    f, is_pl = _direction_parts(ray)
    closed = boundary_functional(ray.polytope, f) if is_pl else None
    converged = inc <= tol
    if not converged:
        warnings.warn(f"yen series has not stabilised (last increment {inc:.3g})",
                      RuntimeWarning)
    return YenEstimate(series, series[-1][1], closed, converged)


# ---------------------------------------------------------------------------
# The comparison


@dataclass
class CompareReport:
    F1: Fraction | float
    yen_closed: Fraction
    yen_numeric: float | None
    vol: Fraction
    identity_residual: float
    passed: bool
    method: str

    def to_dict(self) -> dict:
        def fmt(v):
            return ex.frac_str(v) if isinstance(v, Fraction) else v
        return {"F1": fmt(self.F1), "yen_closed": fmt(self.yen_closed),
                "yen_numeric": self.yen_numeric, "vol": fmt(self.vol),
                "identity_residual": self.identity_residual, "pass": self.passed,
                "method": self.method}


def compare_futaki_yen(cfg: ToricDegeneration, ray: GeodesicRay | None = None,
                       numeric: bool = False, t_numeric: float = 10.0,
                       weight_sign: int = 1, tol: float = 1e-12) -> CompareReport:
    """Check ``F1 = -yen / (2 Vol(P))``.

    ``F1`` comes from lattice counting, ``yen`` from the boundary functional
    of ``f``; with ``numeric=True`` the complex-mode K-energy derivative at
    ``t_numeric`` is reported as well.  ``weight_sign=-1`` flips the weight
    convention (a negative control).
    """
    if ray is not None and ray.f != cfg.direction and isinstance(ray.f, PiecewiseLinearFn):
        if ray.f.simplified() != cfg.direction:
            raise PreconditionError("ray and configuration use different directions")
    exp = futaki_expansion(cfg, weight_sign=weight_sign)
    yen = boundary_functional(cfg.base, cfg.direction)
    vol = cfg.base.volume()
    if isinstance(exp.F1, Fraction):
        residual = abs(exp.F1 + yen / (2 * vol))
        res_f = float(residual)
        passed = residual == 0 or res_f < tol
    else:
        res_f = abs(exp.F1 + float(yen) / (2 * float(vol)))
        passed = res_f < max(tol, 10 * (exp.stability or 0.0))
    yen_num = None
    if numeric and ray is not None:
        yen_num = float(kenergy_derivative(ray, t_numeric, "complex").value)
    return CompareReport(exp.F1, yen, yen_num, vol, res_f, passed, exp.method)
