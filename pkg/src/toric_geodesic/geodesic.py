"""Geodesic segments and rays in polytope form, and their diagnostics.

In symplectic coordinates geodesics are straight lines: ``u_t = u_0 + t f``.
The complex side ``h_t`` is the Legendre dual; for a PL direction it picks
up linear segments over every crease of ``f``, whose length grows with
``t``.  This is what limits the regularity of the ray to ``C^{1,1}``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .degeneration import ToricDegeneration, algebraic_ray
from .errors import PreconditionError, UnsupportedInputError
from .polytope import PiecewiseLinearFn
from .potentials import (ComplexPotential, Dual1D, SumField, SymplecticPotential,
                         legendre_dual)


@dataclass(frozen=True)
class GeodesicRay:
    """``t -> u_0 + t f`` together with its Legendre duals.

    ``f`` is normally a ``PiecewiseLinearFn``; a smooth field (anything with
    ``value``/``gradient``/``hessian``) is accepted for smooth directions.
    """

    u0: SymplecticPotential
    f: PiecewiseLinearFn
    _duals: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.u0.ray:
            raise ValueError("u0 must be the smooth part (no ray term)")
        if self.f.dim != self.u0.dim:
            raise ValueError("direction and potential dimensions differ")

    @property
    def polytope(self):
        return self.u0.polytope

    def potential(self, t: float) -> SymplecticPotential:
        return ray_potential(self, t)

    def dual(self, t: float) -> ComplexPotential:
        t = float(t)
        if t not in self._duals:
            self._duals[t] = legendre_dual(self.potential(t))
        return self._duals[t]


def segment_potential(u_a: SymplecticPotential, u_b: SymplecticPotential,
                      t: float) -> SymplecticPotential:
    """``(1 - t) u_a + t u_b``, the geodesic between two toric potentials."""
    if u_a.polytope != u_b.polytope:
        raise ValueError("segment endpoints live on different polytopes")
    if not 0.0 <= t <= 1.0:
        raise ValueError("segment parameter must lie in [0, 1]")
    if t == 0:
        return u_a
    if t == 1:
        return u_b
    from .potentials import GuilleminField

    terms = []
    if u_a.guillemin == u_b.guillemin:
        guillemin = u_a.guillemin
    else:
        guillemin = False
        for s, u in ((1 - t, u_a), (t, u_b)):
            if u.guillemin:
                terms.append((s, GuilleminField(u.polytope)))
    for s, u in ((1 - t, u_a), (t, u_b)):
        if u.correction is not None:
            terms.append((s, u.correction))
    corr = SumField(terms) if terms else None
    ray = tuple((f, (1 - t) * c) for f, c in u_a.ray) + tuple((f, t * c) for f, c in u_b.ray)
    return SymplecticPotential(u_a.polytope, guillemin, corr, ray)


def ray_potential(ray: GeodesicRay, t: float) -> SymplecticPotential:
    if t < 0:
        raise PreconditionError("rays are defined for t >= 0")
    if isinstance(ray.f, PiecewiseLinearFn):
        return ray.u0.with_ray(ray.f, t)
    # smooth direction: fold t * f into the correction
    if t == 0:
        return ray.u0
    terms = ([(1.0, ray.u0.correction)] if ray.u0.correction is not None else []) + [(t, ray.f)]
    return SymplecticPotential(ray.u0.polytope, ray.u0.guillemin, SumField(terms))


def complex_ray_potential(ray: GeodesicRay, t: float, y) -> np.ndarray:
    return ray.dual(t).value(np.asarray(y, dtype=float))


def crease_images(ray: GeodesicRay, t: float) -> list[tuple[float, float, float]]:
    """``(y_lo, y_hi, x_c)`` for each linear segment of ``h_t`` (dim 1)."""
    h = ray.dual(t)
    if not isinstance(h, Dual1D):
        raise UnsupportedInputError("crease images are tracked in dimension one")
    return [s for s in h.segments if s[1] > s[0]]


# ---------------------------------------------------------------------------
# Parallelism with the algebraic ray


@dataclass
class GapSeries:
    t: list
    gap: list
    increments: list  # |gap(t_{i+1}) - gap(t_i)|
    window: float
    edge_warning: bool


def parallelism_gap(ray: GeodesicRay, cfg: ToricDegeneration, t_list: Sequence[float],
                    window: float = 5.0, samples: int = 4001) -> GapSeries:
    """``sup_y |h_t(y) - h_{0,t}(y)|`` over ``y in [-w, w + t]`` (dim 1)."""
    if ray.u0.dim != 1:
        raise UnsupportedInputError("parallelism gap is sampled in dimension one")
    gaps, edge = [], False
    for t in t_list:
        ys = np.linspace(-window, window + t, samples)[:, None]
        diff = ray.dual(t).value(ys) - algebraic_ray(cfg, t).value(ys)
        gaps.append(float(np.abs(diff).max()))
        for lo, hi, _ in (crease_images(ray, t) if t > 0 else []):
            if lo - 1.0 < -window or hi + 1.0 > window + t:
                edge = True
    if edge:
        warnings.warn(f"window w={window} is too small: the travelling branch reaches "
                      "the window edge", RuntimeWarning)
    inc = [abs(b - a) for a, b in zip(gaps[:-1], gaps[1:])]
    return GapSeries(list(map(float, t_list)), gaps, inc, window, edge)


# ---------------------------------------------------------------------------
# Reduced homogeneous Monge-Ampere residual


@dataclass
class ResidualReport:
    residual: float
    used: int
    skipped: int
    shape: tuple


def geodesic_residual(Phi: Callable, t_range, y_range, n: int = 200,
                      creases: Sequence[Callable] = (), margin_cells: int = 3) -> ResidualReport:
    """``max |Phi_tt Phi_yy - Phi_ty^2|`` on an ``n x n`` grid.

    Second-order central differences; nodes within ``margin_cells`` cells of
    a crease curve ``y = c(t)`` are skipped (and counted).
    """
    t = np.linspace(*t_range, n)
    y = np.linspace(*y_range, n)
    k, h = t[1] - t[0], y[1] - y[0]
    T, Y = np.meshgrid(t, y, indexing="ij")
    F = np.asarray(Phi(T, Y), dtype=float)
    Ftt = (F[2:, 1:-1] - 2 * F[1:-1, 1:-1] + F[:-2, 1:-1]) / k ** 2
    Fyy = (F[1:-1, 2:] - 2 * F[1:-1, 1:-1] + F[1:-1, :-2]) / h ** 2
    Fty = (F[2:, 2:] - F[2:, :-2] - F[:-2, 2:] + F[:-2, :-2]) / (4 * h * k)
    res = np.abs(Ftt * Fyy - Fty ** 2)
    Ti, Yi = T[1:-1, 1:-1], Y[1:-1, 1:-1]
    keep = np.ones_like(res, dtype=bool)
    reach = margin_cells * max(h, k)
    for c in creases:
        keep &= np.abs(Yi - c(Ti)) > reach
    keep &= np.isfinite(res)
    used = int(keep.sum())
    return ResidualReport(float(res[keep].max()) if used else 0.0, used,
                          int(keep.size - used), (n, n))


@dataclass
class ResidualStudy:
    coarse: ResidualReport
    fine: ResidualReport

    @property
    def ratio(self) -> float:
        return self.coarse.residual / self.fine.residual if self.fine.residual > 0 else np.inf


def residual_refinement(Phi: Callable, t_range, y_range, n: int = 200,
                        creases: Sequence[Callable] = ()) -> ResidualStudy:
    """Residual on ``n/2`` and ``n`` grids; a second-order scheme gives ratio ~ 4."""
    return ResidualStudy(geodesic_residual(Phi, t_range, y_range, n // 2, creases),
                         geodesic_residual(Phi, t_range, y_range, n, creases))


def ray_field(ray: GeodesicRay) -> Callable:
    """``Phi(t, y) = h_t(y)`` evaluated on arrays of matching shape (dim 1)."""
    def Phi(T, Y):
        T, Y = np.broadcast_arrays(np.asarray(T, float), np.asarray(Y, float))
        out = np.empty(T.shape)
        for tv in np.unique(T):
            sel = T == tv
            out[sel] = ray.dual(tv).value(Y[sel][:, None])
        return out
    return Phi


# ---------------------------------------------------------------------------
# Regularity


@dataclass
class RayDiagnostics:
    gap_series: list = field(default_factory=list)  # (t, gap)
    jump_series: list = field(default_factory=list)  # (t, y_c, jump)
    third_derivative_sup: list = field(default_factory=list)  # (t, sup |h'''|)
    second_derivative_sup: list = field(default_factory=list)  # (t, sup h'')


def sup_second_derivative(h: ComplexPotential, lo: float, hi: float, samples: int = 2001) -> float:
    """``sup h''`` on ``[lo, hi]``: grid search, then a bounded local maximisation."""
    ys = np.linspace(lo, hi, samples)
    vals = h.hessian(ys[:, None])[:, 0, 0]
    i = int(np.argmax(vals))
    a, b = ys[max(i - 1, 0)], ys[min(i + 1, samples - 1)]
    res = minimize_scalar(lambda z: -float(h.hessian(np.array([[z]]))[0, 0, 0]),
                          bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    return max(float(vals[i]), -float(res.fun))


def one_sided_second(h: ComplexPotential, y: float, side: int, delta: float = 1e-4) -> float:
    """One-sided second difference of ``h`` at ``y`` (``side = -1`` or ``+1``)."""
    pts = np.array([[y], [y + side * delta], [y + 2 * side * delta]])
    v = h.value(pts)
    return float((v[0] - 2 * v[1] + v[2]) / delta ** 2)


def regularity_diagnostics(ray: GeodesicRay, t_list: Sequence[float], window: float = 5.0,
                           samples: int = 4001, delta: float = 1e-4) -> RayDiagnostics:
    """Second-derivative jumps at crease images and derivative sups (dim 1)."""
    if ray.u0.dim != 1:
        raise UnsupportedInputError("regularity diagnostics are one-dimensional")
    diag = RayDiagnostics()
    for t in t_list:
        h = ray.dual(t)
        for lo, hi, _ in (crease_images(ray, t) if t > 0 else []):
            for yc, outside in ((lo, -1), (hi, +1)):
                jump = abs(one_sided_second(h, yc, outside, delta) -
                           one_sided_second(h, yc, -outside, delta))
                diag.jump_series.append((float(t), float(yc), jump))
        ys = np.linspace(-window, window + t, samples)
        hpp = h.hessian(ys[:, None])[:, 0, 0]
        dy = ys[1] - ys[0]
        third = np.abs(np.diff(hpp)) / dy
        mids = 0.5 * (ys[1:] + ys[:-1])
        off = np.ones_like(mids, dtype=bool)
        for lo, hi, _ in (crease_images(ray, t) if t > 0 else []):
            off &= (np.abs(mids - lo) > 2 * dy) & (np.abs(mids - hi) > 2 * dy)
        diag.third_derivative_sup.append((float(t), float(third[off].max())))
        diag.second_derivative_sup.append((float(t), sup_second_derivative(h, -window, window + t)))
    return diag
