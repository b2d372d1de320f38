"""Toric test configurations from piecewise-linear data.

Given a polytope ``P``, a convex rational PL function ``f`` and a ceiling
``K >= max_P f``, the lifted polytope is
``P_hat = {(x, y) : x in P, 0 <= y <= K - f(x)}``.  Its lattice points are
the sections of the central fibre and the last coordinate is their weight
under the C*-action.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import logsumexp

from . import _exact as ex
from .errors import ConsistencyError, PreconditionError, UnsupportedInputError
from .polytope import (Facet, PiecewiseLinearFn, Polytope, check_delzant, lattice_points)
from .potentials import LogSumExpPotential


@dataclass(frozen=True)
class ToricDegeneration:
    base: Polytope
    direction: PiecewiseLinearFn
    ceiling: Fraction
    hat: Polytope
    degenerate: bool  # K == max f: the roof touches the floor
    integral: bool
    delzant: bool

    @property
    def dim(self) -> int:
        return self.base.dim

    def column_top(self, x, k: int = 1) -> int:
        """``max{j : (x, j) in k P_hat}`` for a lattice point ``x`` of ``kP``."""
        fk = max(ex.dot(a, x) + k * c for a, c in self.direction.pieces)
        return math.floor(k * self.ceiling - fk)

    def sections(self) -> list[tuple[tuple[int, ...], int]]:
        """Lattice points of ``P_hat`` as ``(base point, weight)``."""
        return [(p[:-1], p[-1]) for p in lattice_points(self.hat, 1)]


def build_hat_polytope(P: Polytope, f: PiecewiseLinearFn, K) -> ToricDegeneration:
    K = ex.frac(K)
    if f.dim != P.dim:
        raise UnsupportedInputError("PL function and polytope dimensions differ")
    fmax = f.max_on(P)
    if K < fmax:
        raise PreconditionError(f"ceiling K = {K} is below max f = {fmax}")
    if K <= f.min_on(P):
        raise PreconditionError(f"ceiling K = {K} leaves the lifted polytope flat")
    f = f.simplified()
    n = P.dim
    active = f.active_pieces(P) if n <= 2 else list(range(len(f.pieces)))
    normals, offsets = [], []
    for fc in P.facets:
        normals.append(tuple(fc.normal) + (0,))
        offsets.append(fc.offset)
    normals.append((0,) * n + (1,))
    offsets.append(Fraction(0))
    for j in active:
        a, c = f.pieces[j]
        normals.append(tuple(-v for v in a) + (-1,))
        offsets.append(K - c)
    hat = Polytope.from_inequalities(normals, offsets).irredundant()
    return ToricDegeneration(
        base=P, direction=f, ceiling=K, hat=hat, degenerate=(K == fmax),
        integral=P.is_integral and hat.is_integral,
        delzant=check_delzant(hat).is_delzant)


# ---------------------------------------------------------------------------
# Hilbert data and the Futaki expansion


def hilbert_data(cfg: ToricDegeneration, k: int) -> tuple[int, int]:
    """``(d_k, w_k)``: sections of ``L^k`` and the total weight.

    The weight is summed over column tops and cross-checked against the
    lattice-point count of ``k P_hat``.
    """
    base_pts = lattice_points(cfg.base, k)
    d = len(base_pts)
    tops = [cfg.column_top(x, k) for x in base_pts]
    if any(t < 0 for t in tops):
        raise ConsistencyError("negative column height: K is below f on P")
    w = sum(tops)
    N = len(lattice_points(cfg.hat, k))
    if N - d != w:
        raise ConsistencyError(f"weight mismatch at k={k}: column tops give {w}, "
                               f"lattice count gives {N - d}")
    return d, w


def _signed(cfg, k, sign):
    d, w = hilbert_data(cfg, k)
    return d, sign * w


def _interpolate(ks, vals) -> list[Fraction]:
    """Coefficients (low to high) of the polynomial through ``(ks, vals)``."""
    n = len(ks)
    rows = [[Fraction(k) ** i for i in range(n)] for k in ks]
    sol = ex.solve(rows, [Fraction(v) for v in vals])
    return list(sol)


def _polyval(coeffs, k) -> Fraction:
    return sum((c * Fraction(k) ** i for i, c in enumerate(coeffs)), Fraction(0))


def series_in_inverse_k(num: list[Fraction], den: list[Fraction], order: int) -> list[Fraction]:
    """Expand ``num(k) / den(k)`` in powers of ``1/k``.

    Requires ``deg num <= deg den``; with ``z = 1/k`` both become polynomials
    in ``z`` and the quotient is an exact power-series division.
    """
    while len(num) > 1 and num[-1] == 0:
        num = num[:-1]
    while len(den) > 1 and den[-1] == 0:
        den = den[:-1]
    m = len(den) - 1
    if len(num) - 1 > m:
        raise ValueError("numerator degree exceeds denominator degree")
    # z^m num(1/z), z^m den(1/z): coefficient of z^i is the k^(m-i) coefficient
    N = [num[m - i] if m - i < len(num) else Fraction(0) for i in range(m + 1)]
    D = [den[m - i] for i in range(m + 1)]
    out = []
    rem = N + [Fraction(0)] * (order + 1)
    for i in range(order + 1):
        c = rem[i] / D[0]
        out.append(c)
        for j, dj in enumerate(D):
            if i + j < len(rem):
                rem[i + j] -= c * dj
    return out


@dataclass
class ExpansionResult:
    F0: Fraction | float
    F1: Fraction | float
    F2: Fraction | float
    samples: list  # (k, d_k, w_k, F(k))
    method: str  # "exact" | "fit"
    d_poly: list = field(default_factory=list)
    w_poly: list = field(default_factory=list)
    stability: float | None = None  # fit mode: spread of F1 across sub-ranges

    def to_dict(self) -> dict:
        def fmt(v):
            return ex.frac_str(v) if isinstance(v, Fraction) else float(v)
        d = {"d": [s[1] for s in self.samples], "w": [s[2] for s in self.samples],
             "k": [s[0] for s in self.samples],
             "F0": fmt(self.F0), "F1": fmt(self.F1), "F2": fmt(self.F2),
             "method": self.method}
        if self.method == "exact":
            d["d_poly"] = [ex.frac_str(c) for c in self.d_poly]
            d["w_poly"] = [ex.frac_str(c) for c in self.w_poly]
        else:
            d["stability"] = self.stability
        return d


def _fit(samples, period: int = 1) -> tuple[np.ndarray, float]:
    """Least squares of ``F(k)`` in ``1/k``.

    Ehrhart counts of a rational polytope are quasi-polynomials, so
    oscillating terms ``cos(2 pi r k / period) / k^i`` (i = 1, 2) are fitted
    alongside and discarded; ``F1`` is the mean coefficient.
    """
    k = np.array([s[0] for s in samples], dtype=float)
    F = np.array([float(s[3]) for s in samples])
    cols = [k ** -i for i in range(4)]
    for r in range(1, period):
        for i in (1, 2):
            cols.append(np.cos(2 * np.pi * r * k / period) / k ** i)
            if 2 * r != period:
                cols.append(np.sin(2 * np.pi * r * k / period) / k ** i)
    basis = np.stack(cols, -1)

    def solve(mask):
        return np.linalg.lstsq(basis[mask], F[mask], rcond=None)[0]

    full = solve(np.ones(len(k), bool))
    half = len(k) // 2
    lo = solve(np.arange(len(k)) < half)
    hi = solve(np.arange(len(k)) >= half)
    return full, float(abs(lo[1] - hi[1]))


def _period(P: Polytope) -> int:
    return math.lcm(*[v.denominator for p in P.vertices for v in p])


def futaki_expansion(cfg: ToricDegeneration, k_range=None, mode: str = "auto",
                     weight_sign: int = 1) -> ExpansionResult:
    """``F(k) = w_k / (k d_k) = F0 + F1/k + F2/k^2 + ...``.

    Exact mode interpolates the Ehrhart polynomials of ``P`` and ``P_hat`` and
    divides series exactly; fit mode does least squares in ``1/k``.
    ``weight_sign = -1`` flips the weight convention (used as a negative
    control).
    """
    if weight_sign not in (1, -1):
        raise ValueError("weight_sign must be +1 or -1")
    n = cfg.dim
    if mode not in ("auto", "exact", "fit"):
        raise ValueError(f"unknown mode {mode!r}")
    use_exact = mode == "exact" or (mode == "auto" and cfg.integral)
    if k_range is None:
        k_range = range(1, 11) if use_exact else range(1, 41)
    ks = sorted(set(int(k) for k in k_range))
    samples = []
    for k in ks:
        d, w = _signed(cfg, k, weight_sign)
        samples.append((k, d, w, Fraction(w, k * d)))
    if use_exact:
        fit_ks = list(range(1, n + 3))
        data = {k: _signed(cfg, k, weight_sign) for k in fit_ks + [n + 3]}
        d_poly = _interpolate(fit_ks, [data[k][0] for k in fit_ks])
        N_poly = _interpolate(fit_ks, [data[k][0] + data[k][1] for k in fit_ks])
        w_poly = [a - (d_poly[i] if i < len(d_poly) else 0) for i, a in enumerate(N_poly)]
        checks = [(k, d, w) for k, d, w, _ in samples] + [(n + 3,) + data[n + 3]]
        ok = all(_polyval(d_poly, k) == d and _polyval(w_poly, k) == w for k, d, w in checks)
        if ok:
            kd_poly = [Fraction(0)] + d_poly  # k * d(k)
            F = series_in_inverse_k(w_poly, kd_poly, 2)
            return ExpansionResult(F[0], F[1], F[2], samples, "exact", d_poly, w_poly)
        warnings.warn("Ehrhart interpolation failed a held-out check (lifted polytope "
                      "is not integral); falling back to an asymptotic fit", RuntimeWarning)
        if max(ks) < 30:
            ks = list(range(1, 41))
            samples = [(k,) + _signed(cfg, k, weight_sign) for k in ks]
            samples = [(k, d, w, Fraction(w, k * d)) for k, d, w in samples]
    elif max(ks) < 30:
        raise PreconditionError("fit mode needs k_max >= 30")
    coef, stab = _fit(samples, _period(cfg.hat))
    return ExpansionResult(float(coef[0]), float(coef[1]), float(coef[2]), samples, "fit",
                           stability=stab)


# ---------------------------------------------------------------------------
# Algebraic ray


def algebraic_ray(cfg: ToricDegeneration, t: float) -> LogSumExpPotential:
    """The normalised potential ``h_{0,t}`` induced by the C*-action.

    Sections over the same base point ``x`` merge into the coefficient
    ``c_x(t) = sum_{j=0}^{top(x)} e^{2tj}``.  The result is divided by the
    coefficient of a reference column (the tallest, lexicographically first)
    and shifted by ``-t f(x_ref)``, so the constant section dominates as
    ``y -> -inf`` exactly as in the one-dimensional worked example.
    """
    if t < 0:
        raise PreconditionError("algebraic rays run forward: t must be >= 0")
    base = lattice_points(cfg.base, 1)
    tops = [cfg.column_top(x) for x in base]
    logc = np.array([logsumexp(2.0 * t * np.arange(top + 1)) for top in tops])
    ref = max(range(len(base)), key=lambda i: (tops[i], [-v for v in base[i]]))
    shift = -0.5 * logc[ref] - t * float(cfg.direction.value_exact(base[ref]))
    return LogSumExpPotential(np.array(base, dtype=float), logc, shift, cfg.base)


def algebraic_ray_potential(cfg: ToricDegeneration, t: float, y) -> np.ndarray:
    return algebraic_ray(cfg, t).value(np.asarray(y, dtype=float))


@dataclass
class PositivityReport:
    ok: bool
    min_eigenvalue: float
    argmin: np.ndarray
    failures: list


def check_fs_positivity(cfg: ToricDegeneration, t: float, samples) -> PositivityReport:
    """Smallest eigenvalue of ``Hess_y h_{0,t}`` over the samples."""
    h = algebraic_ray(cfg, t)
    y = np.asarray(samples, dtype=float).reshape(-1, cfg.dim)
    lam = np.linalg.eigvalsh(h.hessian(y))[:, 0]
    i = int(np.argmin(lam))
    failures = [y[j] for j in np.nonzero(~(lam > 0))[0]]
    return PositivityReport(not failures, float(lam[i]), y[i], failures)
