"""Symplectic potentials on P, complex potentials on R^n and Legendre duality.

Naming: ``u`` is a symplectic potential on the polytope, ``h`` the complex
(log-coordinate) potential and ``f`` a piecewise-linear degeneration
direction.  The two potentials are related by ``u(x) + h(y) = <x, y>`` at
``x = grad h(y)``.

All fields take arrays of shape ``(..., n)`` and return values of shape
``(...)``, gradients ``(..., n)`` and Hessians ``(..., n, n)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline, RectBivariateSpline
from scipy.special import logsumexp, softmax

from .errors import ConvexityError, DomainError, UnsupportedInputError
from .polytope import PiecewiseLinearFn, Polytope, check_delzant, quadrature_rule

_NEWTON_ITERS = 100


def _as_points(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != n:
        raise ValueError(f"expected points with last axis {n}, got shape {x.shape}")
    return x


# ---------------------------------------------------------------------------
# Smooth fields used as corrections


class QuadraticField:
    """``q(x) = 1/2 x^T Q x + <b, x> + c``."""

    singular_boundary = False

    def __init__(self, Q, b=None, c=0.0):
        self.Q = np.atleast_2d(np.asarray(Q, dtype=float))
        n = self.Q.shape[0]
        self.b = np.zeros(n) if b is None else np.asarray(b, dtype=float).reshape(n)
        self.c = float(c)

    @property
    def dim(self):
        return self.Q.shape[0]

    def value(self, x):
        x = _as_points(x, self.dim)
        return 0.5 * np.einsum("...i,ij,...j->...", x, self.Q, x) + x @ self.b + self.c

    def gradient(self, x):
        x = _as_points(x, self.dim)
        return x @ self.Q.T + self.b

    def hessian(self, x):
        x = _as_points(x, self.dim)
        return np.broadcast_to(self.Q, x.shape[:-1] + self.Q.shape).copy()

    def to_dict(self):
        return {"type": "quadratic", "Q": self.Q.tolist(), "b": self.b.tolist(), "c": self.c}


class ClosedFormField:
    """A field given by three callables (not serialisable)."""

    singular_boundary = False

    def __init__(self, dim: int, value: Callable, gradient: Callable, hessian: Callable,
                 name: str = "closed_form"):
        self.dim, self._v, self._g, self._h, self.name = dim, value, gradient, hessian, name

    def value(self, x):
        return np.asarray(self._v(_as_points(x, self.dim)), dtype=float)

    def gradient(self, x):
        return np.asarray(self._g(_as_points(x, self.dim)), dtype=float)

    def hessian(self, x):
        return np.asarray(self._h(_as_points(x, self.dim)), dtype=float)


class SumField:
    """``sum_k coef_k * field_k``."""

    def __init__(self, terms: Sequence[tuple[float, object]]):
        self.terms = tuple((float(c), f) for c, f in terms if c != 0)
        self.dim = terms[0][1].dim
        self.singular_boundary = any(f.singular_boundary for _, f in self.terms)

    def value(self, x):
        x = _as_points(x, self.dim)
        return sum((c * f.value(x) for c, f in self.terms), np.zeros(x.shape[:-1]))

    def gradient(self, x):
        x = _as_points(x, self.dim)
        return sum((c * f.gradient(x) for c, f in self.terms), np.zeros(x.shape))

    def hessian(self, x):
        x = _as_points(x, self.dim)
        return sum((c * f.hessian(x) for c, f in self.terms),
                   np.zeros(x.shape + (self.dim,)))


class SplineField:
    """Grid-backed correction: cubic spline (dim 1) or bicubic spline (dim 2).

    Values at the grid nodes are reproduced exactly.
    """

    singular_boundary = False

    def __init__(self, grid: Sequence[np.ndarray], values: np.ndarray):
        self.grid = [np.asarray(g, dtype=float) for g in grid]
        self.values = np.asarray(values, dtype=float)
        self.dim = len(self.grid)
        if self.dim == 1:
            self._s = CubicSpline(self.grid[0], self.values)
        elif self.dim == 2:
            self._s = RectBivariateSpline(self.grid[0], self.grid[1], self.values, kx=3, ky=3, s=0)
        else:
            raise UnsupportedInputError("spline corrections need dim 1 or 2")

    def _eval(self, x, d):
        x = _as_points(x, self.dim)
        if self.dim == 1:
            return self._s(x[..., 0], d[0])
        flat = x.reshape(-1, 2)
        out = self._s.ev(flat[:, 0], flat[:, 1], dx=d[0], dy=d[1])
        return out.reshape(x.shape[:-1])

    def value(self, x):
        return self._eval(x, (0, 0))

    def gradient(self, x):
        if self.dim == 1:
            return self._eval(x, (1,))[..., None]
        return np.stack([self._eval(x, (1, 0)), self._eval(x, (0, 1))], -1)

    def hessian(self, x):
        if self.dim == 1:
            return self._eval(x, (2,))[..., None, None]
        xx, xy, yy = self._eval(x, (2, 0)), self._eval(x, (1, 1)), self._eval(x, (0, 2))
        return np.stack([np.stack([xx, xy], -1), np.stack([xy, yy], -1)], -2)

    def to_dict(self):
        return {"type": "grid", "grid": [g.tolist() for g in self.grid],
                "values": self.values.tolist()}


class GuilleminField:
    """``1/2 sum_i l_i log l_i`` as a field (raises outside the open polytope)."""

    singular_boundary = True

    def __init__(self, P: Polytope):
        self.P = P
        self.dim = P.dim

    def _ell(self, x):
        x = _as_points(x, self.dim)
        ell = self.P.ell(x)
        if np.any(ell <= 0):
            bad = x[np.any(ell <= 0, axis=-1)][0] if x.ndim > 1 else x
            raise DomainError(f"point {np.atleast_1d(bad).tolist()} is not in the open polytope")
        return x, ell

    def value(self, x):
        _, ell = self._ell(x)
        return 0.5 * (ell * np.log(ell)).sum(-1)

    def gradient(self, x):
        _, ell = self._ell(x)
        return 0.5 * (np.log(ell) + 1.0) @ self.P.normals

    def hessian(self, x):
        _, ell = self._ell(x)
        V = self.P.normals
        return 0.5 * np.einsum("...k,ki,kj->...ij", 1.0 / ell, V, V)


# ---------------------------------------------------------------------------
# Complex potentials


class ComplexPotential:
    """Convex ``h`` on R^n with ``grad h`` ranging in the polytope."""

    polytope: Polytope
    dim: int

    def __call__(self, y):
        return self.value(y)

    def value(self, y):  # pragma: no cover - interface
        raise NotImplementedError

    def gradient(self, y):  # pragma: no cover - interface
        raise NotImplementedError

    def hessian(self, y):  # pragma: no cover - interface
        raise NotImplementedError

    def shifted(self, a) -> "ComplexPotential":
        return ShiftedPotential(self, np.asarray(a, dtype=float).reshape(self.dim))


class ShiftedPotential(ComplexPotential):
    """``y -> h(y - a)``, the dual of ``u + <a, x>``."""

    def __init__(self, base: ComplexPotential, a: np.ndarray):
        self.base, self.a = base, a
        self.polytope, self.dim = base.polytope, base.dim

    def value(self, y):
        return self.base.value(_as_points(y, self.dim) - self.a)

    def gradient(self, y):
        return self.base.gradient(_as_points(y, self.dim) - self.a)

    def hessian(self, y):
        return self.base.hessian(_as_points(y, self.dim) - self.a)


class LogSumExpPotential(ComplexPotential):
    """``h(y) = 1/2 log sum_p exp(2<p, y> + b_p) + shift``.

    The Fubini-Study type potential of a projective embedding; ``grad h`` is
    the softmax mean of the points and ``Hess h`` twice their covariance.
    """

    def __init__(self, points, log_coeffs=None, shift=0.0, polytope: Polytope | None = None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        self.points = pts
        self.dim = pts.shape[1]
        self.log_coeffs = (np.zeros(len(pts)) if log_coeffs is None
                           else np.asarray(log_coeffs, dtype=float).reshape(len(pts)))
        self.shift = float(shift)
        self.polytope = polytope

    def _logits(self, y):
        y = _as_points(y, self.dim)
        return 2.0 * y @ self.points.T + self.log_coeffs

    def value(self, y):
        return 0.5 * logsumexp(self._logits(y), axis=-1) + self.shift

    def weights(self, y):
        return softmax(self._logits(y), axis=-1)

    def gradient(self, y):
        return self.weights(y) @ self.points

    def hessian(self, y):
        # centre on the dominant point: when one weight is ~1 the covariance
        # is tiny and E[p p^T] - E[p] E[p]^T would cancel catastrophically
        w = self.weights(y)
        ref = self.points[np.argmax(w, axis=-1)]
        d = self.points - ref[..., None, :]
        m = np.einsum("...k,...ki->...i", w, d)
        second = np.einsum("...k,...ki,...kj->...ij", w, d, d)
        return 2.0 * (second - m[..., :, None] * m[..., None, :])

    def to_dict(self):
        return {"type": "lse", "points": self.points.tolist(),
                "log_coeffs": self.log_coeffs.tolist(), "shift": self.shift}


class LegendreDualField:
    """Symplectic field ``u = h*`` for a smooth, strictly convex ``h``.

    ``y(x)`` solves ``grad h(y) = x`` by damped Newton.  The gradient blows up
    at the boundary of the moment polytope, so the field is flagged singular.
    """

    singular_boundary = True

    def __init__(self, h: ComplexPotential, tol: float = 1e-14):
        self.h = h
        self.dim = h.dim
        self.tol = tol

    def solve_y(self, x) -> np.ndarray:
        x = _as_points(x, self.dim)
        P = self.h.polytope
        if P is not None and np.any(P.ell(x) <= 0):
            raise DomainError("point outside the open moment polytope")
        if self.dim == 1:
            return _invert_monotone_1d(lambda y: self.h.gradient(y)[..., 0],
                                       lambda y: self.h.hessian(y)[..., 0, 0],
                                       x[..., 0], self.tol)[..., None]
        return _newton_gradient_inverse(self.h, x, P, self.tol)

    def dual_at(self, target):
        """``(x, u(x), u''(x))`` for ``u'(x) = target`` (dim 1), read off ``h``."""
        y = _as_points(target, 1)
        x = self.h.gradient(y)[..., 0]
        with np.errstate(divide="ignore"):  # h'' underflows far out: u'' = inf
            upp = 1.0 / self.h.hessian(y)[..., 0, 0]
        return x, x * y[..., 0] - self.h.value(y), upp

    def value(self, x):
        x = _as_points(x, self.dim)
        y = self.solve_y(x)
        return (x * y).sum(-1) - self.h.value(y)

    def gradient(self, x):
        return self.solve_y(x)

    def hessian(self, x):
        return np.linalg.inv(self.h.hessian(self.solve_y(x)))


def _invert_monotone_1d(g, dg, target, tol, lo=None, hi=None):
    """Solve ``g(y) = target`` for increasing ``g`` (vectorised, safeguarded).

    Newton steps are kept inside a shrinking bracket and replaced by
    bisection when they leave it; converged entries drop out of the loop.
    """
    target = np.asarray(target, dtype=float)
    shape = target.shape
    t = target.ravel()
    if lo is None:
        lo = np.full_like(t, -1.0)
        hi = np.full_like(t, 1.0)
        for _ in range(200):
            m = g(lo) > t
            if not m.any():
                break
            lo = np.where(m, 2 * lo - 1, lo)
        for _ in range(200):
            m = g(hi) < t
            if not m.any():
                break
            hi = np.where(m, 2 * hi + 1, hi)
    else:
        lo = np.broadcast_to(np.asarray(lo, dtype=float), t.shape).copy()
        hi = np.broadcast_to(np.asarray(hi, dtype=float), t.shape).copy()
    y = 0.5 * (lo + hi)
    width = hi - lo
    rprev = np.full_like(t, np.inf)
    act = np.arange(len(t))
    for _ in range(_NEWTON_ITERS):
        if len(act) == 0:
            break
        ya, la, ha, ta = y[act], lo[act], hi[act], t[act]
        r = g(ya) - ta
        la = np.where(r < 0, ya, la)
        ha = np.where(r > 0, ya, ha)
        d = dg(ya)
        with np.errstate(divide="ignore", invalid="ignore"):
            y_new = ya - r / d
        # bisect when Newton leaves the bracket or the bracket failed to halve
        # (Newton can ping-pong across a steep sigmoid)
        slow = ((ha - la) > 0.5 * width[act]) & (np.abs(r) > 0.5 * rprev[act])
        width[act] = ha - la
        rprev[act] = np.abs(r)
        bad = ~((y_new > la) & (y_new < ha)) | ~np.isfinite(y_new) | slow
        y_new = np.where(bad, 0.5 * (la + ha), y_new)
        y_new = np.where(r == 0, ya, y_new)
        # a tiny Newton step alone is not enough where g' is huge
        small = ((np.abs(y_new - ya) <= tol * (1 + np.abs(ya))) &
                 (np.abs(r) <= 1e-10 * (1 + np.abs(ta))))
        done = small | (r == 0) | (ha - la <= 4 * np.spacing(np.abs(ya) + 1))
        y[act], lo[act], hi[act] = y_new, la, ha
        act = act[~done]
    return y.reshape(shape)


def _newton_gradient_inverse(h: ComplexPotential, x: np.ndarray, P: Polytope | None, tol):
    """Minimise ``h(y) - <x, y>`` by Newton with backtracking (vectorised)."""
    shape = x.shape
    X = x.reshape(-1, shape[-1])
    if P is not None:
        y = 0.5 * (np.log(P.ell(X)) + 1.0) @ P.normals  # Guillemin gradient
    else:
        y = np.zeros_like(X)
    for _ in range(_NEWTON_ITERS):
        g = h.gradient(y) - X
        Hm = h.hessian(y)
        step = np.linalg.solve(Hm, g[..., None])[..., 0]
        obj = h.value(y) - (X * y).sum(-1)
        s = np.ones(len(X))
        for _ in range(40):
            y_try = y - s[:, None] * step
            ok = h.value(y_try) - (X * y_try).sum(-1) <= obj + 1e-15 * (1 + np.abs(obj))
            if ok.all():
                break
            s = np.where(ok, s, 0.5 * s)
        y = y - s[:, None] * step
        if np.abs(step).max() * s.max() < tol * (1 + np.abs(y).max()):
            break
    return y.reshape(shape)


# ---------------------------------------------------------------------------
# Symplectic potentials


@dataclass(frozen=True)
class SymplecticPotential:
    """``u = [Guillemin] + correction + sum_k t_k f_k``."""

    polytope: Polytope
    guillemin: bool = True
    correction: object | None = None
    ray: tuple = ()  # ((PiecewiseLinearFn, t), ...)

    def __post_init__(self):
        ray = tuple((f, float(t)) for f, t in self.ray if float(t) != 0.0)
        for f, t in ray:
            if t < 0:
                raise ValueError("ray coefficients must be non-negative")
            if f.dim != self.polytope.dim:
                raise ValueError("PL direction has the wrong dimension")
        object.__setattr__(self, "ray", ray)

    @property
    def dim(self) -> int:
        return self.polytope.dim

    @property
    def singular_boundary(self) -> bool:
        return self.guillemin or bool(self.correction is not None and
                                      self.correction.singular_boundary)

    @property
    def ray_term(self):
        """``(f, t)`` for a single ray term, ``None`` when absent."""
        if not self.ray:
            return None
        if len(self.ray) > 1:
            raise ValueError("potential carries several ray terms")
        return self.ray[0]

    def with_ray(self, f: PiecewiseLinearFn, t: float) -> "SymplecticPotential":
        if t < 0:
            raise ValueError("rays run forward: t must be >= 0")
        return replace(self, ray=self.ray + ((f, t),))

    def smooth_part(self) -> "SymplecticPotential":
        return replace(self, ray=())

    def _check(self, x):
        x = _as_points(x, self.dim)
        ell = self.polytope.ell(x)
        if self.singular_boundary:
            bad = np.any(ell <= 0, axis=-1)
        else:
            bad = np.any(ell < -1e-12, axis=-1)
        if np.any(bad):
            pt = x[bad][0] if x.ndim > 1 else x
            raise DomainError(f"point {np.atleast_1d(pt).tolist()} is outside the domain of u")
        return x

    def _guillemin(self):
        return GuilleminField(self.polytope)

    def smooth_value(self, x):
        x = self._check(x)
        v = np.zeros(x.shape[:-1])
        if self.guillemin:
            v = v + self._guillemin().value(x)
        if self.correction is not None:
            v = v + self.correction.value(x)
        return v

    def smooth_gradient(self, x):
        x = self._check(x)
        g = np.zeros(x.shape)
        if self.guillemin:
            g = g + self._guillemin().gradient(x)
        if self.correction is not None:
            g = g + self.correction.gradient(x)
        return g

    def smooth_hessian(self, x):
        x = self._check(x)
        H = np.zeros(x.shape + (self.dim,))
        if self.guillemin:
            H = H + self._guillemin().hessian(x)
        if self.correction is not None:
            H = H + self.correction.hessian(x)
        return H

    def ray_value(self, x):
        x = _as_points(x, self.dim)
        return sum((t * f.value(x) for f, t in self.ray), np.zeros(x.shape[:-1]))

    def value(self, x):
        return self.smooth_value(x) + self.ray_value(x)

    def __call__(self, x):
        return self.value(x)

    def gradient(self, x):
        x = _as_points(x, self.dim)
        g = self.smooth_gradient(x)
        for f, t in self.ray:
            g = g + t * f.gradient(x)
        return g

    def hessian(self, x):
        """Hessian off creases (PL terms contribute nothing there)."""
        return self.smooth_hessian(x)

    def crease_distance(self, x) -> np.ndarray:
        x = _as_points(x, self.dim)
        d = np.full(x.shape[:-1], np.inf)
        for f, t in self.ray:
            if t > 0:
                d = np.minimum(d, f.crease_distance(x))
        return d

    def check_convex(self, nodes=None, tol: float = 0.0):
        """Raise ``ConvexityError`` if the smooth Hessian fails to be positive
        definite at some node (default: a coarse quadrature grid)."""
        if nodes is None:
            nodes = quadrature_rule(self.polytope, 16).nodes
            nodes = nodes[self.polytope.facet_distance(nodes) > 1e-9]
        nodes = _as_points(nodes, self.dim)
        ev = np.linalg.eigvalsh(self.smooth_hessian(nodes))
        lam = ev[..., 0]
        if np.any(~np.isfinite(lam)) or np.any(lam <= tol):
            i = int(np.argmin(np.where(np.isfinite(lam), lam, -np.inf)))
            raise ConvexityError(
                f"potential is not convex: Hessian eigenvalue {lam.ravel()[i]:.3g} "
                f"at x = {nodes.reshape(-1, self.dim)[i].tolist()}")

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        d = {"polytope": self.polytope.to_dict(), "guillemin": self.guillemin}
        if self.correction is None:
            d["kind"] = "guillemin" if self.guillemin else "closed_form"
        else:
            corr = _field_to_dict(self.correction)
            d["kind"] = "grid" if corr["type"] == "grid" else "closed_form"
            d["correction"] = corr
        if self.ray:
            d["ray"] = [{"f": f.to_dict(), "t": t} for f, t in self.ray]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SymplecticPotential":
        P = Polytope.from_dict(d["polytope"])
        corr = _field_from_dict(d["correction"], P) if "correction" in d else None
        ray = tuple((PiecewiseLinearFn.from_dict(r["f"]), float(r["t"])) for r in d.get("ray", []))
        return cls(P, bool(d.get("guillemin", d["kind"] == "guillemin")), corr, ray)


def _field_to_dict(fld) -> dict:
    if isinstance(fld, (QuadraticField, SplineField)):
        return fld.to_dict()
    if isinstance(fld, LegendreDualField) and isinstance(fld.h, LogSumExpPotential):
        return {"type": "legendre_dual", "h": fld.h.to_dict()}
    raise UnsupportedInputError(f"cannot serialise correction of type {type(fld).__name__}")


def _field_from_dict(d: dict, P: Polytope):
    kind = d["type"]
    if kind == "quadratic":
        return QuadraticField(d["Q"], d["b"], d["c"])
    if kind == "grid":
        return SplineField(d["grid"], d["values"])
    if kind == "legendre_dual":
        h = d["h"]
        return LegendreDualField(LogSumExpPotential(h["points"], h["log_coeffs"], h["shift"], P))
    raise UnsupportedInputError(f"unknown correction type {kind!r}")


def guillemin_potential(P: Polytope) -> SymplecticPotential:
    """The canonical potential ``1/2 sum_i l_i log l_i`` of a Delzant polytope."""
    if not check_delzant(P).is_delzant:
        raise UnsupportedInputError("Guillemin potential needs a Delzant polytope")
    return SymplecticPotential(P, guillemin=True)


@dataclass
class MetricData:
    G: np.ndarray
    H: np.ndarray


def metric_data(u: SymplecticPotential, x, margin: float = 0.0,
                crease_margin: float | None = None) -> MetricData:
    """``G = Hess u`` and ``H = G^{-1}`` at interior, off-crease points."""
    x = _as_points(x, u.dim)
    if crease_margin is None:
        crease_margin = 1e-3 * u.polytope.diameter
    if np.any(u.polytope.facet_distance(x) <= margin):
        raise DomainError(f"point within {margin} of the boundary")
    if u.ray and np.any(u.crease_distance(x) < crease_margin):
        raise DomainError(f"point within {crease_margin} of a crease")
    G = u.hessian(x)
    G = 0.5 * (G + np.swapaxes(G, -1, -2))
    return MetricData(G, np.linalg.inv(G))


# ---------------------------------------------------------------------------
# Legendre duality


def _ray_structure_1d(u: SymplecticPotential):
    """Breakpoints, slopes and intercepts of the PL part of ``u`` (dim 1)."""
    (a,), (b,) = u.polytope.bounding_box()
    breaks = set()
    for f, t in u.ray:
        breaks.update(float(xc) for xc, _, _ in f.creases(u.polytope))
    edges = [float(a)] + sorted(breaks) + [float(b)]
    sig, cst = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = np.array([[0.5 * (lo + hi)]])
        s = sum((t * float(f.gradient(mid)[0, 0]) for f, t in u.ray), 0.0)
        c = sum((t * float(f.value(mid)[0]) for f, t in u.ray), 0.0) - s * mid[0, 0]
        sig.append(s)
        cst.append(c)
    # merge intervals whose slopes agree (a crease cancelled out)
    keep_e, keep_s, keep_c = [edges[0]], [sig[0]], [cst[0]]
    for i in range(1, len(sig)):
        if sig[i] == keep_s[-1]:
            continue
        keep_e.append(edges[i])
        keep_s.append(sig[i])
        keep_c.append(cst[i])
    keep_e.append(edges[-1])
    return np.array(keep_e), np.array(keep_s), np.array(keep_c)


class Dual1D(ComplexPotential):
    """Legendre dual of a one-dimensional potential ``u = s + PL``.

    Region bookkeeping in ``y`` uses the thresholds
    ``[s'(a)+sig_0, s'(x_1)+sig_0, s'(x_1)+sig_1, ..., s'(b)+sig_m]``:
    odd regions are smooth intervals (root-solve ``s'(x) = y - sig_i``), even
    interior regions are crease segments where ``h`` is linear with slope
    ``x_c``, and the outer regions are boundary points when ``s'`` stays
    finite there.
    """

    def __init__(self, u: SymplecticPotential, tol: float = 1e-14):
        self.u = u
        self.polytope = u.polytope
        self.dim = 1
        self.tol = tol
        self.edges, self.sigma, self.intercept = _ray_structure_1d(u)
        self.smooth = u.smooth_part()
        inner = self.edges[1:-1]
        sp = (self.smooth.smooth_gradient(inner[:, None])[:, 0] if len(inner)
              else np.zeros(0))
        if u.singular_boundary:
            left, right = -np.inf, np.inf
        else:
            left = float(self.smooth.smooth_gradient(np.array([[self.edges[0]]]))[0, 0])
            right = float(self.smooth.smooth_gradient(np.array([[self.edges[-1]]]))[0, 0])
        T = [left + self.sigma[0]]
        for i, s in enumerate(sp):
            T.extend([s + self.sigma[i], s + self.sigma[i + 1]])
        T.append(right + self.sigma[-1])
        self.thresholds = np.array(T)
        self._fast = (not u.guillemin and isinstance(u.correction, LegendreDualField))
        # u = dual(h0) + smooth terms: solve in the h0 variable z, no nested inversion
        self._param = None
        if not u.guillemin and isinstance(u.correction, SumField):
            duals = [(c, f) for c, f in u.correction.terms if isinstance(f, LegendreDualField)]
            if len(duals) == 1 and duals[0][0] == 1.0:
                rest = [(c, f) for c, f in u.correction.terms if f is not duals[0][1]]
                self._param = (duals[0][1].h, rest)

    @property
    def segments(self) -> list[tuple[float, float, float]]:
        """Linear pieces ``(y_lo, y_hi, x_c)`` created by creases of ``f``."""
        T = self.thresholds
        return [(T[2 * i + 1], T[2 * i + 2], self.edges[i + 1])
                for i in range(len(self.edges) - 2)]

    def _solve(self, y):
        y = np.asarray(y, dtype=float)
        region = np.searchsorted(self.thresholds, y, side="left")
        x = np.empty_like(y)
        upp = np.zeros_like(y)  # u'' at the maximiser (0 marks linear parts)
        usm = np.full_like(y, np.nan)  # smooth part of u where the fast path knows it
        m = len(self.edges) - 2
        for r in np.unique(region):
            sel = region == r
            if r == 0:
                x[sel] = self.edges[0]
            elif r == 2 * m + 2:
                x[sel] = self.edges[-1]
            elif r % 2 == 0:
                x[sel] = self.edges[r // 2]
            else:
                i = (r - 1) // 2
                target = y[sel] - self.sigma[i]
                if self._fast:
                    xs, us, upps = self.u.correction.dual_at(target)
                    usm[sel] = us
                elif self._param is not None:
                    xs, us, upps = self._param_solve(target)
                    usm[sel] = us
                else:
                    s = self.smooth
                    xs = _invert_monotone_1d(
                        lambda z: s.smooth_gradient(z[..., None])[..., 0],
                        lambda z: s.smooth_hessian(z[..., None])[..., 0, 0],
                        target, self.tol, lo=self.edges[i], hi=self.edges[i + 1])
                    upps = s.smooth_hessian(xs[..., None])[..., 0, 0]
                x[sel] = xs
                upp[sel] = upps
        return x, upp, usm

    def _param_solve(self, target):
        h0, rest = self._param

        def g(z):
            x = h0.gradient(z[..., None])
            return z + sum(c * f.gradient(x)[..., 0] for c, f in rest)

        def dg(z):
            x = h0.gradient(z[..., None])
            return 1.0 + h0.hessian(z[..., None])[..., 0, 0] * sum(
                c * f.hessian(x)[..., 0, 0] for c, f in rest)

        z = _invert_monotone_1d(g, dg, target, self.tol)
        x = h0.gradient(z[..., None])
        xs = x[..., 0]
        with np.errstate(divide="ignore"):
            upp = 1.0 / h0.hessian(z[..., None])[..., 0, 0]
        upp = upp + sum(c * f.hessian(x)[..., 0, 0] for c, f in rest)
        us = xs * z - h0.value(z[..., None]) + sum(c * f.value(x) for c, f in rest)
        return xs, us, upp

    def value(self, y):
        y = _as_points(y, 1)[..., 0]
        x, _, usm = self._solve(y)
        known = np.isfinite(usm)
        u = np.empty_like(x)
        if np.any(known):
            # x may round onto the boundary far out; u is known there from h
            u[known] = usm[known] + self.u.ray_value(x[known][..., None])
        if np.any(~known):
            u[~known] = self.u.value(x[~known][..., None])
        return x * y - u

    def gradient(self, y):
        y = _as_points(y, 1)[..., 0]
        return self._solve(y)[0][..., None]

    def hessian(self, y):
        y = _as_points(y, 1)[..., 0]
        _, upp, _ = self._solve(y)
        with np.errstate(divide="ignore"):
            hpp = np.where(upp > 0, 1.0 / np.where(upp > 0, upp, 1.0), 0.0)
        return hpp[..., None, None]


class Dual2D(ComplexPotential):
    """Grid-sup Legendre dual in dimension two.

    A coarse sup over clipped-cell centroids is followed by two local
    refinement passes and a Newton polish of ``grad u(x) = y``.
    """

    def __init__(self, u: SymplecticPotential, resolution: int = 24):
        self.u = u
        self.polytope = u.polytope
        self.dim = 2
        rule = quadrature_rule(u.polytope, resolution)
        self.h = 1.0 / resolution
        self.nodes = rule.nodes
        self.uvals = u.value(self.nodes)

    def _argmax(self, y):
        Y = _as_points(y, 2).reshape(-1, 2)
        X = np.empty_like(Y)
        P = self.polytope
        for s in range(0, len(Y), 256):
            blk = Y[s:s + 256]
            X[s:s + 256] = self.nodes[np.argmax(blk @ self.nodes.T - self.uvals, axis=1)]
        offs = np.linspace(-1, 1, 9)
        OX, OY = np.meshgrid(offs, offs, indexing="ij")
        stencil = np.stack([OX.ravel(), OY.ravel()], -1)
        step = self.h
        for _ in range(2):
            cand = X[:, None, :] + step * stencil[None]
            inside = (P.ell(cand) > 0).all(-1)
            vals = np.where(inside, (cand * Y[:, None, :]).sum(-1) -
                            self._safe_u(cand, inside), -np.inf)
            X = cand[np.arange(len(Y)), np.argmax(vals, axis=1)]
            step /= 4
        return self._polish(X, Y).reshape(_as_points(y, 2).shape)

    def _safe_u(self, cand, inside):
        out = np.full(cand.shape[:-1], np.inf)
        out[inside] = self.u.value(cand[inside])
        return out

    def _polish(self, X, Y):
        u, P = self.u, self.polytope
        act0 = [f.active_index(X) for f, _ in u.ray]
        x = X.copy()
        for _ in range(30):
            g = u.gradient(x) - Y
            H = u.hessian(x)
            dx = np.linalg.solve(H, g[..., None])[..., 0]
            x_new = x - dx
            ok = (P.ell(x_new) > 0).all(-1)
            for (f, _), a0 in zip(u.ray, act0):
                ok &= f.active_index(x_new) == a0
            x = np.where(ok[:, None], x_new, x)
            if np.abs(np.where(ok[:, None], dx, 0)).max() < 1e-15:
                break
        # keep whichever of polished / grid point is better
        better = (x * Y).sum(-1) - u.value(x) >= (X * Y).sum(-1) - u.value(X)
        return np.where(better[:, None], x, X)

    def value(self, y):
        y = _as_points(y, 2)
        x = self._argmax(y)
        return (x * y).sum(-1) - self.u.value(x)

    def gradient(self, y):
        return self._argmax(y)

    def hessian(self, y):
        return np.linalg.inv(self.u.hessian(self._argmax(y)))


def legendre_dual(u: SymplecticPotential, check: bool = True, **kw) -> ComplexPotential:
    """``h(y) = sup_{x in P} (<x, y> - u(x))``."""
    if check:
        u.check_convex()
    if u.dim == 1:
        return Dual1D(u, **kw)
    if u.dim == 2:
        return Dual2D(u, **kw)
    raise UnsupportedInputError("Legendre duality implemented for dim <= 2")


def biconjugate(h: ComplexPotential, x) -> np.ndarray:
    """``sup_y (<x, y> - h(y))`` at points ``x`` in the open polytope."""
    x = _as_points(x, h.dim)
    if h.dim == 1:
        xs = x[..., 0]
        y = _invert_monotone_1d(lambda z: h.gradient(z[..., None])[..., 0],
                                lambda z: h.hessian(z[..., None])[..., 0, 0], xs, 1e-15)
        return xs * y - h.value(y[..., None])
    from scipy.optimize import minimize
    out = np.empty(x.shape[:-1])
    flat = x.reshape(-1, h.dim)
    for i, xi in enumerate(flat):
        res = minimize(lambda z: float(h.value(z) - z @ xi), np.zeros(h.dim),
                       jac=lambda z: h.gradient(z) - xi, method="BFGS",
                       options={"gtol": 1e-12})
        out.reshape(-1)[i] = -res.fun
    return out


def legendre_roundtrip_error(u: SymplecticPotential, sample) -> float:
    """``max |u(x) - u**(x)|`` over the sample; raises on non-convex ``u``."""
    h = legendre_dual(u)
    x = _as_points(sample, u.dim)
    return float(np.abs(u.value(x) - biconjugate(h, x)).max())


def complex_table(h: ComplexPotential, ys) -> str:
    """CSV table ``y, h, h', h''`` for a one-dimensional complex potential."""
    ys = np.asarray(ys, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["y", "h", "dh", "d2h"])
    vals = h.value(ys[:, None])
    grads = h.gradient(ys[:, None])[:, 0]
    hess = h.hessian(ys[:, None])[:, 0, 0]
    for row in zip(ys, vals, grads, hess):
        w.writerow([f"{v:.12g}" for v in row])
    return buf.getvalue()
