"""Rational Delzant polytopes, piecewise-linear functions and integration.

A polytope is stored by its facet inequalities ``<v_i, x> + lam_i >= 0`` with
primitive integer normals ``v_i`` and rational offsets.  Everything
combinatorial (vertices, lattice points, volumes, integrals of PL functions)
is exact; only the quadrature helpers work in floating point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from . import _exact as ex
from .errors import EvaluationError, PolytopeError, UnsupportedInputError


@dataclass(frozen=True)
class Facet:
    normal: tuple[int, ...]
    offset: Fraction

    def value(self, point) -> Fraction:
        return ex.dot(self.normal, point) + self.offset


@dataclass(frozen=True)
class Polytope:
    """``P = {x : <v_i, x> + lam_i >= 0}``, bounded with nonempty interior."""

    dim: int
    facets: tuple[Facet, ...]

    def __post_init__(self):
        facets = tuple(
            f if isinstance(f, Facet) else Facet(tuple(f[0]), ex.frac(f[1]))
            for f in self.facets
        )
        object.__setattr__(self, "facets", facets)
        if self.dim < 1:
            raise PolytopeError("dimension must be positive")
        for f in facets:
            if len(f.normal) != self.dim:
                raise PolytopeError(f"normal {f.normal} has wrong length for dim {self.dim}")
            if any(not isinstance(v, (int, np.integer)) for v in f.normal):
                raise PolytopeError(f"normal {f.normal} is not integral")
            g = 0
            for v in f.normal:
                g = math.gcd(g, abs(int(v)))
            if g != 1:
                raise PolytopeError(f"normal {f.normal} is not primitive (gcd {g})")
        self._check_bounded_nonempty()

    # -- construction -----------------------------------------------------

    @classmethod
    def from_inequalities(cls, normals, offsets) -> "Polytope":
        """Build from rational rows ``<a, x> + b >= 0``; rows are rescaled to
        primitive integer normals."""
        facets = []
        for a, b in zip(normals, offsets):
            w, s = ex.primitive_integer(a)
            facets.append(Facet(w, ex.frac(b) * s))
        return cls(len(facets[0].normal), tuple(facets))

    @classmethod
    def interval(cls, a, b) -> "Polytope":
        a, b = ex.frac(a), ex.frac(b)
        return cls(1, (Facet((1,), -a), Facet((-1,), b)))

    @classmethod
    def box(cls, lo: Sequence, hi: Sequence) -> "Polytope":
        n = len(lo)
        facets = []
        for i in range(n):
            e = tuple(1 if j == i else 0 for j in range(n))
            facets.append(Facet(e, -ex.frac(lo[i])))
            facets.append(Facet(tuple(-v for v in e), ex.frac(hi[i])))
        return cls(n, tuple(facets))

    def _check_bounded_nonempty(self):
        V = np.array([f.normal for f in self.facets], dtype=float)
        lam = np.array([float(f.offset) for f in self.facets])
        norms = np.linalg.norm(V, axis=1)
        # Chebyshev centre: maximise r subject to <v,x> + lam >= r |v|
        A = np.hstack([-V, norms[:, None]])
        c = np.zeros(self.dim + 1)
        c[-1] = -1.0
        bounds = [(None, None)] * self.dim + [(None, 1.0)]
        res = linprog(c, A_ub=A, b_ub=lam, bounds=bounds, method="highs")
        if res.status == 2:
            raise PolytopeError("polytope is empty (infeasible facet system)")
        if res.status != 0 or -res.fun <= 1e-12:
            raise PolytopeError("polytope has empty interior")
        for j in range(self.dim):
            for sgn in (1.0, -1.0):
                cj = np.zeros(self.dim)
                cj[j] = -sgn
                r = linprog(cj, A_ub=-V, b_ub=lam, bounds=[(None, None)] * self.dim,
                            method="highs")
                if r.status == 3:
                    raise PolytopeError(f"polytope is unbounded in direction {'+' if sgn > 0 else '-'}e{j}")

    # -- exact geometry ---------------------------------------------------

    @cached_property
    def normals(self) -> np.ndarray:
        return np.array([f.normal for f in self.facets], dtype=float)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.array([float(f.offset) for f in self.facets])

    @cached_property
    def vertices(self) -> tuple[tuple[Fraction, ...], ...]:
        found = set()
        for combo in itertools.combinations(range(len(self.facets)), self.dim):
            rows = [self.facets[i].normal for i in combo]
            rhs = [-self.facets[i].offset for i in combo]
            sol = ex.solve(rows, rhs)
            if sol is not None and self.contains(sol):
                found.add(sol)
        return tuple(sorted(found))

    def contains(self, point) -> bool:
        return all(f.value(point) >= 0 for f in self.facets)

    def tight_facets(self, point) -> list[int]:
        return [i for i, f in enumerate(self.facets) if f.value(point) == 0]

    @property
    def is_integral(self) -> bool:
        return all(v.denominator == 1 for p in self.vertices for v in p)

    def dilate(self, k) -> "Polytope":
        k = ex.frac(k)
        return Polytope(self.dim, tuple(Facet(f.normal, f.offset * k) for f in self.facets))

    def transform(self, U, w=None) -> "Polytope":
        """Image under the lattice map ``x -> U x + w`` (``U`` unimodular)."""
        U = [[ex.frac(v) for v in row] for row in U]
        w = [Fraction(0)] * self.dim if w is None else [ex.frac(v) for v in w]
        if abs(ex.det(U)) != 1 or any(v.denominator != 1 for row in U for v in row):
            raise PolytopeError("transform must be an integer matrix with determinant +-1")
        Uinv = _inverse(U)
        facets = []
        for f in self.facets:
            # <v, U^{-1}(x - w)> = <U^{-T} v, x> - <U^{-T} v, w>
            nv = [sum(Uinv[i][j] * f.normal[i] for i in range(self.dim)) for j in range(self.dim)]
            facets.append(Facet(tuple(int(v) for v in nv), f.offset - ex.dot(nv, w)))
        return Polytope(self.dim, tuple(facets))

    def irredundant(self) -> "Polytope":
        """Drop inequalities that do not support a codimension-one face."""
        verts = self.vertices
        keep = []
        for f in self.facets:
            on = [v for v in verts if f.value(v) == 0]
            if ex.affine_rank(on) == self.dim - 1:
                keep.append(f)
        # identical facets can appear twice (e.g. duplicate PL pieces)
        uniq = list(dict.fromkeys(keep))
        return Polytope(self.dim, tuple(uniq))

    def bounding_box(self) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
        vs = self.vertices
        lo = tuple(min(v[i] for v in vs) for i in range(self.dim))
        hi = tuple(max(v[i] for v in vs) for i in range(self.dim))
        return lo, hi

    @cached_property
    def diameter(self) -> float:
        vs = np.array(self.vertices, dtype=float)
        d = vs[:, None, :] - vs[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    def polygon(self) -> list[tuple[Fraction, Fraction]]:
        """Vertices in counter-clockwise order (``dim == 2``)."""
        if self.dim != 2:
            raise UnsupportedInputError("polygon() needs dim 2")
        vs = self.vertices
        cx = sum(v[0] for v in vs) / len(vs)
        cy = sum(v[1] for v in vs) / len(vs)
        return sorted(vs, key=lambda v: math.atan2(float(v[1] - cy), float(v[0] - cx)))

    def edges(self) -> list[tuple[int, tuple, tuple]]:
        """``(facet index, p, q)`` for each edge of a polygon."""
        if self.dim != 2:
            raise UnsupportedInputError("edges() needs dim 2")
        out = []
        for i, f in enumerate(self.facets):
            on = sorted(v for v in self.vertices if f.value(v) == 0)
            if len(on) >= 2:
                out.append((i, on[0], on[-1]))
        return out

    def volume(self) -> Fraction:
        if self.dim == 1:
            (a,), (b,) = self.bounding_box()
            return b - a
        if self.dim == 2:
            return ex.polygon_area_centroid(self.polygon())[0]
        raise UnsupportedInputError("exact volume implemented for dim <= 2")

    def boundary_volume(self) -> Fraction:
        """Lattice-normalised measure of the boundary, ``Vol_sigma(dP)``."""
        if self.dim == 1:
            return Fraction(len(self.vertices))
        if self.dim == 2:
            return sum((lattice_length(p, q) for _, p, q in self.edges()), Fraction(0))
        raise UnsupportedInputError("boundary measure implemented for dim <= 2")

    # -- float evaluation -------------------------------------------------

    def ell(self, x) -> np.ndarray:
        """Facet values ``l_i(x)`` with shape ``x.shape[:-1] + (m,)``."""
        x = np.asarray(x, dtype=float)
        return x @ self.normals.T + self.offsets

    def facet_distance(self, x) -> np.ndarray:
        """Euclidean distance to the nearest facet hyperplane (negative outside)."""
        return (self.ell(x) / np.linalg.norm(self.normals, axis=1)).min(axis=-1)

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        return {"dim": self.dim,
                "facets": [{"normal": list(f.normal), "offset": ex.frac_str(f.offset)}
                           for f in self.facets]}

    @classmethod
    def from_dict(cls, d: dict) -> "Polytope":
        facets = tuple(Facet(tuple(int(v) for v in f["normal"]), ex.frac(f["offset"]))
                       for f in d["facets"])
        return cls(int(d["dim"]), facets)


def _inverse(U):
    n = len(U)
    cols = [ex.solve(U, [Fraction(int(i == j)) for i in range(n)]) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def lattice_length(p, q) -> Fraction:
    d = [b - a for a, b in zip(p, q)]
    if all(v == 0 for v in d):
        return Fraction(0)
    _, s = ex.primitive_integer(d)
    return 1 / s


# ---------------------------------------------------------------------------
# Delzant condition and lattice points


@dataclass
class DelzantReport:
    is_delzant: bool
    failing_vertices: list = field(default_factory=list)  # (vertex, normal matrix)


def check_delzant(P: Polytope) -> DelzantReport:
    failing = []
    for v in P.vertices:
        idx = P.tight_facets(v)
        mat = [P.facets[i].normal for i in idx]
        if len(idx) != P.dim or abs(ex.det(mat)) != 1:
            failing.append((v, mat))
    return DelzantReport(not failing, failing)


def lattice_points(P: Polytope, k: int = 1) -> list[tuple[int, ...]]:
    """Integer points of ``kP`` in lexicographic order."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    lo, hi = P.bounding_box()
    ranges = [range(math.ceil(k * a), math.floor(k * b) + 1) for a, b in zip(lo, hi)]
    if any(len(r) == 0 for r in ranges):
        return []
    V = np.array([f.normal for f in P.facets], dtype=np.int64)
    thr = np.array([math.ceil(-k * f.offset) for f in P.facets], dtype=np.int64)
    grid = np.array(list(itertools.product(*ranges)), dtype=np.int64)
    mask = (grid @ V.T >= thr).all(axis=1)
    return [tuple(int(v) for v in row) for row in grid[mask]]


# ---------------------------------------------------------------------------
# Piecewise-linear convex functions


@dataclass(frozen=True)
class PiecewiseLinearFn:
    """``f(x) = max_j (<a_j, x> + c_j)`` with rational data."""

    pieces: tuple[tuple[tuple[Fraction, ...], Fraction], ...]

    def __post_init__(self):
        pieces = tuple((tuple(ex.frac(v) for v in a), ex.frac(c)) for a, c in self.pieces)
        if not pieces:
            raise ValueError("need at least one affine piece")
        if len({len(a) for a, _ in pieces}) != 1:
            raise ValueError("pieces have inconsistent dimensions")
        object.__setattr__(self, "pieces", pieces)

    @classmethod
    def affine(cls, a, c=0) -> "PiecewiseLinearFn":
        return cls(((tuple(a), c),))

    @classmethod
    def constant(cls, c, dim=1) -> "PiecewiseLinearFn":
        return cls((((0,) * dim, c),))

    @property
    def dim(self) -> int:
        return len(self.pieces[0][0])

    @cached_property
    def _A(self) -> np.ndarray:
        return np.array([[float(v) for v in a] for a, _ in self.pieces])

    @cached_property
    def _c(self) -> np.ndarray:
        return np.array([float(c) for _, c in self.pieces])

    def value_exact(self, point) -> Fraction:
        return max(ex.dot(a, point) + c for a, c in self.pieces)

    def piece_values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x @ self._A.T + self._c

    def active_index(self, x) -> np.ndarray:
        return np.argmax(self.piece_values(x), axis=-1)

    def value(self, x) -> np.ndarray:
        return self.piece_values(x).max(axis=-1)

    def gradient(self, x) -> np.ndarray:
        return self._A[self.active_index(x)]

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape + (self.dim,))

    def __call__(self, x):
        return self.value(x)

    def crease_distance(self, x) -> np.ndarray:
        """Distance from ``x`` to the nearest hyperplane where the active piece
        ties with another piece (``inf`` for a single piece)."""
        vals = self.piece_values(x)
        act = np.argmax(vals, axis=-1)
        top = np.take_along_axis(vals, act[..., None], -1)[..., 0]
        out = np.full(top.shape, np.inf)
        for j in range(len(self.pieces)):
            da = np.linalg.norm(self._A[act] - self._A[j], axis=-1)
            gap = top - vals[..., j]
            with np.errstate(divide="ignore", invalid="ignore"):
                d = np.where(da > 0, gap / np.where(da > 0, da, 1.0), np.inf)
            out = np.minimum(out, d)
        return out

    # -- algebra ----------------------------------------------------------

    def __add__(self, other: "PiecewiseLinearFn") -> "PiecewiseLinearFn":
        pieces = [(tuple(x + y for x, y in zip(a1, a2)), c1 + c2)
                  for (a1, c1), (a2, c2) in itertools.product(self.pieces, other.pieces)]
        return PiecewiseLinearFn(tuple(dict.fromkeys(pieces))).simplified()

    def scale(self, s) -> "PiecewiseLinearFn":
        s = ex.frac(s)
        if s < 0:
            raise ValueError("negative scaling destroys convexity")
        if s == 0:
            return PiecewiseLinearFn.constant(0, self.dim)
        return PiecewiseLinearFn(tuple((tuple(s * v for v in a), s * c) for a, c in self.pieces))

    def add_affine(self, b, m=0) -> "PiecewiseLinearFn":
        return self + PiecewiseLinearFn.affine(b, m)

    def transform(self, U, w=None) -> "PiecewiseLinearFn":
        """``x -> f(U^{-1}(x - w))``, the push-forward along ``x -> U x + w``."""
        U = [[ex.frac(v) for v in row] for row in U]
        w = [Fraction(0)] * self.dim if w is None else [ex.frac(v) for v in w]
        Uinv = _inverse(U)
        pieces = []
        for a, c in self.pieces:
            na = [sum(Uinv[i][j] * a[i] for i in range(self.dim)) for j in range(self.dim)]
            pieces.append((tuple(na), c - ex.dot(na, w)))
        return PiecewiseLinearFn(tuple(pieces))

    def simplified(self) -> "PiecewiseLinearFn":
        """Remove exact duplicates and pieces dominated by another piece."""
        out = []
        for i, (a, c) in enumerate(self.pieces):
            dominated = any(j != i and a2 == a and (c2 > c or (c2 == c and j < i))
                            for j, (a2, c2) in enumerate(self.pieces))
            if not dominated:
                out.append((a, c))
        return PiecewiseLinearFn(tuple(out))

    # -- restriction to a polytope --------------------------------------------

    def cells(self, P: Polytope) -> list[tuple[int, list]]:
        """Maximal regions of ``P`` on which one piece is active.

        dim 1: ``(j, [lo, hi])``; dim 2: ``(j, polygon vertex list)``.
        Only cells with nonempty interior are returned.
        """
        if P.dim != self.dim:
            raise ValueError("dimension mismatch")
        if self.dim == 1:
            (a,), (b,) = P.bounding_box()
            env = ex.upper_envelope([(c, al[0]) for al, c in self.pieces], a, b)
            return [(j, [s, e]) for s, e, j in env if e > s]
        if self.dim == 2:
            out = []
            for j, (aj, cj) in enumerate(self.pieces):
                poly = list(P.polygon())
                for i, (ai, ci) in enumerate(self.pieces):
                    if i == j:
                        continue
                    poly = ex.clip_polygon(poly, [x - y for x, y in zip(aj, ai)], cj - ci)
                    if len(poly) < 3:
                        break
                if len(poly) >= 3 and ex.polygon_area_centroid(poly)[0] > 0:
                    out.append((j, poly))
            return out
        raise UnsupportedInputError("cells() implemented for dim <= 2")

    def creases(self, P: Polytope) -> list[tuple[Fraction, int, int]]:
        """Interior break points ``(x_c, left piece, right piece)`` (dim 1)."""
        if self.dim != 1:
            raise UnsupportedInputError("creases() lists points only in dim 1")
        cells = self.cells(P)
        return [(cells[i][1][1], cells[i][0], cells[i + 1][0]) for i in range(len(cells) - 1)]

    def active_pieces(self, P: Polytope) -> list[int]:
        return sorted({j for j, _ in self.cells(P)})

    def max_on(self, P: Polytope) -> Fraction:
        return max(self.value_exact(v) for v in P.vertices)

    def min_on(self, P: Polytope) -> Fraction:
        pts = []
        for _, cell in self.cells(P):
            pts.extend([(v,) for v in cell] if self.dim == 1 else cell)
        return min(self.value_exact(p) for p in pts)

    def is_affine_on(self, P: Polytope) -> bool:
        return len(self.cells(P)) == 1

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        return {"pieces": [{"a": [ex.frac_str(v) for v in a], "c": ex.frac_str(c)}
                           for a, c in self.pieces]}

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseLinearFn":
        return cls(tuple((tuple(ex.frac(v) for v in p["a"]), ex.frac(p["c"]))
                         for p in d["pieces"]))


# ---------------------------------------------------------------------------
# Exact integrals of PL functions


def integrate_pl(P: Polytope, f: PiecewiseLinearFn) -> Fraction:
    """``int_P f dmu`` in exact arithmetic (dim <= 2)."""
    total = Fraction(0)
    for j, cell in f.cells(P):
        a, c = f.pieces[j]
        if P.dim == 1:
            lo, hi = cell
            total += (hi - lo) * (a[0] * (lo + hi) / 2 + c)
        else:
            area, cen = ex.polygon_area_centroid(cell)
            total += area * (ex.dot(a, cen) + c)
    return total


def _pl_on_segment(f: PiecewiseLinearFn, p, q) -> Fraction:
    """Average of ``f`` over the segment ``[p, q]`` (exact)."""
    d = [b - a for a, b in zip(p, q)]
    lines = [(ex.dot(a, p) + c, ex.dot(a, d)) for a, c in f.pieces]
    total = Fraction(0)
    for s0, s1, j in ex.upper_envelope(lines, 0, 1):
        al, be = lines[j]
        total += (s1 - s0) * (al + be * (s0 + s1) / 2)
    return total


def integrate_pl_boundary(P: Polytope, f: PiecewiseLinearFn) -> Fraction:
    """``int_{dP} f dsigma`` in exact arithmetic (dim <= 2)."""
    if P.dim == 1:
        return sum((f.value_exact(v) for v in P.vertices), Fraction(0))
    if P.dim == 2:
        return sum((lattice_length(p, q) * _pl_on_segment(f, p, q) for _, p, q in P.edges()),
                   Fraction(0))
    raise UnsupportedInputError("boundary integrals implemented for dim <= 2")


# ---------------------------------------------------------------------------
# Floating-point quadrature


@dataclass(frozen=True)
class QuadratureRule:
    """Clipped-cell midpoint rule on a lattice-aligned grid.

    Cells have side ``1/resolution``; each node is the centroid of a grid
    cell clipped to ``P`` and carries that piece's volume as its weight.
    ``margin`` is the smallest Euclidean distance from a node to a facet.
    """

    polytope: Polytope
    resolution: int
    nodes: np.ndarray
    weights: np.ndarray
    margin: float

    def refined(self, factor: int = 2) -> "QuadratureRule":
        return quadrature_rule(self.polytope, self.resolution * factor)


def _clip_float(poly: np.ndarray, a: np.ndarray, c: float) -> np.ndarray:
    vals = poly @ a + c
    out = []
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        fp, fq = vals[i], vals[(i + 1) % k]
        if fp >= 0:
            out.append(p)
        if (fp > 0 > fq) or (fp < 0 < fq):
            out.append(p + fp / (fp - fq) * (q - p))
    return np.array(out) if out else np.zeros((0, 2))


def _area_centroid_float(poly: np.ndarray):
    x, y = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    cross = x * y1 - x1 * y
    a2 = cross.sum()
    if abs(a2) < 1e-300:
        return 0.0, poly.mean(axis=0)
    return abs(a2) / 2, np.array([((x + x1) * cross).sum(), ((y + y1) * cross).sum()]) / (3 * a2)


def quadrature_rule(P: Polytope, resolution: int = 64) -> QuadratureRule:
    h = 1.0 / resolution
    lo, hi = P.bounding_box()
    if P.dim == 1:
        a, b = float(lo[0]), float(hi[0])
        n = max(1, int(round((b - a) * resolution)))
        edges = np.linspace(a, b, n + 1)
        nodes = (0.5 * (edges[:-1] + edges[1:]))[:, None]
        weights = np.diff(edges)
    elif P.dim == 2:
        x0 = [math.floor(float(v)) for v in lo]
        nx = [int(math.ceil((float(hi[i]) - x0[i]) * resolution)) for i in range(2)]
        xs = x0[0] + h * np.arange(nx[0] + 1)
        ys = x0[1] + h * np.arange(nx[1] + 1)
        X0, Y0 = np.meshgrid(xs[:-1], ys[:-1], indexing="ij")
        corners = np.stack([np.stack([X0, Y0], -1), np.stack([X0 + h, Y0], -1),
                            np.stack([X0 + h, Y0 + h], -1), np.stack([X0, Y0 + h], -1)], axis=2)
        ell = P.ell(corners)  # (nx, ny, 4, m)
        inside_all = (ell >= 0).all(axis=(2, 3))
        outside_some = (ell <= 0).all(axis=2).any(axis=-1)
        nodes_l = [np.stack([X0 + h / 2, Y0 + h / 2], -1)[inside_all]]
        weights_l = [np.full(int(inside_all.sum()), h * h)]
        cut = ~inside_all & ~outside_some
        V, lam = P.normals, P.offsets
        extra_n, extra_w = [], []
        for cell in corners[cut]:
            poly = cell
            for a, c in zip(V, lam):
                poly = _clip_float(poly, a, c)
                if len(poly) < 3:
                    break
            if len(poly) >= 3:
                area, cen = _area_centroid_float(poly)
                if area > 1e-14 * h * h:
                    extra_n.append(cen)
                    extra_w.append(area)
        if extra_n:
            nodes_l.append(np.array(extra_n))
            weights_l.append(np.array(extra_w))
        nodes = np.concatenate(nodes_l)
        weights = np.concatenate(weights_l)
        order = np.lexsort(nodes.T[::-1])
        nodes, weights = nodes[order], weights[order]
    else:
        raise UnsupportedInputError("quadrature implemented for dim <= 2")
    margin = float(P.facet_distance(nodes).min())
    return QuadratureRule(P, resolution, nodes, weights, margin)


@dataclass(frozen=True)
class QuadratureEstimate:
    value: float
    error: float
    coarse: float
    resolution: int

    def __float__(self):
        return self.value


def _eval_field(g: Callable, nodes: np.ndarray) -> np.ndarray:
    vals = np.asarray(g(nodes), dtype=float).reshape(len(nodes))
    bad = ~np.isfinite(vals)
    if bad.any():
        node = nodes[np.argmax(bad)]
        raise EvaluationError(f"integrand is not finite at node {node.tolist()}", node=node)
    return vals


def integrate_interior(P: Polytope, g: Callable, rule: QuadratureRule | None = None,
                       resolution: int = 64) -> QuadratureEstimate:
    """``int_P g dmu`` on ``rule`` and its refinement; ``error`` is their gap.

    ``g`` maps an ``(N, n)`` array of points to ``N`` values.
    """
    rule = rule or quadrature_rule(P, resolution)
    fine = rule.refined()
    coarse_v = float(_eval_field(g, rule.nodes) @ rule.weights)
    fine_v = float(_eval_field(g, fine.nodes) @ fine.weights)
    return QuadratureEstimate(fine_v, abs(fine_v - coarse_v), coarse_v, fine.resolution)


def integrate_boundary(P: Polytope, g: Callable, segments: int = 64) -> float:
    """``int_{dP} g dsigma`` with the lattice-normalised facet measure.

    In dim 1 each endpoint is a unit atom; in dim 2 each edge carries its
    lattice length, integrated by composite 5-point Gauss-Legendre.
    """
    if not check_delzant(P).is_delzant:
        raise UnsupportedInputError("boundary measure requires a Delzant polytope")
    if P.dim == 1:
        pts = np.array(P.vertices, dtype=float)
        return float(_eval_field(g, pts).sum())
    if P.dim == 2:
        gl_x, gl_w = np.polynomial.legendre.leggauss(5)
        s = ((np.arange(segments)[:, None] + (gl_x[None, :] + 1) / 2) / segments).ravel()
        w = np.tile(gl_w / 2, segments) / segments
        total = 0.0
        for _, p, q in P.edges():
            p_f, q_f = np.array(p, dtype=float), np.array(q, dtype=float)
            pts = p_f + s[:, None] * (q_f - p_f)
            total += float(lattice_length(p, q)) * float(_eval_field(g, pts) @ w)
        return total
    raise UnsupportedInputError("boundary integrals implemented for dim <= 2")
