"""Small exact-rational toolkit: linear solves, clipping, envelopes."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

Vec = tuple  # tuple of Fraction


def frac(value) -> Fraction:
    """Parse ints, Fractions, ``"p/q"`` strings and (exactly) floats."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite rational {value!r}")
        return Fraction(value)
    return Fraction(value)


def frac_str(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def dot(a: Sequence, b: Sequence):
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def det(rows: Sequence[Sequence]) -> Fraction:
    m = [[Fraction(v) for v in row] for row in rows]
    n = len(m)
    sign = 1
    out = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            sign = -sign
        out *= m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] / m[col][col]
            if factor:
                for c in range(col, n):
                    m[r][c] -= factor * m[col][c]
    return sign * out


def solve(rows: Sequence[Sequence], rhs: Sequence):
    """Solve a square system exactly; ``None`` when singular."""
    n = len(rows)
    m = [[Fraction(v) for v in row] + [Fraction(b)] for row, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [v / p for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    return tuple(m[r][n] for r in range(n))


def rank(rows: Sequence[Sequence]) -> int:
    m = [[Fraction(v) for v in row] for row in rows]
    if not m:
        return 0
    ncol = len(m[0])
    r = 0
    for col in range(ncol):
        piv = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                factor = m[i][col] / m[r][col]
                m[i] = [a - factor * b for a, b in zip(m[i], m[r])]
        r += 1
        if r == len(m):
            break
    return r


def affine_rank(points: Sequence[Sequence]) -> int:
    if not points:
        return -1
    base = points[0]
    return rank([[a - b for a, b in zip(p, base)] for p in points[1:]])


def primitive_integer(vec: Iterable) -> tuple[tuple[int, ...], Fraction]:
    """Return ``(w, s)`` with ``w = s * vec`` integral and primitive, ``s > 0``."""
    q = [frac(v) for v in vec]
    lcm = 1
    for v in q:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    ints = [int(v * lcm) for v in q]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    if g == 0:
        raise ValueError("zero vector has no primitive representative")
    return tuple(v // g for v in ints), Fraction(lcm, g)


def clip_polygon(poly: Sequence[Vec], a: Sequence, c) -> list[Vec]:
    """Sutherland-Hodgman clip of a convex polygon by ``<a,x> + c >= 0``."""
    out: list[Vec] = []
    if not poly:
        return out
    vals = [dot(a, p) + c for p in poly]
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        fp, fq = vals[i], vals[(i + 1) % k]
        if fp >= 0:
            out.append(p)
        if (fp > 0 > fq) or (fp < 0 < fq):
            s = fp / (fp - fq)
            out.append(tuple(pi + s * (qi - pi) for pi, qi in zip(p, q)))
    # drop consecutive duplicates created by vertices lying on the line
    dedup: list[Vec] = []
    for p in out:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def polygon_area_centroid(poly: Sequence[Vec]) -> tuple[Fraction, Vec]:
    """Unsigned area and centroid of a convex polygon given in cyclic order."""
    if len(poly) < 3:
        return Fraction(0), tuple(poly[0]) if poly else (Fraction(0), Fraction(0))
    a2 = Fraction(0)
    cx = Fraction(0)
    cy = Fraction(0)
    k = len(poly)
    for i in range(k):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % k]
        cross = x0 * y1 - x1 * y0
        a2 += cross
        cx += (x0 + x1) * cross
        cy += (y0 + y1) * cross
    if a2 == 0:
        return Fraction(0), tuple(poly[0])
    return abs(a2) / 2, (cx / (3 * a2), cy / (3 * a2))


def upper_envelope(lines: Sequence[tuple], s0, s1) -> list[tuple[Fraction, Fraction, int]]:
    """Pieces of ``max_j (alpha_j + beta_j s)`` over ``[s0, s1]``.

    ``lines`` holds ``(alpha, beta)`` pairs. Returns ``(start, end, j)`` with
    ``start < end`` covering the interval; when ``s0 == s1`` a single
    degenerate piece is returned.
    """
    s0, s1 = frac(s0), frac(s1)

    def best_at(s, prefer_slope):
        vals = [al + be * s for al, be in lines]
        top = max(vals)
        cands = [j for j, v in enumerate(vals) if v == top]
        return max(cands, key=lambda j: lines[j][1] * prefer_slope)

    cur = best_at(s0, 1)
    if s0 == s1:
        return [(s0, s1, cur)]
    out = []
    s = s0
    while True:
        al, be = lines[cur]
        nxt_s, nxt_j = None, None
        for j, (aj, bj) in enumerate(lines):
            if bj > be:
                cross = (al - aj) / (bj - be)
                if cross > s and (nxt_s is None or cross < nxt_s or
                                  (cross == nxt_s and bj > lines[nxt_j][1])):
                    nxt_s, nxt_j = cross, j
        if nxt_s is None or nxt_s >= s1:
            out.append((s, s1, cur))
            return out
        out.append((s, nxt_s, cur))
        s, cur = nxt_s, nxt_j
