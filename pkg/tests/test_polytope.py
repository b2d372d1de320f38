from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toric_geodesic.errors import EvaluationError, PolytopeError
from toric_geodesic.polytope import (Facet, PiecewiseLinearFn, Polytope, check_delzant,
                                     integrate_boundary, integrate_interior, integrate_pl,
                                     integrate_pl_boundary, lattice_length, lattice_points,
                                     quadrature_rule)

from conftest import hinge

SQUARE = Polytope.box((0, 0), (1, 1))
BAD_TRIANGLE = Polytope.from_inequalities([(1, 0), (0, 1), (-1, -2)], [0, 0, 2])
HAT = Polytope.from_inequalities([(1, 0), (0, 1), (0, -1), (-1, -1)], [0, 0, 1, 2])


def brute_count(P, k):
    lo, hi = P.dilate(k).bounding_box()
    grids = np.meshgrid(*[np.arange(int(np.floor(a)), int(np.ceil(b)) + 1)
                          for a, b in zip(lo, hi)], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], -1)
    A, c = P.normals, P.offsets * k
    return int(np.all(pts @ A.T + c >= -1e-12, axis=1).sum())


def test_rejects_bad_input():
    with pytest.raises(PolytopeError):
        Polytope.from_inequalities([(1,), (1,)], [0, 1])  # unbounded
    with pytest.raises(PolytopeError):
        Polytope.from_inequalities([(1,), (-1,)], [0, 0])  # empty interior
    with pytest.raises(PolytopeError):
        Polytope(1, (Facet((2,), 0), Facet((-1,), 2)))  # non-primitive normal


def test_delzant_examples():
    assert check_delzant(Polytope.interval(0, 2)).is_delzant
    assert check_delzant(SQUARE).is_delzant
    rep = check_delzant(BAD_TRIANGLE)
    assert not rep.is_delzant
    # (2, 0) sits on normals (0, 1) and (-1, -2) with determinant -1; the
    # failing vertex is (0, 1), where (1, 0), (-1, -2) give determinant -2
    assert [tuple(v) for v, _ in rep.failing_vertices] == [(0, 1)]


def test_lattice_points_examples():
    assert lattice_points(Polytope.interval(0, 2), 1) == [(0,), (1,), (2,)]
    assert lattice_points(HAT, 1) == [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0)]
    assert len(lattice_points(Polytope.interval(0, 2), 3)) == 7


def test_interior_integrals():
    P = Polytope.interval(0, 2)
    assert abs(integrate_interior(P, lambda x: np.ones(len(x))).value - 2) < 1e-9
    assert abs(integrate_interior(P, hinge(1)).value - 0.5) < 1e-6
    assert abs(integrate_interior(HAT, lambda x: np.ones(len(x))).value - 1.5) < 1e-6
    assert integrate_pl(P, hinge(1)) == Fraction(1, 2)
    assert integrate_pl(HAT, PiecewiseLinearFn.constant(1, 2)) == Fraction(3, 2)


def test_boundary_integrals():
    P = Polytope.interval(0, 2)
    assert integrate_boundary(P, lambda x: np.ones(len(x))) == pytest.approx(2, abs=1e-12)
    assert integrate_boundary(P, hinge(1)) == pytest.approx(1, abs=1e-12)
    assert integrate_boundary(SQUARE, lambda x: np.ones(len(x))) == pytest.approx(4, abs=1e-12)
    assert integrate_pl_boundary(P, hinge(1)) == 1
    assert SQUARE.boundary_volume() == 4


def test_boundary_needs_delzant():
    with pytest.raises(Exception):
        integrate_boundary(BAD_TRIANGLE, lambda x: np.ones(len(x)))


def test_lattice_length():
    assert lattice_length((0, 0), (2, 2)) == 2
    assert lattice_length((0, 1), (3, 2)) == 1


def test_quadrature_refinement_ratio():
    # smooth nonlinear integrand; the midpoint rule is second order
    P = Polytope.interval(0, 2)
    g = lambda x: np.exp(np.sin(x[:, 0]))
    from scipy.integrate import quad
    exact = quad(lambda s: np.exp(np.sin(s)), 0, 2, epsabs=1e-14)[0]
    errs = [abs(integrate_interior(P, g, resolution=r).coarse - exact) for r in (8, 16, 32)]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


def test_quadrature_weights_sum_to_volume():
    for P in (Polytope.interval(0, 2), SQUARE, HAT):
        rule = quadrature_rule(P, 16)
        assert rule.weights.sum() == pytest.approx(float(P.volume()), rel=1e-12)
        assert all(P.facet_distance(rule.nodes) > 0)


def test_evaluation_error_reports_node():
    P = Polytope.interval(0, 2)
    with pytest.raises(EvaluationError) as exc:
        integrate_interior(P, lambda x: np.where(x[:, 0] > 1.5, np.nan, 1.0))
    assert exc.value.node is not None


def test_pl_basics():
    f = hinge(1)
    assert f.value_exact((Fraction(3, 2),)) == Fraction(1, 2)
    assert f.max_on(Polytope.interval(0, 2)) == 1
    assert [c[0] for c in f.creases(Polytope.interval(0, 2))] == [1]
    assert PiecewiseLinearFn.from_dict(f.to_dict()) == f
    assert Polytope.from_dict(HAT.to_dict()) == HAT


# ---------------------------------------------------------------------------
# properties

unimodular = st.sampled_from([((1, 0), (0, 1)), ((1, 1), (0, 1)), ((1, 0), (1, 1)),
                              ((0, 1), (1, 0)), ((2, 1), (1, 1)), ((1, -1), (0, 1)),
                              ((-1, 0), (0, 1))])
shift = st.tuples(st.integers(-3, 3), st.integers(-3, 3))
polys = st.sampled_from([SQUARE, HAT, BAD_TRIANGLE, Polytope.box((0, 0), (2, 1)),
                         Polytope.from_inequalities([(1, 0), (0, 1), (-1, -1)], [0, 0, 2])])


@given(polys, st.integers(1, 6))
def test_lattice_count_matches_brute_force(P, k):
    assert len(lattice_points(P, k)) == brute_count(P, k)


@given(polys, st.integers(1, 5))
def test_dilation_consistency(P, k):
    assert lattice_points(P, k) == lattice_points(P.dilate(k), 1)


@given(st.sampled_from([SQUARE, HAT, Polytope.box((0, 0), (2, 1)),
                        Polytope.from_inequalities([(1, 0), (0, 1), (-1, -1)], [0, 0, 2])]))
def test_ehrhart_polynomial(P):
    # integral polytopes: the count is a degree-n polynomial in k
    ks = list(range(1, P.dim + 2))
    coeffs = np.polyfit(ks, [len(lattice_points(P, k)) for k in ks], P.dim)
    for k in range(1, 11):
        assert round(np.polyval(coeffs, k)) == len(lattice_points(P, k))


@given(polys, unimodular, shift)
def test_delzant_is_lattice_invariant(P, U, w):
    Q = P.transform(U, w)
    assert check_delzant(Q).is_delzant == check_delzant(P).is_delzant
    assert Q.volume() == P.volume()
    assert len(lattice_points(Q, 1)) == len(lattice_points(P, 1))


@given(st.integers(0, 4), st.integers(1, 4), st.integers(1, 3))
def test_interval_volume_and_points(a, length, k):
    P = Polytope.interval(a, a + length)
    assert P.volume() == length
    assert len(lattice_points(P, k)) == k * length + 1
