import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toric_geodesic.errors import ConvexityError, DomainError
from toric_geodesic.polytope import Polytope
from toric_geodesic.potentials import (GuilleminField, QuadraticField,
                                       SymplecticPotential, biconjugate, complex_table,
                                       guillemin_potential, legendre_dual,
                                       legendre_roundtrip_error, metric_data)

from conftest import hinge

P2 = Polytope.interval(0, 2)
BOX = Polytope.box((0, 0), (1, 2))


def guillemin_dual_closed(y):
    # x = 2 e^{2y} / (1 + e^{2y}) solves u'(x) = y
    return np.logaddexp(0, 2 * y) - np.log(2)


def test_guillemin_at_midpoint():
    u = guillemin_potential(P2)
    x = np.array([[1.0]])
    assert u.value(x)[0] == pytest.approx(0, abs=1e-15)
    assert u.gradient(x)[0, 0] == pytest.approx(0, abs=1e-15)
    assert u.hessian(x)[0, 0, 0] == pytest.approx(1, abs=1e-15)


def test_guillemin_outside_raises():
    with pytest.raises(DomainError):
        GuilleminField(P2).value(np.array([[2.5]]))


def test_self_dual_quadratic():
    u = SymplecticPotential(Polytope.interval(-50, 50), guillemin=False,
                            correction=QuadraticField([[1.0]]))
    h = legendre_dual(u)
    ys = np.linspace(-5, 5, 21)[:, None]
    assert np.abs(h.value(ys) - ys[:, 0] ** 2 / 2).max() < 1e-8


def test_guillemin_dual_closed_form():
    h = legendre_dual(guillemin_potential(P2))
    ys = np.linspace(-6, 6, 41)
    assert np.abs(h.value(ys[:, None]) - guillemin_dual_closed(ys)).max() < 1e-8
    x = 2 * np.exp(2 * ys) / (1 + np.exp(2 * ys))
    assert np.abs(h.gradient(ys[:, None])[:, 0] - x).max() < 1e-8


def test_shift_property():
    a = 0.7
    base = legendre_dual(guillemin_potential(P2))
    shifted = legendre_dual(SymplecticPotential(P2, correction=QuadraticField([[0.0]], [a])))
    ys = np.random.default_rng(1).uniform(-4, 4, (20, 1))
    assert np.abs(shifted.value(ys) - base.value(ys - a)).max() < 1e-8


def test_roundtrip_guillemin_and_ray():
    rng = np.random.default_rng(2)
    xs = rng.uniform(0.05, 1.95, (50, 1))
    u = guillemin_potential(P2)
    assert legendre_roundtrip_error(u, xs) < 1e-8
    ur = u.with_ray(hinge(1), 5.0)
    off = xs[np.abs(xs[:, 0] - 1) > 0.02]
    assert legendre_roundtrip_error(ur, off) < 1e-6


def test_non_convex_raises():
    u = SymplecticPotential(P2, correction=QuadraticField([[-5.0]]))
    with pytest.raises(ConvexityError):
        legendre_dual(u)


def test_metric_data_guillemin():
    xs = np.random.default_rng(3).uniform(0.05, 1.95, (50, 1))
    md = metric_data(guillemin_potential(P2), xs)
    ell = xs[:, 0] * (2 - xs[:, 0])
    assert np.allclose(md.G[:, 0, 0], 1 / ell, rtol=1e-13)
    assert np.allclose(md.H[:, 0, 0], ell, rtol=1e-13)
    md1 = metric_data(guillemin_potential(P2), np.array([[1.0]]))
    assert md1.G[0, 0, 0] == pytest.approx(1) and md1.H[0, 0, 0] == pytest.approx(1)
    flat = SymplecticPotential(Polytope.interval(-5, 5), guillemin=False,
                               correction=QuadraticField([[1.0]]))
    md = metric_data(flat, xs)
    assert np.allclose(md.G, 1) and np.allclose(md.H, 1)


def test_metric_inverse_contract_2d():
    u = SymplecticPotential(BOX, correction=QuadraticField([[0.3, 0.1], [0.1, 0.2]]))
    xs = np.random.default_rng(4).uniform([0.05, 0.05], [0.95, 1.95], (50, 2))
    md = metric_data(u, xs)
    assert np.abs(md.G @ md.H - np.eye(2)).max() < 1e-12


def test_box_dual_is_sum_of_interval_duals():
    h = legendre_dual(guillemin_potential(BOX))
    ys = np.random.default_rng(5).uniform(-2, 2, (20, 2))
    # [0, 1]: h = 1/2 log(1 + e^{2y});  [0, 2]: log(1 + e^{2y}) - log 2
    expected = 0.5 * np.logaddexp(0, 2 * ys[:, 0]) + guillemin_dual_closed(ys[:, 1])
    assert np.abs(h.value(ys) - expected).max() < 1e-7


def test_serialization_roundtrip():
    u = SymplecticPotential(P2, correction=QuadraticField([[0.5]], [0.1], 0.2))
    v = SymplecticPotential.from_dict(u.to_dict())
    xs = np.linspace(0.1, 1.9, 7)[:, None]
    assert np.array_equal(u.value(xs), v.value(xs))


def test_complex_table():
    h = legendre_dual(guillemin_potential(P2))
    text = complex_table(h, np.linspace(-1, 1, 3))
    lines = text.strip().splitlines()
    assert lines[0] == "y,h,dh,d2h" and len(lines) == 4


# ---------------------------------------------------------------------------
# properties

coeff = st.floats(-0.3, 0.3)


def perturbed(c2, c1):
    return SymplecticPotential(P2, correction=QuadraticField([[c2]], [c1]))


@given(coeff, coeff)
def test_moment_map_range(c2, c1):
    h = legendre_dual(perturbed(c2, c1))
    ys = np.random.default_rng(6).uniform(-8, 8, (100, 1))
    g = h.gradient(ys)[:, 0]
    assert np.all(g >= -1e-9) and np.all(g <= 2 + 1e-9)


@given(coeff, st.floats(0, 1))
def test_convex_ordering(c2, shift):
    # u_b = u_a + shift >= u_a  =>  h_b <= h_a
    ua = perturbed(c2, 0.0)
    ub = SymplecticPotential(P2, correction=QuadraticField([[c2]], [0.0], shift))
    ys = np.linspace(-4, 4, 30)[:, None]
    assert np.all(legendre_dual(ub).value(ys) <= legendre_dual(ua).value(ys) + 1e-12)


@given(coeff, coeff)
def test_hessian_duality(c2, c1):
    u = perturbed(c2, c1)
    h = legendre_dual(u)
    ys = np.linspace(-3, 3, 25)[:, None]
    x = h.gradient(ys)
    assert np.abs(h.hessian(ys)[:, 0, 0] - metric_data(u, x).H[:, 0, 0]).max() < 1e-5


@given(coeff, coeff)
def test_involution(c2, c1):
    u = perturbed(c2, c1)
    xs = np.linspace(0.05, 1.95, 30)[:, None]
    assert legendre_roundtrip_error(u, xs) < 1e-8


@given(st.floats(0.1, 1.9))
def test_biconjugate_pointwise(x):
    u = guillemin_potential(P2)
    h = legendre_dual(u)
    assert biconjugate(h, np.array([[x]]))[0] == pytest.approx(u.value(np.array([[x]]))[0],
                                                                abs=1e-8)


def test_inversion_near_boundary_regression():
    # a tiny linear term once made Newton stop on a small step with a large residual
    u = SymplecticPotential(P2, correction=QuadraticField([[0.0]], [2.220446049250313e-16]))
    h = legendre_dual(u)
    assert h.gradient(np.array([[1.0]]))[0, 0] == pytest.approx(2 / (1 + np.exp(-2.0)), abs=1e-12)


@given(st.floats(-2, 12), st.sampled_from([0.1, 0.02, 0.005]))
def test_inversion_on_steep_sigmoid(target, eps):
    # Newton alone ping-pongs across the step; the safeguard must still converge
    from scipy.special import expit
    from toric_geodesic.potentials import _invert_monotone_1d
    g = lambda z: z + 10 * expit((z - 0.3) / eps)
    dg = lambda z: 1 + 10 * expit((z - 0.3) / eps) * expit(-(z - 0.3) / eps) / eps
    z = _invert_monotone_1d(g, dg, np.array([target]), 1e-14)
    assert abs(g(z)[0] - target) < 1e-9 * (1 + abs(target))
