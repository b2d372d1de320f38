import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from toric_geodesic.degeneration import algebraic_ray, build_hat_polytope
from toric_geodesic.errors import PreconditionError
from toric_geodesic.geodesic import (GeodesicRay, crease_images, geodesic_residual,
                                     parallelism_gap, ray_field, ray_potential,
                                     regularity_diagnostics, residual_refinement,
                                     segment_potential, sup_second_derivative)
from toric_geodesic.polytope import PiecewiseLinearFn, Polytope, integrate_interior
from toric_geodesic.potentials import (LegendreDualField, QuadraticField, SymplecticPotential,
                                       guillemin_potential)

from conftest import Y_STAR, hinge

P2 = Polytope.interval(0, 2)
XS = np.linspace(0.02, 1.98, 100)[:, None]


def h0_of(ray):
    return ray.dual(0.0)


def piecewise_h(h0, t, y):
    """The closed-form ray: h_0, then a slope-one segment, then h_0(y - t) + t."""
    y = np.asarray(y, float)
    v0 = h0.value(np.array([[Y_STAR]]))[0]
    return np.where(y <= Y_STAR, h0.value(y[:, None]),
                    np.where(y <= Y_STAR + t, v0 + (y - Y_STAR),
                             h0.value((y - t)[:, None]) + t))


def test_segment_endpoints_and_midpoint():
    ua = guillemin_potential(P2)
    ub = SymplecticPotential(P2, correction=QuadraticField([[-0.5]], [0.5]))  # + x(2-x)/4
    assert segment_potential(ua, ub, 0.0) is ua
    assert segment_potential(ua, ub, 1.0) is ub
    mid = segment_potential(ua, ub, 0.5)
    assert np.abs(mid.value(XS) - 0.5 * (ua.value(XS) + ub.value(XS))).max() < 1e-14
    assert np.allclose(ub.value(XS) - ua.value(XS), XS[:, 0] * (2 - XS[:, 0]) / 4)
    mid.check_convex(XS)


def test_segment_has_constant_speed():
    ua = guillemin_potential(P2)
    ub = SymplecticPotential(P2, correction=QuadraticField([[-0.5]], [0.5]))
    d = 1e-3
    speeds = []
    for t in (0.1, 0.5, 0.8):
        a, b = segment_potential(ua, ub, t), segment_potential(ua, ub, t + d)
        speeds.append(integrate_interior(P2, lambda x: ((b.value(x) - a.value(x)) / d) ** 2).value)
    exact = integrate_interior(P2, lambda x: (x[:, 0] * (2 - x[:, 0]) / 4) ** 2).value
    assert np.allclose(speeds, exact, rtol=1e-6)


def test_ray_potential_contracts(example_ray):
    assert ray_potential(example_ray, 0.0).value(XS) == pytest.approx(example_ray.u0.value(XS))
    x = np.array([[1.5]])
    assert ray_potential(example_ray, 2.0).value(x)[0] == \
        pytest.approx(example_ray.u0.value(x)[0] + 1.0, abs=1e-14)
    with pytest.raises(PreconditionError):
        ray_potential(example_ray, -1.0)


def test_affine_direction_keeps_hessian():
    u0 = guillemin_potential(P2)
    ray = GeodesicRay(u0, PiecewiseLinearFn.affine((1,), -1))
    ut = ray.potential(3.0)
    assert np.array_equal(ut.hessian(XS), u0.hessian(XS))
    ut.check_convex(XS)


def test_crease_image_at_zero(example_ray):
    h0 = h0_of(example_ray)
    assert h0.gradient(np.array([[Y_STAR]]))[0, 0] == pytest.approx(1, abs=1e-12)
    assert h0.hessian(np.array([[Y_STAR]]))[0, 0, 0] == pytest.approx(2 * (2 - np.sqrt(2)), abs=1e-9)


def test_branches_at_t5(example_ray):
    h0, h5 = h0_of(example_ray), example_ray.dual(5.0)
    v = lambda h, y: h.value(np.array([[y]]))[0]
    assert v(h5, Y_STAR + 2) == pytest.approx(v(h0, Y_STAR) + 2, abs=1e-8)
    assert v(h5, Y_STAR + 7) == pytest.approx(v(h0, Y_STAR + 2) + 5, abs=1e-8)
    (lo, hi, xc), = crease_images(example_ray, 5.0)
    assert lo == pytest.approx(Y_STAR, abs=1e-10) and hi == pytest.approx(Y_STAR + 5, abs=1e-10)
    assert xc == 1


def test_parallelism_gap(example_ray, example_cfg):
    g = parallelism_gap(example_ray, example_cfg, [0.0, 5.0, 10.0, 20.0])
    assert g.gap[0] < 1e-12
    assert all(np.isfinite(g.gap))
    assert abs(g.gap[3] - g.gap[2]) < 1e-2
    with pytest.warns(RuntimeWarning, match="window"):
        parallelism_gap(example_ray, example_cfg, [5.0], window=0.1)


def test_gap_constant_for_product_configuration():
    # f = 0: P_hat = P x [0, 2] and neither ray moves
    cfg = build_hat_polytope(P2, PiecewiseLinearFn.constant(0), 2)
    u0 = SymplecticPotential(P2, guillemin=False,
                             correction=LegendreDualField(algebraic_ray(cfg, 0.0)))
    g = parallelism_gap(GeodesicRay(u0, cfg.direction), cfg, [0.0, 1.0, 4.0, 9.0], samples=801)
    assert max(g.gap) - min(g.gap) < 1e-6
    # from the Guillemin potential the difference is nonzero but still t-independent
    ray = GeodesicRay(guillemin_potential(P2), cfg.direction)
    ys = np.linspace(-5, 5, 101)[:, None]
    diffs = [ray.dual(t).value(ys) - algebraic_ray(cfg, t).value(ys) for t in (0.0, 1.0, 9.0)]
    assert np.abs(diffs[0]).max() > 0.01
    assert max(np.abs(d - diffs[0]).max() for d in diffs) < 1e-6


def test_residual_controls():
    h0 = guillemin_potential(P2)
    from toric_geodesic.potentials import legendre_dual
    h = legendre_dual(h0)
    affine = lambda T, Y: h.value(Y.reshape(-1, 1)).reshape(Y.shape) + 0.7 * T
    assert geodesic_residual(affine, (0, 1), (-1, 1), 60).residual < 1e-9
    quad = lambda T, Y: T ** 2 + Y ** 2
    assert geodesic_residual(quad, (0, 1), (-1, 1), 60).residual == pytest.approx(4, rel=1e-6)


def test_regularity(example_ray):
    diag = regularity_diagnostics(example_ray, [0.0, 5.0], samples=1001)
    jumps = [j for t, _, j in diag.jump_series if t == 5.0]
    ref = 2 * (2 - np.sqrt(2))
    assert len(jumps) == 2 and all(abs(j - ref) < 1e-2 for j in jumps)
    assert not [j for t, _, j in diag.jump_series if t == 0.0]
    s0 = sup_second_derivative(example_ray.dual(0.0), -5, 5)
    for t in (3.0, 20.0):
        assert sup_second_derivative(example_ray.dual(t), -5, 5 + t) <= s0 + 1e-6


def test_hcma_residual_refines(example_ray):
    creases = [lambda T: Y_STAR + 0 * T, lambda T: Y_STAR + T]
    st_ = residual_refinement(ray_field(example_ray), (0.5, 1.0), (Y_STAR - 0.3, Y_STAR + 1.3),
                              120, creases)
    assert st_.fine.skipped > 0
    assert st_.ratio >= 3.5


# ---------------------------------------------------------------------------
# properties

@given(st.floats(0.5, 15))
def test_dual_matches_piecewise_formula(t):
    ray = _example_ray()
    h0 = ray.dual(0.0)
    ys = np.linspace(-4, 4 + t, 400)
    off = (np.abs(ys - Y_STAR) > 0.05) & (np.abs(ys - Y_STAR - t) > 0.05)
    ht = ray.dual(t).value(ys[off][:, None])
    assert np.abs(ht - piecewise_h(h0, t, ys[off])).max() < 1e-8


@given(st.floats(0, 10), st.floats(0.01, 3))
def test_monotone_in_t(t, dt):
    ray = _example_ray()
    ys = np.linspace(-4, 8, 60)[:, None]
    assert np.all(ray.dual(t + dt).value(ys) <= ray.dual(t).value(ys) + 1e-12)
    assert np.all(ray.potential(t + dt).value(XS) >= ray.potential(t).value(XS))


@given(st.floats(0.2, 10), st.floats(0.05, 0.95))
def test_slope_inside_segment(t, frac):
    ray = _example_ray()
    (lo, hi, xc), = crease_images(ray, t)
    y = lo + frac * (hi - lo)
    assert ray.dual(t).gradient(np.array([[y]]))[0, 0] == float(xc)


_CACHE = {}


def _example_ray():
    if "ray" not in _CACHE:
        cfg = build_hat_polytope(P2, hinge(1), 1)
        u0 = SymplecticPotential(P2, guillemin=False,
                                 correction=LegendreDualField(algebraic_ray(cfg, 0.0)))
        _CACHE["ray"] = GeodesicRay(u0, cfg.direction)
    return _CACHE["ray"]
