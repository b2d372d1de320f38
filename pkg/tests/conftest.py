from fractions import Fraction

import numpy as np
import pytest
from hypothesis import settings

from toric_geodesic.config import ExperimentConfig
from toric_geodesic.degeneration import algebraic_ray, build_hat_polytope
from toric_geodesic.geodesic import GeodesicRay
from toric_geodesic.polytope import PiecewiseLinearFn, Polytope
from toric_geodesic.potentials import LegendreDualField, SymplecticPotential

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

Y_STAR = np.log(2) / 4


def hinge(c, slope=1):
    """``max(0, slope (x - c))`` on the line."""
    c = Fraction(c)
    return PiecewiseLinearFn((((0,), 0), ((slope,), -slope * c)))


@pytest.fixture(scope="session")
def example_cfg():
    return build_hat_polytope(Polytope.interval(0, 2), hinge(1), 1)


@pytest.fixture(scope="session")
def example_ray(example_cfg):
    h0 = algebraic_ray(example_cfg, 0.0)
    u0 = SymplecticPotential(example_cfg.base, guillemin=False, correction=LegendreDualField(h0))
    return GeodesicRay(u0, example_cfg.direction)


@pytest.fixture(scope="session")
def example_conf():
    return ExperimentConfig.example()


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
