"""Kernel foliation of the example ray: residuals and leaf closure, plus controls."""

import numpy as np

from toric_geodesic.disc_analysis import (FoliationField, holomorphy_residual, kernel_field,
                                          trace_leaf)
from toric_geodesic.geodesic import ray_field

from _common import example

if __name__ == "__main__":
    _, ray = example()
    ys = np.log(2) / 4
    creases = [lambda T: ys + 0 * T, lambda T: ys + T]
    fld = kernel_field(ray_field(ray), (0.5, 1.0), (ys - 0.3, ys + 1.3), 100, creases)
    print(f"degeneracy residual {fld.degeneracy_residual:.2e} "
          f"(excluded {fld.excluded} nodes)")
    print(f"holomorphy residual {holomorphy_residual(fld):.2e}")
    for y0 in (ys - 0.2, ys + 1.1, ys + 0.4):
        leaf = trace_leaf(fld, (0.75, y0))
        print(f"leaf from y={y0:.3f}: completed={leaf.completed} closure={leaf.closure:.2e} "
              f"exit={leaf.exit_point}")
    ctrl = FoliationField.from_function(lambda tau, z: np.conj(z), (0.5, 1.0), (0.5, 1.5), 20)
    print(f"control eta = conj(zeta): holomorphy residual {holomorphy_residual(ctrl):.3f}")
    drift = FoliationField(lambda tau, z: 0.1 * np.exp(z))
    print(f"control eta = 0.1 w: closure {trace_leaf(drift, (0.75, 0.3)).closure:.3f}")
