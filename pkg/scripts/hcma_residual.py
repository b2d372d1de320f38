"""Reduced homogeneous Monge-Ampere residual of the example ray under refinement."""

import numpy as np

from toric_geodesic.geodesic import ray_field, residual_refinement

from _common import example

if __name__ == "__main__":
    _, ray = example()
    ys = np.log(2) / 4
    creases = [lambda T: ys + 0 * T, lambda T: ys + T]
    Phi = ray_field(ray)
    for t_range, y_range in (((0.5, 1.0), (ys - 0.3, ys + 1.3)), ((0.5, 3.0), (-2.0, 4.0))):
        st = residual_refinement(Phi, t_range, y_range, 200, creases)
        print(f"t in {t_range}, y in ({y_range[0]:.3f}, {y_range[1]:.3f}): "
              f"coarse {st.coarse.residual:.3e} fine {st.fine.residual:.3e} "
              f"ratio {st.ratio:.2f} skipped {st.fine.skipped}")
