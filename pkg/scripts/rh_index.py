"""Kernel dimension, index and pairing invariance for random admissible RH problems."""

import numpy as np

from toric_geodesic.disc_analysis import RHProblem, pairing_invariance, random_rh_problem, rh_solve

if __name__ == "__main__":
    rng = np.random.default_rng(7)
    triv = rh_solve(RHProblem(1, {}, {0: [[1.0]]}, N=8))
    print("trivial problem: kernel_dim", triv.kernel_dim)
    for n in (1, 2, 3):
        for _ in range(3):
            sol = rh_solve(random_rh_problem(n, rng))
            pr = pairing_invariance(sol)
            print(f"n={n} kernel={sol.kernel_dim} cokernel={sol.cokernel_dim} "
                  f"index={sol.index} pairing dev={max(pr.max_imag, pr.max_variation):.1e}")
