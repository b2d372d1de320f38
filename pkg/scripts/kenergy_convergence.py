"""Complex-mode K-energy derivative at t = 10 against the closed form 1/2."""

import time

from toric_geodesic.invariants import kenergy_derivative

from _common import example

if __name__ == "__main__":
    _, ray = example()
    print("t=10 symplectic:", kenergy_derivative(ray, 10.0).value)
    for eps in (0.1, 0.05, 0.02, 0.01):
        t0 = time.perf_counter()
        kv = kenergy_derivative(ray, 10.0, "complex", eps=eps)
        print(f"eps={eps:<5} dE/dt={kv.value:.6f} |err|={abs(kv.value - 0.5):.4f} "
              f"est={kv.error:.2e} ({time.perf_counter() - t0:.1f}s)")
