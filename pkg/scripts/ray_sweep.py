"""Parallelism gap and regularity diagnostics of the example ray for t = 0..20."""

from toric_geodesic.geodesic import parallelism_gap, regularity_diagnostics

from _common import example

if __name__ == "__main__":
    cfg, ray = example()
    ts = [float(t) for t in range(0, 21)]
    gaps = parallelism_gap(ray, cfg, ts)
    diag = regularity_diagnostics(ray, ts)
    jumps = {}
    for t, _, j in diag.jump_series:
        jumps[t] = max(j, jumps.get(t, 0.0))
    print(" t      gap          max jump    sup h''      sup |h'''|")
    for i, t in enumerate(ts):
        print(f"{t:4.0f}  {gaps.gap[i]:.8f}  {jumps.get(t, 0.0):.6f}    "
              f"{diag.second_derivative_sup[i][1]:.8f}  {diag.third_derivative_sup[i][1]:.4f}")
