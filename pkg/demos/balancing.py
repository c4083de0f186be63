"""Marcus scaling against degree normalisation, and the entropic OT view.

    python3 demos/balancing.py

Both balancing schemes reach the same doubly stochastic matrix; the Marcus
update needs half the multiplications per sweep.  The matrix is also the
entropic transport plan at omega = 1, and drifts away from it otherwise.
"""

import time

import numpy as np

from ancmm import check_total_support, entropic_plan, marcus_map
from ancmm.marcus import count_flops_per_iteration, degree_normalize_iterate

STAR = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]])


def main():
    rng = np.random.default_rng(0)
    A = rng.uniform(0.1, 1.0, (300, 300))
    S = A + A.T

    limits = {}
    for name, fn in (("marcus", marcus_map), ("degree", degree_normalize_iterate)):
        t0 = time.perf_counter()
        out = fn(S)
        dt = time.perf_counter() - t0
        limits[name], report = out[0], out[-1]
        print(f"{name}: {report.iterations} iterations, residual {report.residual:.1e}, {dt * 1e3:.1f} ms")
    print(f"max |marcus - degree| = {np.max(np.abs(limits['marcus'] - limits['degree'])):.1e}")
    marcus, degree = count_flops_per_iteration(300)
    print(f"multiplications per sweep: marcus {marcus.mul}, degree {degree.mul}")

    M = limits["marcus"]
    for omega in (0.5, 1.0, 2.0):
        P = entropic_plan(S, omega=omega).P
        print(f"omega={omega}: max |M - P| = {np.max(np.abs(M - P)):.2e}")

    # a symmetric pattern without total support cannot be balanced
    print(f"\ntotal support of the 3x3 star pattern: {check_total_support(STAR)}")


if __name__ == "__main__":
    main()
