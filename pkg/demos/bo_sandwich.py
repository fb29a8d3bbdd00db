"""Lower and upper entropy estimates for the transiently chaotic BO system.

The measure-theoretic quotient H(P_0^n)/n depends on how fine the partition is:
thirds cannot separate points inside J = [1/3, 2/3], ninths can.  The Lipschitz
trace gives an upper bound that tends to log2 3 along the schedule.
"""
from __future__ import annotations

import math

from ndsentropy import lipschitz_bound_at, partition_entropy_trace
from ndsentropy.catalog import bo_lower_bound, make_bo_system, settling_index
from ndsentropy.intervals import IntervalSet
from ndsentropy.system import two_pow_n_squared

LOG2_3 = math.log2(3)


def main() -> None:
    print(f"log2 3 = {LOG2_3:.6f}, counting bound at n=16 = {bo_lower_bound(16):.6f}")
    for k in (1, 2, 3):
        e = make_bo_system(k)
        tr = partition_entropy_trace(e.system, e.mu0, e.partitions, [4, 8, 16])
        print(f"k={k}: " + ", ".join(f"n={n}: {v:.4f} ({c} cells)" for n, v, c in zip(tr.horizons, tr.values, tr.cells)))

    sys = make_bo_system().system
    for n in (16, 512, two_pow_n_squared(4), two_pow_n_squared(8)):
        print(f"Lipschitz trace at n={n}: {lipschitz_bound_at(sys, n):.10f}")

    mus = make_bo_system().measures()
    N, segs = settling_index(mus, IntervalSet.half_open(0, "1/100"), "99/100", two_pow_n_squared(12))
    print("mass of [0, 1/100) on each constant segment of mu_n:")
    for start, mass in segs:
        print(f"  from n={start}: {float(mass):.6f}")
    print(f"mass stays >= 0.99 from n = {N} = 2^{N.bit_length() - 1} + 1")


if __name__ == "__main__":
    main()
