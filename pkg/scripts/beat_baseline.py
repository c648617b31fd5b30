"""Depth-2 builds from the optimal R_3 partition against the mixed-product baseline."""

import argparse
import math

from kroncirc.builder import mixed_product_size, plan_depth2, size_bound
from kroncirc.decomp import from_partition, stats
from kroncirc.partition import partition_search
from kroncirc.presets import disjointness


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nmax", type=int, default=5)
    a = ap.parse_args()
    d = from_partition(partition_search(disjointness(3), 8))
    st = stats(d)
    print(f"alpha1 {st.alpha1:.5f}  G {st.G:.5f}  E {st.E:.5f}  beta {st.beta:.5f}")
    print("n  N  per-layer  size  bound  mixed-product  ratio  slack-adjusted exponent")
    for n in range(1, a.nmax + 1):
        plan = plan_depth2(d, n)
        bits = 3 * n
        parts = [bits - bits // 2, bits // 2]
        mp = mixed_product_size(3, 2, bits, parts)
        lnN = bits * math.log(2)
        adj = (math.log(plan.size) - math.log(2 * math.exp(2 * st.G) * (n + 1))) / lnN
        print(
            f"{n}  2^{bits}  {plan.per_layer}  {plan.size}  {float(size_bound(plan)):.4g}  {mp}  "
            f"{plan.size / mp:.3f}  {adj:.3f}"
        )


if __name__ == "__main__":
    main()
