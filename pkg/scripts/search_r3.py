"""Exact minimum-alpha1 rectangle partition of R_k (default R_3, 8 parts)."""

import argparse
import math
import time

from kroncirc.partition import partition_search_full
from kroncirc.presets import disjointness


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--max-parts", type=int, default=8)
    a = ap.parse_args()
    t0 = time.perf_counter()
    res = partition_search_full(disjointness(a.k), a.max_parts)
    dt = time.perf_counter() - t0
    p = res.partition
    print(f"R_{a.k}: {len(p.rects)} rectangles, objective {res.objective:.6f}, nodes {res.nodes}, {dt:.1f}s")
    print(f"exponent alpha1 / ({a.k} ln 2) = {p.alpha1 / (a.k * math.log(2)):.5f}")
    for rows, cols in p.rects:
        print(f"  rows {list(rows)} x cols {list(cols)}")


if __name__ == "__main__":
    main()
