"""Rank-1 change counts of the constructions, with brute-force agreement checks."""

import argparse

from kroncirc.rigidity import (
    agreement_count,
    change_bound,
    good_pair_count,
    rank1_construct_kron2,
    rank1_construct_wh,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nmax", type=int, default=8)
    ap.add_argument("--brute-max", type=int, default=6)
    a = ap.parse_args()
    print("n  kron2(w=2)  closed  WH  closed  good-pair check")
    for n in range(1, a.nmax + 1):
        k2 = rank1_construct_kron2(2, n)
        wh = rank1_construct_wh(n)
        assert k2.verify() and wh.verify()
        check = ""
        if n <= a.brute_max:
            same = all(agreement_count(n, m) == good_pair_count(n, m) for m in ("generic", "wh"))
            check = "ok" if same else "MISMATCH"
        print(f"{n}  {k2.changes}  {change_bound(n)}  {wh.changes}  {change_bound(n, 'wh')}  {check}")


if __name__ == "__main__":
    main()
