"""Print the closed-form exponent table."""

import argparse

from kroncirc.exponents import c_kron2, c_wh, js_exponent, prior_exponent, prior_min
from kroncirc.rigidity import change_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kmax", type=int, default=10)
    a = ap.parse_args()
    print("k  changes(generic)  c_kron2  changes(WH)  c_WH")
    for k in range(1, a.kmax + 1):
        print(f"{k}  {change_bound(k)}  {c_kron2(k):.4f}  {change_bound(k, 'wh')}  {c_wh(k):.4f}")
    c, n = prior_min()
    print(f"prior method on H_4: exponent {prior_exponent(1, 96, 16):.4f}; min c over n=5..8: {c:.4f} at n={n}")
    print(f"recursive partition (log2(1+sqrt 2)): {js_exponent():.4f}")


if __name__ == "__main__":
    main()
