"""Polynomial-method rigidity witnesses for general Kronecker powers.

Each entry ``M^{⊗n}[x, y] = prod_{s,t} M[s,t]^{e_st(x,y)}`` where ``e_st``
counts the positions ``i`` with ``(x_i, y_i) = (s, t)``.  Replacing every
``M[s,t]^w`` by a low-degree polynomial that is exact for ``l <= w <= h``
gives a polynomial in the indicator variables ``w_{i,s,t} = [x_i = s][y_i = t]``
whose monomials become the columns of ``U`` and rows of ``V``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb, factorial
from typing import Sequence

from .errors import CapExceeded
from .field import Field
from .rigidity import RigidityError, RigidityWitness
from .sparse import SparseMatrix, kron_power, matmul, sub


def gbinom(a: int, i: int) -> int:
    """Generalized binomial ``C(a, i)`` for any integer ``a`` and ``i >= 0``."""
    if i < 0:
        return 0
    num = 1
    for t in range(i):
        num *= a - t
    return num // factorial(i)


@dataclass(frozen=True)
class InterpolationPoly:
    """``p(w) = sum_i a_i C(w - k - 1, i)``, exact at weights ``k+1 .. k+r``."""

    field: Field
    n: int
    k: int
    coeffs: tuple

    @property
    def r(self) -> int:
        return len(self.coeffs)

    @property
    def window(self) -> tuple[int, int]:
        return (self.k + 1, self.k + self.r)

    def at_weight(self, w: int):
        f = self.field
        return f(sum(a * gbinom(w - self.k - 1, i) for i, a in enumerate(self.coeffs)))

    def elementary_coeffs(self) -> list:
        """``b_j`` with ``p(|z|) = sum_j b_j e_j(z)`` on Boolean ``z`` (``e_j`` elementary symmetric)."""
        f = self.field
        m = -self.k - 1
        return [f(sum(self.coeffs[i] * gbinom(m, i - j) for i in range(j, self.r))) for j in range(self.r)]

    def evaluate(self, z: Sequence[int]):
        return self.at_weight(sum(1 for b in z if b))


def interpolation_poly(field: Field, n: int, r: int, k: int, constants: Sequence) -> InterpolationPoly:
    """Solve the unit-triangular system ``sum_{i<j} a_i C(j-1, i) = c_j`` by forward substitution."""
    if r < 1 or len(constants) != r:
        raise RigidityError("need r >= 1 constants")
    if k < -1:
        raise RigidityError("k must be >= -1")
    if n < r + k:
        raise RigidityError(f"need n >= r + k, got n={n}, r={r}, k={k}")
    consts = [field(c) for c in constants]
    a = []
    for j in range(1, r + 1):
        acc = consts[j - 1]
        for i in range(j - 1):
            acc = field.sub(acc, field.mul(a[i], comb(j - 1, i)))
        a.append(acc)
    return InterpolationPoly(field, n, k, tuple(a))


def _zero_power(v, w: int, field: Field):
    return field.power(v, w) if v != 0 else (1 if w == 0 else 0)


def window_polys(m: SparseMatrix, n: int, l: int, h: int) -> dict:
    """Per-pattern ``(s, t) -> InterpolationPoly`` for ``M[s,t]^w`` on ``l <= w <= h``."""
    f = m.field
    polys = {}
    for s in range(m.rows):
        for t in range(m.cols):
            v = m.get(s, t)
            consts = [_zero_power(v, w, f) for w in range(l, h + 1)]
            polys[(s, t)] = interpolation_poly(f, n, h - l + 1, l - 1, consts)
    return polys


def pattern_counts(x: int, y: int, q: int, n: int) -> dict:
    counts: dict = {}
    for _ in range(n):
        key = (x % q, y % q)
        counts[key] = counts.get(key, 0) + 1
        x //= q
        y //= q
    return counts


def ghat_value(polys: dict, x: int, y: int, q: int, n: int, field: Field):
    """Direct evaluation of the approximating polynomial at ``(x, y)``."""
    counts = pattern_counts(x, y, q, n)
    out = 1
    for key, p in polys.items():
        out = field.mul(out, p.at_weight(counts.get(key, 0)))
    return out


def _compositions(n: int, parts: int):
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


def _multinomial(ks: Sequence[int]) -> int:
    out, total = 1, 0
    for k in ks:
        total += k
        out *= comb(total, k)
    return out


def bad_pair_count(q: int, n: int, l: int, h: int) -> int:
    """Exact number of ``(x, y)`` with some pattern count outside ``[l, h]``."""
    return sum(_multinomial(ks) for ks in _compositions(n, q * q) if any(k < l or k > h for k in ks))


def union_bound(q: int, n: int, l: int, h: int) -> int:
    q2 = q * q
    low = sum(comb(n, k) * (q2 - 1) ** (n - k) for k in range(0, l))
    high = sum(comb(n, k) * (q2 - 1) ** (n - k) for k in range(h + 1, n + 1))
    return q2 * (low + high)


def polymethod_decomp(m: SparseMatrix, n: int, l: int, h: int, max_assignments: int = 2 * 10**6) -> RigidityWitness:
    """Low-rank-plus-sparse split of ``m^{⊗n}`` from the window ``[l, h]``."""
    if not m.is_square():
        raise RigidityError("polynomial method needs a square base")
    if not 0 <= l <= h <= n:
        raise RigidityError(f"need 0 <= l <= h <= n, got l={l}, h={h}, n={n}")
    q, f = m.rows, m.field
    patterns = [(s, t) for s in range(q) for t in range(q)]
    if (len(patterns) + 1) ** n > max_assignments:
        raise CapExceeded("monomial enumeration exceeds the cap", {"assignments": (len(patterns) + 1) ** n})
    polys = window_polys(m, n, l, h)
    bcoef = {key: p.elementary_coeffs() for key, p in polys.items()}
    deg = h - l
    N = q**n
    ucols_r, ucols_c, ucols_v = [], [], []
    vrows_r, vrows_c, vrows_v = [], [], []
    rank = 0
    # a monomial is a partial assignment position -> pattern
    for sigma in itertools.product([None] + patterns, repeat=n):
        counts: dict = {}
        for pat in sigma:
            if pat is not None:
                counts[pat] = counts.get(pat, 0) + 1
        if any(c > deg for c in counts.values()):
            continue
        coef = 1
        for key in patterns:
            coef = f.mul(coef, bcoef[key][counts.get(key, 0)])
        if coef == 0:
            continue
        free = [i for i, pat in enumerate(sigma) if pat is None]
        fixed_x = sum(pat[0] * q**i for i, pat in enumerate(sigma) if pat is not None)
        fixed_y = sum(pat[1] * q**i for i, pat in enumerate(sigma) if pat is not None)
        for digits in itertools.product(range(q), repeat=len(free)):
            off = sum(d * q**i for d, i in zip(digits, free))
            ucols_r.append(fixed_x + off)
            ucols_c.append(rank)
            ucols_v.append(coef)
            vrows_r.append(rank)
            vrows_c.append(fixed_y + off)
            vrows_v.append(1)
        rank += 1
    if rank == 0:
        u = SparseMatrix.zeros(N, 1, f)
        v = SparseMatrix.zeros(1, N, f)
        rank_cols = 1
    else:
        rank_cols = rank
        u = SparseMatrix.from_coo(N, rank, ucols_r, ucols_c, ucols_v, f, trusted=True)
        v = SparseMatrix.from_coo(rank, N, vrows_r, vrows_c, vrows_v, f, trusted=True)
    target = kron_power(m, n)
    s = sub(target, matmul(u, v))
    bad = bad_pair_count(q, n, l, h)
    meta = {
        "construction": "polymethod",
        "n": n,
        "l": l,
        "h": h,
        "monomials": rank,
        "bad_pairs": bad,
        "union_bound": union_bound(q, n, l, h),
    }
    if s.nnz > bad:
        raise RigidityError("approximation disagrees on a good pair (internal error)")
    return RigidityWitness(target, u, v, s, rank_cols, meta)
