"""Rank-1 rigidity witnesses ``M = U V + S`` for Kronecker powers of 2x2 matrices.

For the outer-1 matrix ``M_w = [[1, 1], [1, w]]`` the power has entries
``M_w^{⊗n}[x, y] = w^{<x, y>}``.  The rank-1 approximation is
``U[x] = w^{b1[x]}``, ``V[y] = w^{b2[y]}`` with integer exponent vectors that
depend on the Hamming weights ``|x|``, ``|y|`` and on ``n mod 4``.  A pair
``(x, y)`` is good when ``b1[x] + b2[y] = <x, y>``; for ``w = -1`` it is
enough that the two agree mod 2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from math import comb
from typing import Sequence

import numpy as np

from .errors import CapExceeded
from .field import Q, Field, FieldError
from .presets import hadamard, outer1
from .serialize import from_inline, to_inline
from .sparse import SparseMatrix, equals, kron_power, matmul, sub


class RigidityError(ValueError):
    """Raised on invalid rigidity inputs."""


@dataclass(frozen=True)
class RigidityWitness:
    target: SparseMatrix
    u: SparseMatrix
    v: SparseMatrix
    s: SparseMatrix
    rank_bound: int
    meta: dict = dc_field(default_factory=dict, compare=False)

    @property
    def changes(self) -> int:
        return self.s.nnz

    def verify(self) -> bool:
        if self.u.cols != self.rank_bound or self.v.rows != self.rank_bound:
            return False
        return equals(sub(self.target, matmul(self.u, self.v)), self.s)

    def to_json(self) -> dict:
        return {
            "field": self.target.field.to_json(),
            "target": to_inline(self.target),
            "rank_bound": self.rank_bound,
            "changes": self.changes,
            "U": to_inline(self.u),
            "V": to_inline(self.v),
            "S": to_inline(self.s),
            "meta": {k: v for k, v in self.meta.items() if isinstance(v, (int, float, str, bool))},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RigidityWitness":
        f = Field.from_json(obj.get("field", {"kind": "rational"}))
        w = cls(
            from_inline(obj["target"], f),
            from_inline(obj["U"], f),
            from_inline(obj["V"], f),
            from_inline(obj["S"], f),
            int(obj["rank_bound"]),
        )
        if w.changes != obj.get("changes", w.changes):
            raise RigidityError("stored change count disagrees with S")
        return w


def witness_from_uv(target: SparseMatrix, u: SparseMatrix, v: SparseMatrix, **meta) -> RigidityWitness:
    return RigidityWitness(target, u, v, sub(target, matmul(u, v)), u.cols, dict(meta))


# outer-1 normalization


def outer1_normalize(m: SparseMatrix):
    """Return ``(dl, m1, dr)`` with ``m = dl m1 dr``, ``m1`` outer-1, ``dl, dr`` diagonal."""
    if not m.is_square():
        raise RigidityError("outer-1 normalization needs a square matrix")
    f = m.field
    col0 = [m.get(i, 0) for i in range(m.rows)]
    row0 = [m.get(0, j) for j in range(m.cols)]
    if any(v == 0 for v in col0 + row0):
        raise RigidityError("matrix is not outer-nonzero")
    dr_vals = [f.div(row0[j], row0[0]) for j in range(m.cols)]
    dense = m.to_dense()
    m1 = SparseMatrix.from_dense(
        [[f.div(dense[i][j], f.mul(col0[i], dr_vals[j])) for j in range(m.cols)] for i in range(m.rows)], f
    )
    return SparseMatrix.diag(col0, f), m1, SparseMatrix.diag(dr_vals, f)


# b-vectors


# n mod 4 -> (b1 uses ceil?, additive constant for b2 as a function of n)
_CASES = {
    0: (False, lambda n: -(n // 4)),
    2: (True, lambda n: -((n + 2) // 4)),
    1: (False, lambda n: -((n - 1) // 4)),
    3: (True, lambda n: -((n + 1) // 4)),
}


def popcounts(n: int) -> np.ndarray:
    x = np.arange(2**n, dtype=np.int64)
    out = np.zeros_like(x)
    while x.any():
        out += x & 1
        x >>= 1
    return out


def b_vectors(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer exponent vectors ``(b1, b2)`` indexed by ``x, y in {0,1}^n``."""
    if n < 1:
        raise RigidityError("n must be positive")
    ceil1, const = _CASES[n % 4]
    w = popcounts(n)
    half_floor, half_ceil = w // 2, (w + 1) // 2
    b1 = half_ceil if ceil1 else half_floor
    b2 = half_ceil + const(n)
    return b1, b2


def inner_products(n: int) -> np.ndarray:
    x = np.arange(2**n, dtype=np.int64)
    return popcounts_of(x[:, None] & x[None, :])


def popcounts_of(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    out = np.zeros_like(a)
    while a.any():
        out += a & 1
        a >>= 1
    return out


def agreement_count(n: int, mode: str = "generic") -> int:
    """Brute-force number of good pairs of the construction."""
    b1, b2 = b_vectors(n)
    diff = b1[:, None] + b2[None, :] - inner_products(n)
    if mode == "generic":
        return int((diff == 0).sum())
    if mode == "wh":
        return int((diff % 2 == 0).sum())
    raise RigidityError(f"unknown mode {mode!r}")


def good_pair_count(n: int, mode: str = "generic") -> int:
    """Closed-form good-pair counts."""
    if n < 1:
        raise RigidityError("n must be positive")
    if mode == "generic":
        if n % 2 == 0:
            return 2**n * comb(n + 1, n // 2)
        return 2 ** (n - 1) * comb(n + 2, (n + 1) // 2)
    if mode == "wh":
        if n % 2 == 0:
            return 2 ** (2 * n - 1) + 2 ** (3 * n // 2 - 1)
        return 2 ** (2 * n - 1) + 2 ** (3 * (n - 1) // 2)
    raise RigidityError(f"unknown mode {mode!r}")


def change_bound(n: int, mode: str = "generic") -> int:
    return 4**n - good_pair_count(n, mode)


def _power_table(omega, lo: int, hi: int, field: Field) -> dict[int, object]:
    return {k: field.power(omega, k) for k in range(lo, hi + 1)}


def rank1_construct_kron2(omega, n: int, field: Field = Q) -> RigidityWitness:
    """Rank-1 witness for ``[[1,1],[1,omega]]^{⊗n}``."""
    omega = field(omega)
    if omega == 0 or omega == 1:
        raise RigidityError("omega must be invertible and different from 1")
    b1, b2 = b_vectors(n)
    powers = _power_table(omega, int(min(b1.min(), b2.min())), int(max(b1.max(), b2.max())), field)
    N = 2**n
    u = SparseMatrix.from_coo(N, 1, range(N), [0] * N, [powers[int(b)] for b in b1], field, trusted=True)
    v = SparseMatrix.from_coo(1, N, [0] * N, range(N), [powers[int(b)] for b in b2], field, trusted=True)
    target = kron_power(outer1(omega, field), n)
    return witness_from_uv(target, u, v, construction="kron2", n=n, omega=field.format(omega))


def rank1_construct_wh(n: int, field: Field = Q) -> RigidityWitness:
    """Rank-1 witness for the Walsh-Hadamard matrix ``H_n`` (characteristic != 2)."""
    if field.characteristic == 2:
        raise RigidityError("Walsh-Hadamard construction needs characteristic != 2")
    w = rank1_construct_kron2(-1, n, field)
    target = hadamard(n, field)
    return witness_from_uv(target, w.u, w.v, construction="wh", n=n)


def rank1_construct_2x2(m: SparseMatrix, n: int) -> RigidityWitness:
    """Rank-1 witness for any outer-nonzero 2x2 ``m`` via outer-1 normalization."""
    if m.shape != (2, 2):
        raise RigidityError("needs a 2x2 matrix")
    dl, m1, dr = outer1_normalize(m)
    w = rank1_construct_kron2(m1.get(1, 1), n, m.field)
    DL, DR = kron_power(dl, n), kron_power(dr, n)
    return witness_from_uv(kron_power(m, n), matmul(DL, w.u), matmul(w.v, DR), construction="kron2-normalized", n=n)


# multisection


def multisection(n: int, s: int, r: int) -> int:
    """``sum_{t = r mod s} C(n, t)`` by direct summation."""
    if s < 1 or not 0 <= r < s:
        raise RigidityError("need s >= 1 and 0 <= r < s")
    return sum(comb(n, t) for t in range(r, n + 1, s))


def multisection4_closed(n: int, r: int) -> int:
    """Roots-of-unity filter for ``s = 4`` evaluated with exact Gaussian integers."""
    r %= 4
    # (1 + i)^n as (re, im)
    re, im = 1, 0
    for _ in range(n):
        re, im = re - im, re + im
    # multiply by i^{-r}
    for _ in range(r):
        re, im = im, -re
    zero_term = (1 if n == 0 else 0) * (-1) ** r
    total = 2**n + 2 * re + zero_term
    assert total % 4 == 0
    return total // 4


# brute-force oracle


def default_pool(m: SparseMatrix) -> list:
    """``{0, ±1}`` for sign matrices, else ``{0} ∪ {w^k : |k| <= n}`` for outer-1 2x2 powers."""
    vals = set(m.data)
    f = m.field
    if vals <= {1, f(-1)}:
        return [0, 1, f(-1)]
    q = m.rows
    n = max(1, q.bit_length() - 1)
    w = m.get(q - 1, q - 1) if q > 1 else 1
    try:
        pool = [0] + [f.power(w, k) for k in range(-n, n + 1)]
    except ZeroDivisionError:
        pool = [0] + sorted(set(m.data), key=str)
    seen, out = set(), []
    for p in pool:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def rank1_oracle(m: SparseMatrix, entry_pool: Sequence | None = None, max_work: int = 5 * 10**7):
    """Minimum changes over ``u v^T`` with ``u`` drawn from ``entry_pool^N``.

    For each ``u`` every column's ``v_y`` is chosen optimally.  The result is
    exact within that class and an upper bound on the true rank-1 rigidity.
    Returns ``(min_changes, witness)``; ties keep the first ``u`` in
    lexicographic pool order.
    """
    if not m.is_square() or m.rows > 16:
        raise RigidityError("oracle handles square matrices up to 16x16")
    f = m.field
    pool = [f(p) for p in (entry_pool if entry_pool is not None else default_pool(m))]
    N = m.rows
    if len(pool) ** N * N * N > max_work:
        raise CapExceeded(f"search space {len(pool)}^{N} exceeds the work cap", {"pool": len(pool), "N": N})
    cols = [[m.get(x, y) for x in range(N)] for y in range(N)]
    zeros_in_col = [sum(1 for a in col if a == 0) for col in cols]
    best, best_u, best_v = None, None, None
    for u in itertools.product(pool, repeat=N):
        agree, vs = 0, []
        inv = [f.inv(a) if a != 0 else None for a in u]
        for y, col in enumerate(cols):
            top, top_t = zeros_in_col[y], 0
            base = sum(1 for x in range(N) if inv[x] is None and col[x] == 0)
            counts: dict = {}
            for x in range(N):
                if inv[x] is not None and col[x] != 0:
                    t = f.mul(col[x], inv[x])
                    counts[t] = counts.get(t, 0) + 1
            for t, cnt in counts.items():
                if base + cnt > top:
                    top, top_t = base + cnt, t
            agree += top
            vs.append(top_t)
        changes = N * N - agree
        if best is None or changes < best:
            best, best_u, best_v = changes, u, vs
    um = SparseMatrix.from_coo(N, 1, range(N), [0] * N, list(best_u), f)
    vm = SparseMatrix.from_coo(1, N, [0] * N, range(N), list(best_v), f)
    return best, witness_from_uv(m, um, vm, construction="oracle")
