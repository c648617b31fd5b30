"""Exact sparse matrices in canonical CSR form.

Index arrays live in read-only numpy int64 arrays; values are a tuple of exact
scalars (see :mod:`kroncirc.field`).  Entries are always sorted row-major with
no duplicates and no stored zeros, so two equal matrices have identical
storage and identical SMX text.

Kronecker convention: ``kron(a, b)[i1 + a.rows*i3, i2 + a.cols*i4] =
a[i1, i2] * b[i3, i4]``.  The first factor owns the low-order digits, which is
``numpy.kron(b, a)`` in numpy's convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

import numpy as np

from .field import Q, Field, FieldError, Scalar


class ShapeError(ValueError):
    """Raised on dimension mismatches."""


def _ro(arr) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def _normalizer(field: Field):
    if field.is_prime:
        p = field.modulus
        return lambda v: v % p

    def norm(v):
        if type(v) is Fraction and v.denominator == 1:
            return v.numerator
        return v

    return norm


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    rows: int
    cols: int
    indptr: np.ndarray
    indices: np.ndarray
    data: tuple
    field: Field = Q

    # construction

    @classmethod
    def _raw(cls, rows, cols, indptr, indices, data, field) -> "SparseMatrix":
        return cls(int(rows), int(cols), _ro(indptr), _ro(indices), tuple(data), field)

    @classmethod
    def from_coo(
        cls,
        rows: int,
        cols: int,
        r: Sequence[int] | np.ndarray,
        c: Sequence[int] | np.ndarray,
        vals: Sequence,
        field: Field = Q,
        *,
        trusted: bool = False,
        sum_duplicates: bool = True,
    ) -> "SparseMatrix":
        """Build from coordinate lists.

        With ``trusted=True`` the caller promises values are already field
        normalized, nonzero and coordinates are unique; only sorting happens.
        """
        if rows < 1 or cols < 1:
            raise ShapeError(f"bad shape {rows}x{cols}")
        r = np.asarray(r, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        if len(r) != len(c) or len(r) != len(vals):
            raise ShapeError("coordinate and value lists differ in length")
        if len(r) and (r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols):
            raise ShapeError("coordinate out of range")
        if not trusted:
            vals = [field(v) for v in vals]
        order = np.lexsort((c, r))
        r = r[order]
        c = c[order]
        vals = [vals[i] for i in order.tolist()]
        if not trusted and len(r) > 1:
            same = (r[1:] == r[:-1]) & (c[1:] == c[:-1])
            if same.any():
                if not sum_duplicates:
                    raise ShapeError("duplicate coordinates")
                norm = _normalizer(field)
                keep_r, keep_c, keep_v = [int(r[0])], [int(c[0])], [vals[0]]
                for i in range(1, len(r)):
                    if same[i - 1]:
                        keep_v[-1] = norm(keep_v[-1] + vals[i])
                    else:
                        keep_r.append(int(r[i]))
                        keep_c.append(int(c[i]))
                        keep_v.append(vals[i])
                r = np.asarray(keep_r, dtype=np.int64)
                c = np.asarray(keep_c, dtype=np.int64)
                vals = keep_v
        if not trusted:
            nz = [i for i, v in enumerate(vals) if v != 0]
            if len(nz) != len(vals):
                idx = np.asarray(nz, dtype=np.int64)
                r, c = r[idx], c[idx]
                vals = [vals[i] for i in nz]
        indptr = np.zeros(rows + 1, dtype=np.int64)
        if len(r):
            np.cumsum(np.bincount(r, minlength=rows), out=indptr[1:])
        return cls._raw(rows, cols, indptr, c, vals, field)

    @classmethod
    def from_entries(cls, rows, cols, entries: Iterable, field: Field = Q) -> "SparseMatrix":
        entries = list(entries)
        r = [e[0] for e in entries]
        c = [e[1] for e in entries]
        v = [e[2] for e in entries]
        return cls.from_coo(rows, cols, r, c, v, field)

    @classmethod
    def from_dense(cls, dense: Sequence[Sequence], field: Field = Q) -> "SparseMatrix":
        rows = len(dense)
        cols = len(dense[0]) if rows else 0
        if any(len(row) != cols for row in dense):
            raise ShapeError("ragged dense input")
        entries = [(i, j, v) for i, row in enumerate(dense) for j, v in enumerate(row)]
        return cls.from_entries(rows, cols, entries, field)

    @classmethod
    def identity(cls, n: int, field: Field = Q) -> "SparseMatrix":
        idx = np.arange(n, dtype=np.int64)
        return cls._raw(n, n, np.arange(n + 1), idx, (1,) * n, field)

    @classmethod
    def zeros(cls, rows: int, cols: int, field: Field = Q) -> "SparseMatrix":
        return cls._raw(rows, cols, np.zeros(rows + 1), np.zeros(0), (), field)

    @classmethod
    def diag(cls, values: Sequence, field: Field = Q) -> "SparseMatrix":
        n = len(values)
        return cls.from_coo(n, n, range(n), range(n), list(values), field)

    # accessors

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return len(self.data)

    def row_indices(self) -> np.ndarray:
        """Row index of every stored entry."""
        return np.repeat(np.arange(self.rows, dtype=np.int64), np.diff(self.indptr))

    @property
    def entries(self) -> list[tuple[int, int, Scalar]]:
        return list(zip(self.row_indices().tolist(), self.indices.tolist(), self.data))

    def row(self, i: int) -> list[tuple[int, Scalar]]:
        lo, hi = int(self.indptr[i]), int(self.indptr[i + 1])
        return list(zip(self.indices[lo:hi].tolist(), self.data[lo:hi]))

    def row_dicts(self) -> list[dict[int, Scalar]]:
        ptr = self.indptr.tolist()
        idx = self.indices.tolist()
        data = self.data
        return [dict(zip(idx[ptr[i] : ptr[i + 1]], data[ptr[i] : ptr[i + 1]])) for i in range(self.rows)]

    def get(self, i: int, j: int) -> Scalar:
        lo, hi = int(self.indptr[i]), int(self.indptr[i + 1])
        pos = lo + int(np.searchsorted(self.indices[lo:hi], j))
        if pos < hi and self.indices[pos] == j:
            return self.data[pos]
        return 0

    def to_dense(self) -> list[list[Scalar]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for i, j, v in self.entries:
            out[i][j] = v
        return out

    def col_nnz(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=self.cols)

    def row_nnz(self) -> np.ndarray:
        return np.diff(self.indptr)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def is_symmetric(self) -> bool:
        return self.is_square() and equals(self, transpose(self))

    def is_zero_one(self) -> bool:
        return all(v == 1 for v in self.data)

    def is_integral(self) -> bool:
        return all(type(v) is int for v in self.data)

    def denominator_lcm(self) -> int:
        out = 1
        for v in self.data:
            if type(v) is Fraction:
                out = lcm(out, v.denominator)
        return out

    def max_abs_row_sum(self) -> Fraction | int:
        if self.field.is_prime:
            raise FieldError("absolute values need the rational field")
        best = 0
        ptr = self.indptr.tolist()
        for i in range(self.rows):
            s = sum(abs(v) for v in self.data[ptr[i] : ptr[i + 1]])
            best = max(best, s)
        return best

    def map_values(self, fn, field: Field | None = None) -> "SparseMatrix":
        """Apply ``fn`` entrywise to stored values (zero results are dropped)."""
        field = field or self.field
        return SparseMatrix.from_coo(
            self.rows, self.cols, self.row_indices(), self.indices, [fn(v) for v in self.data], field
        )

    def scale(self, s: Scalar) -> "SparseMatrix":
        s = self.field(s)
        norm = _normalizer(self.field)
        if s == 0:
            return SparseMatrix.zeros(self.rows, self.cols, self.field)
        return SparseMatrix._raw(
            self.rows, self.cols, self.indptr, self.indices, [norm(v * s) for v in self.data], self.field
        )

    def to_field(self, field: Field) -> "SparseMatrix":
        """Reduce into ``field`` (e.g. a rational matrix into GF(p))."""
        if field == self.field:
            return self
        return self.map_values(field, field)

    def submatrix(self, row_ids: Sequence[int], col_ids: Sequence[int]) -> "SparseMatrix":
        col_pos = {c: k for k, c in enumerate(col_ids)}
        r, c, v = [], [], []
        for k, i in enumerate(row_ids):
            for j, val in self.row(i):
                if j in col_pos:
                    r.append(k)
                    c.append(col_pos[j])
                    v.append(val)
        return SparseMatrix.from_coo(len(row_ids), len(col_ids), r, c, v, self.field, trusted=True)

    def __repr__(self) -> str:
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz}, field={self.field.tag})"

    def __eq__(self, other) -> bool:
        return isinstance(other, SparseMatrix) and equals(self, other)

    __hash__ = None


def _check_field(a: SparseMatrix, b: SparseMatrix) -> Field:
    if a.field != b.field:
        raise FieldError(f"field mismatch: {a.field.tag} vs {b.field.tag}")
    return a.field


def equals(a: SparseMatrix, b: SparseMatrix) -> bool:
    _check_field(a, b)
    return (
        a.shape == b.shape
        and np.array_equal(a.indptr, b.indptr)
        and np.array_equal(a.indices, b.indices)
        and a.data == b.data
    )


def transpose(a: SparseMatrix) -> SparseMatrix:
    return SparseMatrix.from_coo(a.cols, a.rows, a.indices, a.row_indices(), a.data, a.field, trusted=True)


def _combine(a: SparseMatrix, b: SparseMatrix, sign: int) -> SparseMatrix:
    field = _check_field(a, b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    vals = list(a.data) + [-v for v in b.data] if sign < 0 else list(a.data) + list(b.data)
    r = np.concatenate([a.row_indices(), b.row_indices()])
    c = np.concatenate([a.indices, b.indices])
    return SparseMatrix.from_coo(a.rows, a.cols, r, c, vals, field)


def add(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    return _combine(a, b, 1)


def sub(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    return _combine(a, b, -1)


def matmul(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    field = _check_field(a, b)
    if a.cols != b.rows:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    norm = _normalizer(field)
    brows = b.row_dicts()
    r_out, c_out, v_out = [], [], []
    ptr = a.indptr.tolist()
    idx = a.indices.tolist()
    for i in range(a.rows):
        acc: dict[int, Scalar] = {}
        for pos in range(ptr[i], ptr[i + 1]):
            av = a.data[pos]
            for j, bv in brows[idx[pos]].items():
                acc[j] = acc.get(j, 0) + av * bv
        for j in sorted(acc):
            v = norm(acc[j])
            if v != 0:
                r_out.append(i)
                c_out.append(j)
                v_out.append(v)
    return SparseMatrix.from_coo(a.rows, b.cols, r_out, c_out, v_out, field, trusted=True)


def kron(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    """Kronecker product with ``a`` on the low-order index digits."""
    field = _check_field(a, b)
    norm = _normalizer(field)
    ar, ac = a.row_indices(), a.indices
    br, bc = b.row_indices(), b.indices
    rows = (ar[None, :] + a.rows * br[:, None]).ravel()
    cols = (ac[None, :] + a.cols * bc[:, None]).ravel()
    ad = a.data
    vals = [norm(y * x) for y in b.data for x in ad]
    return SparseMatrix.from_coo(a.rows * b.rows, a.cols * b.cols, rows, cols, vals, field, trusted=True)


def kron_all(mats: Sequence[SparseMatrix]) -> SparseMatrix:
    """``mats[0] ⊗ mats[1] ⊗ ...`` (``mats[0]`` on the lowest digits)."""
    if not mats:
        raise ValueError("empty Kronecker product")
    out = mats[0]
    for m in mats[1:]:
        out = kron(out, m)
    return out


def kron_power(m: SparseMatrix, n: int) -> SparseMatrix:
    if n < 0:
        raise ValueError("negative power")
    if n == 0:
        return SparseMatrix.identity(1, m.field)
    return kron_all([m] * n)


def hstack(blocks: Sequence[SparseMatrix]) -> SparseMatrix:
    rows = blocks[0].rows
    r, c, v, off = [], [], [], 0
    for blk in blocks:
        if blk.rows != rows:
            raise ShapeError("hstack row mismatch")
        r.append(blk.row_indices())
        c.append(blk.indices + off)
        v.extend(blk.data)
        off += blk.cols
    return SparseMatrix.from_coo(rows, off, np.concatenate(r), np.concatenate(c), v, blocks[0].field, trusted=True)


def vstack(blocks: Sequence[SparseMatrix]) -> SparseMatrix:
    return transpose(hstack([transpose(b) for b in blocks]))


def matvec(m: SparseMatrix, x: Sequence[Scalar]) -> list[Scalar]:
    if len(x) != m.cols:
        raise ShapeError(f"vector length {len(x)} != {m.cols}")
    norm = _normalizer(m.field)
    ptr = m.indptr.tolist()
    idx = m.indices.tolist()
    out = []
    for i in range(m.rows):
        s = 0
        for pos in range(ptr[i], ptr[i + 1]):
            s += m.data[pos] * x[idx[pos]]
        out.append(norm(s))
    return out


def kron_power_apply(m: SparseMatrix, n: int, x: Sequence[Scalar]) -> list[Scalar]:
    """Exact ``m^{⊗n} x`` by one pass per tensor axis, without materializing."""
    if not m.is_square():
        raise ShapeError("kron_power_apply needs a square matrix")
    q = m.rows
    if len(x) != q**n:
        raise ShapeError(f"vector length {len(x)} != {q}^{n}")
    norm = _normalizer(m.field)
    rows = [m.row(i) for i in range(q)]
    cur = [m.field(v) for v in x]
    stride = 1
    for _ in range(n):
        nxt = [0] * len(cur)
        block = stride * q
        for base in range(0, len(cur), block):
            for off in range(stride):
                start = base + off
                vec = cur[start : start + block : stride]
                for i, row in enumerate(rows):
                    s = 0
                    for j, v in row:
                        s += v * vec[j]
                    nxt[start + i * stride] = norm(s)
        cur = nxt
        stride *= q
    return cur
