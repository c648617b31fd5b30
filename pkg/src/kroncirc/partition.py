"""Partitions of the 1-entries of a 0/1 matrix into all-ones rectangles.

A partition into rectangles ``R_j x C_j`` is a decomposition
``M = sum_j 1_{R_j} 1_{C_j}^T`` with ``alpha1 = ln sum_j sqrt(|R_j| |C_j|)``.
``partition_search`` finds the partition minimizing that sum exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import CapExceeded
from .serialize import from_inline, to_inline
from .field import Field
from .sparse import SparseMatrix


class PartitionError(ValueError):
    """Raised on invalid partitions, infeasible searches or exceeded caps."""


Rect = tuple  # (rows tuple, cols tuple), both sorted


@dataclass(frozen=True)
class RectPartition:
    base: SparseMatrix
    rects: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "rects", tuple((tuple(sorted(r)), tuple(sorted(c))) for r, c in self.rects)
        )

    @property
    def objective(self) -> float:
        return sum(math.sqrt(len(r) * len(c)) for r, c in self.rects)

    @property
    def alpha1(self) -> float:
        return math.log(self.objective)

    def validate(self) -> bool:
        """All-ones blocks that cover every 1-entry exactly once."""
        _check_zero_one(self.base)
        seen = set()
        for rows, cols in self.rects:
            if not rows or not cols:
                return False
            for r in rows:
                for c in cols:
                    if self.base.get(r, c) != 1 or (r, c) in seen:
                        return False
                    seen.add((r, c))
        return len(seen) == self.base.nnz

    def to_json(self) -> dict:
        return {
            "base": to_inline(self.base),
            "rects": [{"rows": list(r), "cols": list(c)} for r, c in self.rects],
        }

    @classmethod
    def from_json(cls, obj: dict, field: Field) -> "RectPartition":
        base = from_inline(obj["base"], field)
        return cls(base, [(tuple(o["rows"]), tuple(o["cols"])) for o in obj["rects"]])


def _check_zero_one(base: SparseMatrix, max_dim: int = 16):
    if any(v != 1 for v in base.data):
        raise PartitionError("base must be a 0/1 matrix")
    if base.rows > max_dim or base.cols > max_dim:
        raise PartitionError(f"dimension cap {max_dim} exceeded")


# recursive partition of R_n (squares and 2:1 rectangles)


@dataclass(frozen=True)
class JSState:
    s: int  # sum of square side lengths
    r: int  # sum of rectangle shorter sides

    @property
    def stated_bound(self) -> int:
        """Size bound ``2 (s + r)`` as stated for the recursive partition."""
        return 2 * (self.s + self.r)

    @property
    def wires(self) -> int:
        """Exact wire count: an ``s x s`` square costs ``2s``, a ``2s x s`` rectangle ``3s``."""
        return 2 * self.s + 3 * self.r


def js_recurrence(n: int) -> tuple[JSState, int]:
    """``(s_n, r_n) = [[1, 2], [1, 1]] (s_{n-1}, r_{n-1})`` from ``s_1 = r_1 = 1``."""
    if n < 1:
        raise ValueError("n must be positive")
    s, r = 1, 1
    for _ in range(n - 1):
        s, r = s + 2 * r, s + r
    st = JSState(s, r)
    return st, st.stated_bound


# rectangles


def _supports(base: SparseMatrix) -> list[int]:
    return [sum(1 << c for c, _ in base.row(i)) for i in range(base.rows)]


def _bits(mask: int) -> tuple:
    out, i = [], 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def enumerate_rectangles(base: SparseMatrix) -> list[Rect]:
    """All maximal all-ones rectangles, by closing every column subset."""
    _check_zero_one(base)
    sup = _supports(base)
    full_rows = (1 << base.rows) - 1
    found = set()
    for cmask in range(1, 1 << base.cols):
        rmask = sum(1 << i for i, s in enumerate(sup) if s & cmask == cmask)
        if not rmask:
            continue
        closed = (1 << base.cols) - 1
        for i in _bits(rmask):
            closed &= sup[i]
        rclosed = sum(1 << i for i, s in enumerate(sup) if s & closed == closed) & full_rows
        found.add((rclosed, closed))
    return sorted((_bits(r), _bits(c)) for r, c in found)


def all_rectangles(base: SparseMatrix, cap: int = 200_000) -> list[Rect]:
    """Every all-ones rectangle (sub-rectangles of maximal ones included)."""
    _check_zero_one(base)
    sup = _supports(base)
    out = []
    nonzero_rows = [i for i in range(base.rows) if sup[i]]
    for size in range(1, len(nonzero_rows) + 1):
        for rows in combinations(nonzero_rows, size):
            common = (1 << base.cols) - 1
            for i in rows:
                common &= sup[i]
            cols = _bits(common)
            for csize in range(1, len(cols) + 1):
                for cs in combinations(cols, csize):
                    out.append((rows, cs))
                    if len(out) > cap:
                        raise CapExceeded("rectangle enumeration exceeds the cap", {"cap": cap})
    return out


# exact search


@dataclass
class SearchResult:
    partition: RectPartition
    objective: float
    nodes: int


_EPS = 1e-9


def partition_search(
    base: SparseMatrix,
    max_parts: int | None = None,
    objective: str = "alpha1",
    max_states: int = 2**22,
) -> RectPartition:
    """Exact minimum of ``sum_j sqrt(|R_j| |C_j|)`` over partitions with at most ``max_parts`` parts.

    Branch and bound over exact covers: branch on the uncovered 1-entry with
    the fewest rectangles still fitting, try those by descending area, prune
    with ``sum over uncovered cells of 1/sqrt(largest fitting rectangle at
    that cell)`` and with a memo of the cheapest cost seen for each
    (uncovered set, parts used).  Ties go to fewer parts, then to the lexicographically smallest
    sorted rectangle list.
    """
    return partition_search_full(base, max_parts, objective, max_states).partition


def partition_search_full(base, max_parts=None, objective="alpha1", max_states=2**22, upper=None) -> SearchResult:
    if objective != "alpha1":
        raise PartitionError(f"unknown objective {objective!r}")
    _check_zero_one(base)
    if base.nnz > 32:
        raise PartitionError("search handles at most 32 one-entries")
    if base.nnz == 0:
        raise PartitionError("nothing to partition")
    cells = [(r, c) for r, c, _ in base.entries]  # row-major
    cell_id = {rc: i for i, rc in enumerate(cells)}
    limit = max_parts if max_parts is not None else len(cells)
    rects = all_rectangles(base)
    masks, costs = [], []
    for rows, cols in rects:
        m = 0
        for r in rows:
            for c in cols:
                m |= 1 << cell_id[(r, c)]
        masks.append(m)
        costs.append(math.sqrt(len(rows) * len(cols)))
    best_area = [0] * len(cells)
    by_cell = [[] for _ in cells]
    for k, (rows, cols) in enumerate(rects):
        area = len(rows) * len(cols)
        for i in _bits(masks[k]):
            best_area[i] = max(best_area[i], area)
            by_cell[i].append(k)
    for lst in by_cell:
        lst.sort(key=lambda k: (-len(rects[k][0]) * len(rects[k][1]), rects[k]))
    share = [1 / math.sqrt(a) for a in best_area]

    full = (1 << len(cells)) - 1
    best = {"cost": math.inf if upper is None else upper, "parts": None, "key": None, "choice": None}
    seen: dict = {}
    nodes = 0

    mask_arr = np.array(masks, dtype=np.int64)
    area_arr = np.array([len(r) * len(c) for r, c in rects], dtype=np.float64)
    incidence = np.array([[(m >> i) & 1 for m in masks] for i in range(len(cells))], dtype=np.float64)

    def bound_and_branch(mask, parts_left):
        # each uncovered cell pays at least 1/sqrt(largest rectangle that still
        # fits around it); by concavity a cover of u cells by rectangles of area
        # at most A costs at least full*sqrt(A) + sqrt(rem).  Branch on the
        # uncovered cell with the fewest fitting rectangles.
        fits = (mask_arr & mask) == mask_arr
        areas = area_arr[fits]
        sub_inc = incidence[:, fits]
        live = list(_bits(mask))
        cell_best = (sub_inc[live] * areas).max(axis=1)
        per_cell = float(np.sum(1 / np.sqrt(cell_best)))
        A = int(areas.max())
        full, rem = divmod(len(live), A)
        if full + (1 if rem else 0) > parts_left:
            return math.inf, None
        counts = sub_inc[live].sum(axis=1)
        cell = live[int(np.argmin(counts))]
        return max(per_cell, full * math.sqrt(A) + math.sqrt(rem)), cell

    def consider(chosen, cost):
        key = sorted(rects[k] for k in chosen)
        c0 = best["cost"]
        better = (
            cost < c0 - _EPS
            or (abs(cost - c0) <= _EPS and (best["key"] is None or (len(chosen), key) < (best["parts"], best["key"])))
        )
        if better:
            best.update(cost=cost, parts=len(chosen), key=key, choice=list(chosen))

    chosen: list[int] = []

    def dfs(uncovered, cost):
        nonlocal nodes
        nodes += 1
        if not uncovered:
            consider(chosen, cost)
            return
        if len(chosen) >= limit:
            return
        lb, cell = bound_and_branch(uncovered, limit - len(chosen))
        if cell is None or cost + lb > best["cost"] + _EPS:
            return
        state = (uncovered, len(chosen))
        prev = seen.get(state)
        if prev is not None and cost > prev + _EPS:
            return
        if prev is None:
            if len(seen) >= max_states:
                raise CapExceeded("memo cap exceeded", {"states": len(seen), "nodes": nodes})
            seen[state] = cost
        elif cost < prev:
            seen[state] = cost
        for k in by_cell[cell]:
            m = masks[k]
            if m & uncovered == m:
                chosen.append(k)
                dfs(uncovered & ~m, cost + costs[k])
                chosen.pop()

    dfs(full, 0.0)
    if best["choice"] is None:
        raise PartitionError(f"no partition with at most {limit} parts")
    part = RectPartition(base, [rects[k] for k in sorted(best["choice"], key=lambda k: rects[k])])
    return SearchResult(part, best["cost"], nodes)
