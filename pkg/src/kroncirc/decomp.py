"""Sum-of-products decompositions ``M = sum_j U_j V_j`` and their statistics.

The statistics follow the usual definitions (natural logs throughout):

* ``G = max{ln(nnz M / q), max_j |ln(nnz U_j / nnz V_j)|}``
* ``E`` = average of ``ln(nnz U_j / nnz V_j)`` weighted by ``sqrt(nnz U_j nnz V_j)``
* ``alpha1 = ln sum_j sqrt(nnz U_j nnz V_j)``, ``alpha2 = ln sqrt(nnz M * q)``
* ``beta = ln(nnz M / q) / (6G) * min{1, -4E / (E + G)}``

A decomposition is imbalanced when ``beta > alpha2 - alpha1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from fractions import Fraction
from typing import Sequence

import mpmath

from .field import Field
from .serialize import FormatError, from_inline, to_inline
from .sparse import SparseMatrix, ShapeError, add, equals, matmul, transpose


class DecompositionError(ValueError):
    """Raised on malformed decompositions or undefined statistics."""


@dataclass(frozen=True)
class FactorPair:
    u: SparseMatrix
    v: SparseMatrix

    def __post_init__(self):
        if self.u.cols != self.v.rows:
            raise ShapeError(f"pair inner dims differ: {self.u.shape} x {self.v.shape}")
        if self.u.field != self.v.field:
            raise DecompositionError("pair factors live in different fields")
        if self.u.nnz == 0 or self.v.nnz == 0:
            raise DecompositionError("zero factor in pair (drop it instead)")

    @property
    def nnz(self) -> tuple[int, int]:
        return (self.u.nnz, self.v.nnz)

    def product(self) -> SparseMatrix:
        return matmul(self.u, self.v)

    def transposed(self) -> "FactorPair":
        return FactorPair(transpose(self.v), transpose(self.u))


def _sum_products(pairs: Sequence[FactorPair], like: SparseMatrix) -> SparseMatrix:
    total = SparseMatrix.zeros(like.rows, like.cols, like.field)
    for p in pairs:
        if p.u.rows != like.rows or p.v.cols != like.cols:
            raise ShapeError(f"pair of shape {p.u.shape} x {p.v.shape} does not fit {like.shape}")
        total = add(total, p.product())
    return total


@dataclass(frozen=True)
class Decomposition:
    """A base matrix with factor pairs, an optional dual and a hard balancer.

    ``unit`` / ``unit_power`` record that ``base = unit^{⊗unit_power}``
    when known; depth boosting and baseline comparisons use it.
    """

    base: SparseMatrix
    pairs: tuple
    dual_pairs: tuple | None = None
    hard_pair: tuple | None = None
    unit: SparseMatrix | None = None
    unit_power: int = 1
    source: str = ""

    def __post_init__(self):
        if not self.base.is_square():
            raise DecompositionError("base must be square")
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if not self.pairs:
            raise DecompositionError("decomposition needs at least one pair")
        if self.dual_pairs is not None:
            object.__setattr__(self, "dual_pairs", tuple(self.dual_pairs))
        if self.hard_pair is not None:
            object.__setattr__(self, "hard_pair", tuple(self.hard_pair))

    @property
    def q(self) -> int:
        return self.base.rows

    @property
    def field(self) -> Field:
        return self.base.field

    @property
    def J(self) -> int:
        return len(self.pairs)

    def dual(self) -> tuple:
        """Explicit dual pairs, or transposes when the base is symmetric."""
        if self.dual_pairs is not None:
            return self.dual_pairs
        if not self.base.is_symmetric():
            raise DecompositionError("asymmetric base needs explicit dual_pairs")
        return tuple(p.transposed() for p in self.pairs)

    def hard(self) -> tuple[SparseMatrix, SparseMatrix]:
        if self.hard_pair is not None:
            return self.hard_pair
        return (SparseMatrix.identity(self.q, self.field), self.base)

    def swapped(self) -> "Decomposition":
        """Exchange the roles of pairs and dual pairs."""
        return replace(self, pairs=self.dual(), dual_pairs=self.pairs)

    def oriented(self) -> tuple["Decomposition", bool]:
        """Return a copy with ``E <= 0`` and whether a swap was needed."""
        if _raw_E(self.pairs) > 0:
            return self.swapped(), True
        return self, False

    def unit_matrix(self) -> tuple[SparseMatrix, int]:
        if self.unit is None:
            return self.base, 1
        return self.unit, self.unit_power


def validate(d: Decomposition) -> bool:
    """Exact check that the pairs (and dual pairs, if given) sum to the base."""
    if not equals(_sum_products(d.pairs, d.base), d.base):
        return False
    if d.dual_pairs is not None and not equals(_sum_products(d.dual_pairs, d.base), d.base):
        return False
    return True


def hard_pair_ok(d: Decomposition) -> bool:
    left, right = d.hard()
    return equals(matmul(left, right), d.base) and equals(matmul(right, left), d.base)


# statistics


def _raw_E(pairs) -> float:
    num = den = 0.0
    for p in pairs:
        u, v = p.nnz
        w = math.sqrt(u * v)
        num += math.log(u / v) * w
        den += w
    return num / den


def ratio(a: int, b: int) -> Fraction:
    """``exp|ln(a/b)|`` as an exact fraction ``>= 1``."""
    return Fraction(max(a, b), min(a, b))


@dataclass(frozen=True)
class DecompStats:
    G: float
    E: float
    alpha1: float
    alpha2: float
    beta: float
    oriented: bool
    one_sided: bool
    imbalanced: bool
    G_ratio: Fraction = dc_field(repr=False, default=Fraction(1))
    hard_ratio: Fraction = dc_field(repr=False, default=Fraction(1))

    @property
    def gap(self) -> float:
        return self.alpha2 - self.alpha1

    def to_json(self) -> dict:
        return {
            "G": self.G,
            "E": self.E,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "beta": self.beta,
            "alpha2_minus_alpha1": self.gap,
            "oriented": self.oriented,
            "one_sided": self.one_sided,
            "imbalanced": self.imbalanced,
        }


def _beta(lnM, G, E, ln=math.log):
    if lnM == 0:
        return 0 * G
    if E + G == 0:
        factor = 1
    else:
        factor = min(1, -4 * E / (E + G))
    return lnM / (6 * G) * factor + 0  # no negative zero when E == 0


def _precise_verdict(pairs, nnz_m: int, q: int, G_ratio: Fraction) -> bool:
    with mpmath.workprec(53 + 30):
        G = mpmath.log(mpmath.mpf(G_ratio.numerator) / G_ratio.denominator)
        ws = [mpmath.sqrt(mpmath.mpf(u) * v) for u, v in pairs]
        E = mpmath.fsum(mpmath.log(mpmath.mpf(u) / v) * w for (u, v), w in zip(pairs, ws)) / mpmath.fsum(ws)
        alpha1 = mpmath.log(mpmath.fsum(ws))
        alpha2 = mpmath.log(mpmath.sqrt(mpmath.mpf(nnz_m) * q))
        lnM = mpmath.log(mpmath.mpf(nnz_m) / q)
        beta = _beta(lnM, G, E)
        return bool(beta > alpha2 - alpha1)


def stats(d: Decomposition) -> DecompStats:
    """Orient ``d`` so that ``E <= 0`` and evaluate the statistics."""
    q, nnz_m = d.q, d.base.nnz
    if nnz_m < q:
        raise DecompositionError(f"nnz(base)={nnz_m} < q={q}: statistics undefined")
    od, flipped = d.oriented()
    pairs = [p.nnz for p in od.pairs]
    left, right = od.hard()
    hard_ratio = ratio(left.nnz, right.nnz)
    G_ratio = max([Fraction(nnz_m, q), hard_ratio] + [ratio(u, v) for u, v in pairs])
    if od.dual_pairs is not None or d.dual_pairs is not None:
        G_ratio = max([G_ratio] + [ratio(*p.nnz) for p in od.dual()])
    G = math.log(G_ratio)
    E = _raw_E(od.pairs)
    if E > 0:
        raise DecompositionError("explicit dual pairs do not orient to E <= 0")
    alpha1 = math.log(sum(math.sqrt(u * v) for u, v in pairs))
    alpha2 = math.log(math.sqrt(nnz_m * q))
    lnM = math.log(nnz_m / q)
    beta = _beta(lnM, G, E) if nnz_m > q else 0.0
    if nnz_m == q:
        imbalanced = False
    elif abs(beta - (alpha2 - alpha1)) < 1e-9:
        imbalanced = _precise_verdict(pairs, nnz_m, q, G_ratio)
    else:
        imbalanced = beta > alpha2 - alpha1
    one_sided = all(u <= v for u, v in pairs)
    return DecompStats(G, E, alpha1, alpha2, beta, flipped, one_sided, imbalanced, G_ratio, hard_ratio)


# generators


def _column(m: SparseMatrix, j: int) -> SparseMatrix:
    return m.submatrix(range(m.rows), [j])


def _basis_row(q: int, j: int, field: Field) -> SparseMatrix:
    return SparseMatrix.from_coo(1, q, [0], [j], [1], field, trusted=True)


def gen_one_hot(m: SparseMatrix) -> Decomposition:
    """Column one-hot pairs ``(m[:, j], e_j^T)``; the dual uses rows ``(e_i, m[i, :])``."""
    if not m.is_square():
        raise DecompositionError("one-hot decomposition needs a square matrix")
    q, f = m.rows, m.field
    col_nnz = m.col_nnz()
    pairs = [FactorPair(_column(m, j), _basis_row(q, j, f)) for j in range(q) if col_nnz[j]]
    row_nnz = m.row_nnz()
    dual = [
        FactorPair(transpose(_basis_row(q, i, f)), m.submatrix([i], range(q))) for i in range(q) if row_nnz[i]
    ]
    return Decomposition(m, pairs, dual_pairs=dual, source="one-hot")


def from_rigidity(w) -> Decomposition:
    """``M = U V + I S`` with dual ``M = U V + S I`` (one-sided when ``nnz S >= q``)."""
    m = w.target
    ident = SparseMatrix.identity(m.rows, m.field)
    uv = FactorPair(w.u, w.v)
    if w.s.nnz == 0:
        return Decomposition(m, [uv], dual_pairs=[uv], source="rigidity")
    return Decomposition(
        m,
        [uv, FactorPair(ident, w.s)],
        dual_pairs=[uv, FactorPair(w.s, ident)],
        hard_pair=(ident, m),
        source="rigidity",
    )


def from_partition(p) -> Decomposition:
    """One rank-1 indicator pair per all-ones rectangle of a 0/1 matrix."""
    base = p.base
    f = base.field
    pairs = []
    for rows, cols in p.rects:
        u = SparseMatrix.from_coo(base.rows, 1, sorted(rows), [0] * len(rows), [1] * len(rows), f, trusted=True)
        v = SparseMatrix.from_coo(1, base.cols, [0] * len(cols), sorted(cols), [1] * len(cols), f, trusted=True)
        pairs.append(FactorPair(u, v))
    return Decomposition(base, pairs, source="partition")


# JSON


def _pairs_json(pairs):
    return [{"U": to_inline(p.u), "V": to_inline(p.v)} for p in pairs]


def _pairs_from_json(objs, field):
    return [FactorPair(from_inline(o["U"], field), from_inline(o["V"], field)) for o in objs]


def to_json(d: Decomposition) -> dict:
    out = {
        "field": d.field.to_json(),
        "q": d.q,
        "base": to_inline(d.base),
        "pairs": _pairs_json(d.pairs),
    }
    if d.dual_pairs is not None:
        out["dual_pairs"] = _pairs_json(d.dual_pairs)
    if d.hard_pair is not None:
        out["hard_pair"] = {"left": to_inline(d.hard_pair[0]), "right": to_inline(d.hard_pair[1])}
    if d.unit is not None:
        out["unit"] = to_inline(d.unit)
        out["unit_power"] = d.unit_power
    if d.source:
        out["source"] = d.source
    return out


def from_json(obj: dict) -> Decomposition:
    try:
        field = Field.from_json(obj.get("field", {"kind": "rational"}))
        base = from_inline(obj["base"], field)
        if "q" in obj and obj["q"] != base.rows:
            raise FormatError(f"q={obj['q']} disagrees with base of size {base.rows}")
        dual = _pairs_from_json(obj["dual_pairs"], field) if obj.get("dual_pairs") is not None else None
        hard = None
        if obj.get("hard_pair") is not None:
            hp = obj["hard_pair"]
            hard = (from_inline(hp["left"], field), from_inline(hp["right"], field))
        unit = from_inline(obj["unit"], field) if obj.get("unit") is not None else None
        return Decomposition(
            base,
            _pairs_from_json(obj["pairs"], field),
            dual_pairs=dual,
            hard_pair=hard,
            unit=unit,
            unit_power=int(obj.get("unit_power", 1)),
            source=obj.get("source", "file"),
        )
    except KeyError as exc:
        raise FormatError(f"decomposition JSON missing key {exc}") from exc
