"""Named base matrices: Walsh-Hadamard, disjointness, 2x2 outer-1 and literals.

A preset resolves to a :class:`Base`, which remembers when the matrix is a
Kronecker power ``unit^{⊗power}`` of a smaller matrix.  Depth boosting and
mixed-product baselines use that structure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .field import Q, Field
from .serialize import read_smx
from .sparse import SparseMatrix, kron_power


def hadamard1(field: Field = Q) -> SparseMatrix:
    return SparseMatrix.from_dense([[1, 1], [1, -1]], field)


def disjointness1(field: Field = Q) -> SparseMatrix:
    return SparseMatrix.from_dense([[1, 1], [1, 0]], field)


def outer1(omega, field: Field = Q) -> SparseMatrix:
    return SparseMatrix.from_dense([[1, 1], [1, field(omega)]], field)


def hadamard(k: int, field: Field = Q) -> SparseMatrix:
    return kron_power(hadamard1(field), k)


def disjointness(k: int, field: Field = Q) -> SparseMatrix:
    return kron_power(disjointness1(field), k)


@dataclass(frozen=True)
class Base:
    """A base matrix ``matrix = unit^{⊗power}`` with a printable name."""

    name: str
    unit: SparseMatrix
    power: int = 1

    @property
    def matrix(self) -> SparseMatrix:
        return kron_power(self.unit, self.power)

    @property
    def q(self) -> int:
        return self.unit.rows**self.power


_FIELD_SUFFIX = re.compile(r"^(.*)@(GF\d+|Q)$")


def split_field(spec: str, default: Field = Q) -> tuple[str, Field]:
    """Split an optional ``@GF<p>`` suffix off a preset name."""
    m = _FIELD_SUFFIX.match(spec)
    if m is None:
        return spec, default
    return m.group(1), Field.from_tag(m.group(2))


def resolve_base(spec: str, field: Field = Q) -> Base:
    """Resolve ``h<k>``, ``r<k>``, ``omega:<v>``, ``mat:a,b;c,d`` or ``file:<path>``."""
    spec, field = split_field(spec.strip(), field)
    m = re.fullmatch(r"([hr])(\d+)", spec)
    if m:
        k = int(m.group(2))
        if k < 1:
            raise ValueError("preset power must be positive")
        unit = hadamard1(field) if m.group(1) == "h" else disjointness1(field)
        return Base(spec, unit, k)
    if spec.startswith("omega:"):
        return Base(spec, outer1(field.parse(spec[6:]), field), 1)
    if spec.startswith("mat:"):
        rows = [[field.parse(t) for t in row.split(",")] for row in spec[4:].split(";")]
        return Base(spec, SparseMatrix.from_dense(rows, field), 1)
    if spec.startswith("file:"):
        return Base(spec, read_smx(spec[5:]), 1)
    raise ValueError(f"unknown base preset {spec!r}")
