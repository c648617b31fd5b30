"""Sparse synchronous circuits for Kronecker power matrices."""

from .field import GF, Q, Field, FieldError
from .sparse import (
    ShapeError,
    SparseMatrix,
    add,
    equals,
    kron,
    kron_power,
    kron_power_apply,
    matmul,
    sub,
    transpose,
)

__version__ = "0.1.0"
