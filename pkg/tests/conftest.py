"""Shared fixtures and independent dense oracles."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from kroncirc.decomp import from_partition
from kroncirc.partition import partition_search
from kroncirc.presets import disjointness


def dense(m):
    """Object-dtype numpy array of exact scalars."""
    return np.array(m.to_dense(), dtype=object)


def dense_kron(a, b):
    """Oracle for the library's convention: first factor owns the low digits."""
    return np.kron(dense(b), dense(a))


def dense_power(m, n):
    out = np.array([[1]], dtype=object)
    for _ in range(n):
        out = np.kron(out, dense(m))
    return out


def dense_chain(factors):
    out = dense(factors[0])
    for f in factors[1:]:
        out = out.dot(dense(f))
    return out


def reduce_mod(arr, p):
    return np.vectorize(lambda v: Fraction(v).numerator * pow(Fraction(v).denominator, -1, p) % p, otypes=[object])(arr)


@pytest.fixture(scope="session")
def r3_partition():
    return partition_search(disjointness(3), 8)


@pytest.fixture(scope="session")
def r3_decomp(r3_partition):
    return from_partition(r3_partition)


def corrupt(circuit, rng):
    """Copy of ``circuit`` with one stored entry shifted by a small nonzero delta."""
    from kroncirc.builder import Circuit
    from kroncirc.sparse import SparseMatrix

    sizes = [f.nnz for f in circuit.factors]
    layer = int(rng.choice(len(sizes), p=np.array(sizes) / sum(sizes)))
    f = circuit.factors[layer]
    k = int(rng.integers(f.nnz))
    delta = int(rng.choice([-2, -1, 1, 2]))
    ents = f.entries
    rows = [r for r, _, _ in ents]
    cols = [c for _, c, _ in ents]
    vals = [v for _, _, v in ents]
    vals[k] = f.field(vals[k] + delta)
    bad = SparseMatrix.from_coo(f.rows, f.cols, rows, cols, vals, field=f.field)
    factors = list(circuit.factors)
    factors[layer] = bad
    return Circuit(factors, dict(circuit.meta)), (layer, rows[k], cols[k])
