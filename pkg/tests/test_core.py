from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kroncirc import GF, Q, FieldError, ShapeError, SparseMatrix, add, kron, kron_power, kron_power_apply, matmul, sub, transpose
from kroncirc.presets import disjointness, disjointness1, hadamard, hadamard1, outer1, resolve_base, split_field
from kroncirc.serialize import FormatError, from_inline, from_smx, to_inline, to_smx
from kroncirc.sparse import hstack, matvec, vstack

from .conftest import dense, dense_kron, dense_power, reduce_mod

small_ints = st.integers(-3, 3)
scalars = st.one_of(small_ints, st.fractions(min_value=-3, max_value=3, max_denominator=4))


@st.composite
def matrices(draw, rows=None, cols=None, field=Q, vals=scalars):
    r = draw(st.integers(1, 4)) if rows is None else rows
    c = draw(st.integers(1, 4)) if cols is None else cols
    grid = draw(st.lists(st.lists(vals, min_size=c, max_size=c), min_size=r, max_size=r))
    return SparseMatrix.from_dense(grid, field)


# field


def test_rational_field_normalizes_integral_fractions():
    assert Q(Fraction(4, 2)) == 2 and type(Q(Fraction(4, 2))) is int
    assert Q.parse("-3/6") == Fraction(-1, 2)
    assert Q.format(Fraction(1, 3)) == "1/3"


def test_prime_field_arithmetic():
    f = GF(7)
    assert f(-1) == 6
    assert f(Fraction(1, 3)) == 5
    assert f.inv(3) == 5
    assert f.power(3, -1) == 5
    assert f.power(0, 0) == 1
    assert f.tag == "GF7"


@pytest.mark.parametrize("bad", [4, 1, 2**64 + 13])
def test_prime_field_rejects_bad_moduli(bad):
    with pytest.raises(FieldError):
        GF(bad)


def test_field_json_and_tags_round_trip():
    for f in (Q, GF(5), GF(2**31 - 1)):
        assert f.__class__.from_json(f.to_json()) == f
        assert f.__class__.from_tag(f.tag) == f


def test_zero_has_no_inverse():
    with pytest.raises(ZeroDivisionError):
        Q.inv(0)
    with pytest.raises(FieldError):
        GF(5)(Fraction(1, 5))


# sparse matrices


def test_canonical_storage_drops_zeros_and_sums_duplicates():
    m = SparseMatrix.from_coo(2, 2, [1, 0, 1, 0], [0, 1, 0, 0], [1, 2, -1, 0])
    assert m.nnz == 1
    assert m.entries == [(0, 1, 2)]
    with pytest.raises(ShapeError):
        SparseMatrix.from_coo(2, 2, [0, 0], [0, 0], [1, 1], sum_duplicates=False)


def test_index_arrays_are_read_only():
    m = hadamard1()
    with pytest.raises(ValueError):
        m.indices[0] = 1


def test_kron_convention_first_factor_low_digits():
    a = SparseMatrix.from_dense([[1, 2], [3, 4]])
    b = SparseMatrix.from_dense([[0, 5], [6, 7]])
    k = kron(a, b)
    # k[i1 + 2*i3, i2 + 2*i4] = a[i1,i2] b[i3,i4]
    assert k.get(1 + 2 * 0, 0 + 2 * 1) == a.get(1, 0) * b.get(0, 1)
    assert (dense(k) == dense_kron(a, b)).all()


def test_kron_power_zero_is_identity():
    assert kron_power(hadamard1(), 0) == SparseMatrix.identity(1)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_matmul_matches_dense_oracle(data):
    inner = data.draw(st.integers(1, 4))
    a = data.draw(matrices(cols=inner))
    b = data.draw(matrices(rows=inner))
    assert (dense(matmul(a, b)) == dense(a).dot(dense(b))).all()


@settings(max_examples=40, deadline=None)
@given(matrices(), matrices())
def test_kron_matches_dense_oracle(a, b):
    assert (dense(kron(a, b)) == dense_kron(a, b)).all()


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_add_sub_transpose(data):
    a = data.draw(matrices())
    b = data.draw(matrices(rows=a.rows, cols=a.cols))
    assert (dense(add(a, b)) == dense(a) + dense(b)).all()
    assert sub(add(a, b), b) == a
    assert transpose(transpose(a)) == a
    assert (dense(transpose(a)) == dense(a).T).all()


@settings(max_examples=30, deadline=None)
@given(matrices(rows=2, cols=2), st.integers(0, 4), st.data())
def test_kron_power_apply_matches_materialized(m, n, data):
    x = data.draw(st.lists(scalars, min_size=2**n, max_size=2**n))
    assert kron_power_apply(m, n, x) == matvec(kron_power(m, n), x)


@settings(max_examples=30, deadline=None)
@given(matrices(rows=3, cols=3, field=GF(7), vals=st.integers(0, 6)), st.integers(1, 3), st.data())
def test_prime_field_products_match_reduced_oracle(m, n, data):
    x = data.draw(st.lists(st.integers(0, 6), min_size=3**n, max_size=3**n))
    want = reduce_mod(dense_power(m, n).dot(np.array(x, dtype=object)), 7)
    assert kron_power_apply(m, n, x) == list(want)


def test_field_mismatch_is_rejected():
    with pytest.raises(FieldError):
        add(hadamard1(), hadamard1(GF(5)))


def test_shape_mismatch_is_rejected():
    with pytest.raises(ShapeError):
        matmul(hadamard(1), hadamard(2))


def test_stacking():
    a, b = hadamard1(), disjointness1()
    h = hstack([a, b])
    v = vstack([a, b])
    assert h.shape == (2, 4) and v.shape == (4, 2)
    assert h.nnz == v.nnz == 7


# presets


def test_presets():
    assert hadamard(2) == kron_power(hadamard1(), 2)
    assert disjointness(3).nnz == 27
    assert outer1(2).to_dense() == [[1, 1], [1, 2]]
    b = resolve_base("r3")
    assert b.q == 8 and b.power == 3 and b.matrix == disjointness(3)
    assert resolve_base("mat:2,3;5,7").matrix.to_dense() == [[2, 3], [5, 7]]
    assert resolve_base("h1@GF5").matrix.field == GF(5)
    assert split_field("omega:3@GF7") == ("omega:3", GF(7))
    with pytest.raises(ValueError):
        resolve_base("x9")


# serialization


@settings(max_examples=40, deadline=None)
@given(matrices())
def test_smx_and_inline_round_trip(m):
    assert from_smx(to_smx(m)) == m
    assert from_inline(to_inline(m), Q) == m


def test_smx_round_trip_is_byte_stable():
    m = kron_power(SparseMatrix.from_dense([[Fraction(1, 2), 0], [3, -1]]), 3)
    text = to_smx(m)
    assert to_smx(from_smx(text)) == text


@pytest.mark.parametrize(
    "text",
    [
        "",
        "SMX 2 2 1\n0 0 1\n",
        "SMX 2 2 2 Q\n0 0 1\n",
        "SMX 2 2 1 Q\n0 0 0\n",
        "SMX 2 2 1 Q\n0 0 1.5\n",
        "SMX 2 2 1 GF4\n0 0 1\n",
    ],
)
def test_smx_rejects_malformed_input(text):
    with pytest.raises((FormatError, FieldError, ShapeError)):
        from_smx(text)
