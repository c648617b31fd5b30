import math

import pytest
from hypothesis import given, settings, strategies as st

from kroncirc import Q, SparseMatrix
from kroncirc.decomp import (
    DecompositionError,
    Decomposition,
    FactorPair,
    from_json,
    from_partition,
    from_rigidity,
    gen_one_hot,
    stats,
    to_json,
    validate,
)
from kroncirc.partition import RectPartition
from kroncirc.presets import disjointness1, hadamard1
from kroncirc.rigidity import rank1_construct_wh


def r1_rows():
    return from_partition(RectPartition(disjointness1(), [((0,), (0, 1)), ((1,), (0,))]))


def test_r1_row_partition_statistics():
    st_ = stats(r1_rows())
    # pairs have sparsities (1, 2) and (1, 1)
    a1 = math.log(math.sqrt(2) + 1)
    a2 = math.log(math.sqrt(3 * 2))
    E = (math.sqrt(2) * math.log(1 / 2)) / (math.sqrt(2) + 1)
    G = math.log(2)
    beta = math.log(3 / 2) / (6 * G) * min(1, -4 * E / (E + G))
    assert st_.alpha1 == pytest.approx(a1)
    assert st_.alpha2 == pytest.approx(a2)
    assert st_.E == pytest.approx(E)
    assert st_.G == pytest.approx(G)
    assert st_.beta == pytest.approx(beta)
    assert st_.imbalanced and st_.one_sided and not st_.oriented


def test_one_hot_h1_is_reoriented():
    d = gen_one_hot(hadamard1())
    assert validate(d)
    st_ = stats(d)
    # column pairs have sparsities (2, 1): E = ln 2 before orientation
    assert st_.oriented
    assert st_.E == pytest.approx(-math.log(2))
    assert st_.alpha1 == pytest.approx(1.5 * math.log(2))
    assert st_.alpha2 == pytest.approx(st_.alpha1)
    assert st_.beta == pytest.approx(1 / 6)  # E + G = 0 takes the min as 1
    assert st_.one_sided and st_.imbalanced


def test_validate_rejects_wrong_sum():
    d = r1_rows()
    bad = Decomposition(d.base, d.pairs[:1])
    assert not validate(bad)


def test_asymmetric_base_needs_dual():
    m = SparseMatrix.from_dense([[1, 1], [0, 1]])
    pairs = [FactorPair(m, SparseMatrix.identity(2))]
    d = Decomposition(m, pairs)
    with pytest.raises(DecompositionError):
        d.dual()
    assert gen_one_hot(m).dual()


def test_base_sparser_than_identity_is_rejected():
    m = SparseMatrix.from_dense([[1, 0], [0, 0]])
    d = Decomposition(m, [FactorPair(SparseMatrix.from_dense([[1], [0]]), SparseMatrix.from_dense([[1, 0]]))])
    with pytest.raises(DecompositionError):
        stats(d)


def test_square_base_with_nnz_q_is_not_imbalanced():
    d = gen_one_hot(SparseMatrix.identity(2))
    st_ = stats(d)
    assert st_.beta == 0 and not st_.imbalanced


def test_zero_factor_is_rejected():
    with pytest.raises(DecompositionError):
        FactorPair(SparseMatrix.zeros(2, 1), SparseMatrix.from_dense([[1, 1]]))


def test_rigidity_decomposition_is_one_sided():
    w = rank1_construct_wh(4)
    d = from_rigidity(w)
    assert validate(d)
    st_ = stats(d)
    assert st_.one_sided and d.J == 2


def test_json_round_trip():
    for d in (r1_rows(), gen_one_hot(hadamard1()), from_rigidity(rank1_construct_wh(3))):
        back = from_json(to_json(d))
        assert validate(back)
        assert to_json(back) == to_json(d)
        assert stats(back) == stats(d)


@st.composite
def zero_one(draw):
    q = draw(st.integers(1, 4))
    grid = draw(st.lists(st.lists(st.integers(0, 1), min_size=q, max_size=q), min_size=q, max_size=q))
    grid[0][0] = 1
    for i in range(q):
        grid[i][i] = 1  # nnz >= q
    return SparseMatrix.from_dense(grid, Q)


@settings(max_examples=40, deadline=None)
@given(zero_one())
def test_one_hot_always_validates(m):
    d = gen_one_hot(m)
    assert validate(d)
    st_ = stats(d)
    assert st_.alpha1 <= st_.alpha2 + 1e-12  # Cauchy-Schwarz
    assert st_.E <= 1e-12  # reported after orientation
    assert math.isfinite(st_.beta)


@settings(max_examples=40, deadline=None)
@given(zero_one())
def test_swapping_twice_is_identity(m):
    d = gen_one_hot(m)
    assert to_json(d.swapped().swapped()) == to_json(d)
