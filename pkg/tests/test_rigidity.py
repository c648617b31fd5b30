from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from kroncirc import GF, Q, SparseMatrix, kron_power, matmul
from kroncirc.errors import CapExceeded
from kroncirc.presets import disjointness1, hadamard, hadamard1, outer1
from kroncirc.rigidity import (
    RigidityError,
    RigidityWitness,
    agreement_count,
    b_vectors,
    change_bound,
    good_pair_count,
    multisection,
    multisection4_closed,
    outer1_normalize,
    rank1_construct_2x2,
    rank1_construct_kron2,
    rank1_construct_wh,
    rank1_oracle,
)

from .conftest import dense


def popcount(x):
    return bin(x).count("1")


def brute_good(n, mode):
    """Pure-Python count of pairs where b1[x] + b2[y] matches <x, y>."""
    b1, b2 = b_vectors(n)
    good = 0
    for x in range(2**n):
        for y in range(2**n):
            diff = int(b1[x]) + int(b2[y]) - popcount(x & y)
            good += diff == 0 if mode == "generic" else diff % 2 == 0
    return good


def dense_changes(w):
    return int((dense(w.target) - dense(w.u).dot(dense(w.v)) != 0).sum())


@pytest.mark.parametrize("n", range(1, 7))
@pytest.mark.parametrize("mode", ["generic", "wh"])
def test_closed_forms_match_brute_force(n, mode):
    assert good_pair_count(n, mode) == brute_good(n, mode) == agreement_count(n, mode)


@pytest.mark.parametrize("n", [7, 8])
def test_closed_forms_match_vectorized_count(n):
    for mode in ("generic", "wh"):
        assert good_pair_count(n, mode) == agreement_count(n, mode)


def test_known_values():
    assert [change_bound(n) for n in range(1, 8)] == [1, 4, 24, 96, 464, 1856, 8320]
    assert [change_bound(n, "wh") for n in range(1, 8)] == [1, 4, 24, 96, 448, 1792, 7680]


@pytest.mark.parametrize("omega", [2, 3])
@pytest.mark.parametrize("n", range(1, 7))
def test_kron2_construction_hits_generic_bound(omega, n):
    w = rank1_construct_kron2(omega, n)
    assert w.verify()
    assert w.changes == change_bound(n) == dense_changes(w)


@pytest.mark.parametrize("n", range(1, 7))
def test_wh_construction(n):
    w = rank1_construct_wh(n)
    assert w.verify() and w.target == hadamard(n)
    assert w.changes == change_bound(n, "wh") == dense_changes(w)


def test_h4_and_h5():
    assert rank1_construct_wh(4).changes == 96
    assert rank1_construct_wh(5).changes == 448


def test_omega_minus_one_behaves_like_hadamard():
    for n in range(1, 7):
        assert rank1_construct_kron2(-1, n).changes == change_bound(n, "wh")


def test_prime_field_witness():
    w = rank1_construct_kron2(3, 4, GF(5))
    assert w.verify() and w.changes == 96


@pytest.mark.parametrize("omega", [0, 1])
def test_degenerate_omega_rejected(omega):
    with pytest.raises(RigidityError):
        rank1_construct_kron2(omega, 3)


def test_wh_needs_odd_characteristic():
    with pytest.raises(RigidityError):
        rank1_construct_wh(2, GF(2))


outer_nonzero = st.lists(
    st.fractions(min_value=-5, max_value=5, max_denominator=3).filter(lambda v: v != 0), min_size=3, max_size=3
)


@settings(max_examples=30, deadline=None)
@given(outer_nonzero, st.fractions(min_value=-5, max_value=5, max_denominator=3))
def test_outer1_normalization_reconstructs(vals, d):
    m = SparseMatrix.from_dense([[vals[0], vals[1]], [vals[2], d]])
    dl, m1, dr = outer1_normalize(m)
    assert matmul(matmul(dl, m1), dr) == m
    assert m1.get(0, 0) == m1.get(0, 1) == m1.get(1, 0) == 1


@settings(max_examples=20, deadline=None)
@given(outer_nonzero, st.fractions(min_value=-5, max_value=5, max_denominator=3), st.integers(1, 4))
def test_any_2x2_gets_a_valid_witness(vals, d, n):
    m = SparseMatrix.from_dense([[vals[0], vals[1]], [vals[2], d]])
    omega = Fraction(d * vals[0], vals[1] * vals[2])
    assume(omega not in (0, 1))
    w = rank1_construct_2x2(m, n)
    assert w.verify()
    assert w.changes <= change_bound(n)


def test_normalized_generic_base():
    w = rank1_construct_2x2(SparseMatrix.from_dense([[2, 3], [5, 7]]), 4)
    assert w.verify() and w.changes == 96


@pytest.mark.parametrize("n", range(0, 25))
def test_multisection_closed_form(n):
    for r in range(4):
        assert multisection4_closed(n, r) == multisection(n, 4, r)


def test_oracle_small_cases():
    assert rank1_oracle(hadamard1())[0] == 1
    assert rank1_oracle(hadamard(2))[0] == 4
    assert rank1_oracle(disjointness1())[0] == 1
    best, w = rank1_oracle(hadamard(3))
    assert best == 22 and w.verify() and w.changes == 22
    assert best <= change_bound(3, "wh")


def test_oracle_work_cap():
    with pytest.raises(CapExceeded):
        rank1_oracle(hadamard(4), max_work=10)


def test_witness_json_round_trip():
    w = rank1_construct_kron2(Fraction(1, 2), 3)
    back = RigidityWitness.from_json(w.to_json())
    assert back.verify() and back.changes == w.changes
