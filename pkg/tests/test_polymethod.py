import itertools
from math import comb

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from kroncirc import GF, Q, SparseMatrix
from kroncirc.errors import CapExceeded
from kroncirc.polymethod import (
    bad_pair_count,
    gbinom,
    interpolation_poly,
    pattern_counts,
    polymethod_decomp,
    union_bound,
    window_polys,
)
from kroncirc.rigidity import RigidityError

GENERIC = SparseMatrix.from_dense([[2, 3], [5, 7]])


@given(st.integers(-20, 20), st.integers(0, 8))
def test_gbinom_matches_sympy(a, i):
    assert gbinom(a, i) == sympy.binomial(a, i)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(-1, 3), st.lists(st.integers(-9, 9), min_size=4, max_size=4))
def test_interpolation_is_exact_on_window(r, k, consts):
    consts = consts[:r]
    p = interpolation_poly(Q, r + k + 2, r, k, consts)
    lo, hi = p.window
    assert (lo, hi) == (k + 1, k + r)
    assert [p.at_weight(w) for w in range(lo, hi + 1)] == consts
    # on Boolean inputs e_j(z) = C(|z|, j)
    b = p.elementary_coeffs()
    for w in range(0, r + k + 3):
        assert sum(bj * comb(w, j) for j, bj in enumerate(b)) == p.at_weight(w)


def test_interpolation_over_gf2():
    p = interpolation_poly(GF(2), 6, 3, 1, [1, 0, 1])
    assert [p.at_weight(w) for w in (2, 3, 4)] == [1, 0, 1]


def test_interpolation_preconditions():
    with pytest.raises(RigidityError):
        interpolation_poly(Q, 2, 3, 0, [1, 2, 3])
    with pytest.raises(RigidityError):
        interpolation_poly(Q, 5, 1, -2, [1])


def brute_bad(q, n, l, h):
    bad = 0
    for x in range(q**n):
        for y in range(q**n):
            counts = pattern_counts(x, y, q, n)
            if any(not l <= counts.get((s, t), 0) <= h for s in range(q) for t in range(q)):
                bad += 1
    return bad


@pytest.mark.parametrize("n, l, h", [(2, 0, 1), (3, 0, 2), (4, 1, 3), (4, 0, 2), (3, 1, 1)])
def test_bad_pair_count_matches_enumeration(n, l, h):
    assert bad_pair_count(2, n, l, h) == brute_bad(2, n, l, h)
    assert bad_pair_count(2, n, l, h) <= union_bound(2, n, l, h)


def test_generic_q2_n4_window_1_3():
    w = polymethod_decomp(GENERIC, 4, 1, 3)
    assert w.changes == 232
    assert w.verify()
    assert w.rank_bound == w.meta["monomials"] == 313
    assert w.meta["bad_pairs"] == 232 and w.meta["union_bound"] == 328


def test_changes_only_at_bad_pairs():
    n, l, h = 4, 1, 3
    w = polymethod_decomp(GENERIC, n, l, h)
    for x, y, _ in w.s.entries:
        counts = pattern_counts(x, y, 2, n)
        assert any(not l <= counts.get(k, 0) <= h for k in itertools.product(range(2), repeat=2))


def test_longer_power():
    w = polymethod_decomp(GENERIC, 6, 1, 2)
    assert w.verify()
    assert w.changes == w.meta["bad_pairs"] == 3016
    assert w.rank_bound == 816


def test_entries_equal_to_one_collapse_further():
    # bases with a 1 entry agree on more bad pairs, so S can be sparser
    h1 = SparseMatrix.from_dense([[1, 1], [1, -1]])
    w = polymethod_decomp(h1, 4, 1, 3)
    assert w.verify() and w.changes < 232


def test_window_polys_cover_every_pattern():
    polys = window_polys(GENERIC, 4, 1, 3)
    assert set(polys) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert polys[(1, 1)].at_weight(2) == 49


def test_preconditions_and_caps():
    with pytest.raises(RigidityError):
        polymethod_decomp(GENERIC, 4, 3, 2)
    with pytest.raises(CapExceeded):
        polymethod_decomp(GENERIC, 12, 1, 3)
