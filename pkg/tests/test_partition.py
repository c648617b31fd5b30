import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kroncirc import Q, SparseMatrix, kron_power
from kroncirc.errors import CapExceeded
from kroncirc.partition import (
    PartitionError,
    RectPartition,
    all_rectangles,
    enumerate_rectangles,
    js_recurrence,
    partition_search,
    partition_search_full,
)
from kroncirc.presets import disjointness, disjointness1, hadamard1


def brute_min(base, max_parts=None):
    """Unpruned exhaustive search over exact covers (oracle)."""
    cells = {(r, c) for r, c, _ in base.entries}
    rects = [(frozenset((r, c) for r in rows for c in cols), math.sqrt(len(rows) * len(cols))) for rows, cols in all_rectangles(base)]
    best = math.inf

    def go(left, cost, used):
        nonlocal best
        if not left:
            best = min(best, cost)
            return
        if max_parts is not None and used == max_parts:
            return
        cell = min(left)
        for cov, w in rects:
            if cell in cov and cov <= left:
                go(left - cov, cost + w, used + 1)

    go(frozenset(cells), 0.0, 0)
    return best


def test_r1_optimum():
    p = partition_search(disjointness1())
    assert p.validate()
    assert p.rects == (((0,), (0, 1)), ((1,), (0,)))
    assert p.objective == pytest.approx(1 + math.sqrt(2))


def test_r2_optimum_matches_brute_force():
    r = partition_search_full(disjointness(2))
    assert r.partition.validate()
    assert r.objective == pytest.approx(brute_min(disjointness(2)))
    assert r.objective == pytest.approx(4 + math.sqrt(3))


def test_r2_needs_four_parts():
    # real rank 4 bounds the number of rectangles from below
    with pytest.raises(PartitionError):
        partition_search(disjointness(2), 3)


def test_r3_search_reaches_target(r3_partition):
    p = r3_partition
    assert p.validate()
    assert len(p.rects) == 8
    assert p.objective <= 13.70
    assert p.objective == pytest.approx(13.670330858517412)
    assert p.alpha1 / (3 * math.log(2)) == pytest.approx(1.258, abs=1e-3)


def test_upper_bound_below_optimum_finds_nothing():
    with pytest.raises(PartitionError):
        partition_search_full(disjointness(2), upper=5.7)


@st.composite
def zero_one(draw):
    r = draw(st.integers(1, 3))
    c = draw(st.integers(1, 3))
    grid = draw(st.lists(st.lists(st.integers(0, 1), min_size=c, max_size=c), min_size=r, max_size=r))
    grid[0][0] = 1
    return SparseMatrix.from_dense(grid, Q)


@settings(max_examples=60, deadline=None)
@given(zero_one())
def test_search_matches_brute_force(m):
    r = partition_search_full(m)
    assert r.partition.validate()
    assert r.objective == pytest.approx(brute_min(m))


@settings(max_examples=30, deadline=None)
@given(zero_one(), st.integers(1, 3))
def test_part_limit_matches_brute_force(m, k):
    want = brute_min(m, k)
    if want == math.inf:
        with pytest.raises(PartitionError):
            partition_search(m, k)
    else:
        assert partition_search_full(m, k).objective == pytest.approx(want)


def test_maximal_rectangles():
    rects = enumerate_rectangles(disjointness(2))
    assert rects == [((0,), (0, 1, 2, 3)), ((0, 1), (0, 2)), ((0, 1, 2, 3), (0,)), ((0, 2), (0, 1))]
    assert len(enumerate_rectangles(disjointness(3))) == 8
    dense = np.array(disjointness(3).to_dense())
    for rows, cols in enumerate_rectangles(disjointness(3)):
        assert (dense[np.ix_(rows, cols)] == 1).all()


def test_validate_rejects_overlap_and_gaps():
    base = disjointness1()
    assert not RectPartition(base, [((0,), (0, 1)), ((0, 1), (0,))]).validate()
    assert not RectPartition(base, [((0,), (0, 1))]).validate()
    assert not RectPartition(base, [((1,), (1,)), ((0,), (0, 1)), ((1,), (0,))]).validate()


def test_rejects_non_boolean_and_caps():
    with pytest.raises(PartitionError):
        partition_search(hadamard1())
    with pytest.raises(PartitionError):
        partition_search(kron_power(disjointness1(), 5))
    with pytest.raises(CapExceeded):
        all_rectangles(disjointness(3), cap=10)


def test_json_round_trip(r3_partition):
    back = RectPartition.from_json(r3_partition.to_json(), Q)
    assert back == r3_partition


def test_js_recurrence():
    assert [(js_recurrence(n)[0].s, js_recurrence(n)[0].r) for n in (1, 2, 3)] == [(1, 1), (3, 2), (7, 5)]
    st5, bound = js_recurrence(5)
    assert (st5.s, st5.r) == (41, 29)
    assert bound == 2 * (41 + 29)
    assert st5.wires == 2 * 41 + 3 * 29
    # s_n + r_n sqrt(2) = (1 + sqrt 2)^n
    for n in range(1, 12):
        s, _ = js_recurrence(n)
        assert s.s + s.r * math.sqrt(2) == pytest.approx((1 + math.sqrt(2)) ** n)
    with pytest.raises(ValueError):
        js_recurrence(0)
