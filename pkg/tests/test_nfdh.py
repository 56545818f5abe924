import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from circlepack.errors import InputError, ParameterError
from circlepack.geometry import Bin, Circle, verify_packing
from circlepack.nfdh import (SquareHull, nfdh_empty_bound, nfdh_height_bound, nfdh_pack, pack_medium,
                             small_items_height_bound)

F = Fraction
sides = st.lists(st.fractions(min_value=F(1, 64), max_value=1), min_size=1, max_size=40)


def test_five_squares_share_one_shelf():
    hulls = [SquareHull(str(i), F(s)) for i, s in enumerate(["2", "2", "1.9", "1.75", "1.6"])]
    sp = nfdh_pack(hulls, F("9.4"))
    assert len(sp.shelves) == 1
    assert sp.height == 2
    assert len(sp.shelves[0].items) == 5


def test_single_square():
    assert nfdh_pack([SquareHull("a", F(3, 7))], 1).height == F(3, 7)


@pytest.mark.parametrize("n,k", [(1, 1), (5, 2), (6, 3), (7, 3), (10, 4)])
def test_equal_squares_shelf_count(n, k):
    s = F(1, 3)
    sp = nfdh_pack([SquareHull(f"q{i}", s) for i in range(n)], k * s)
    assert sp.height == math.ceil(n / k) * s


def test_too_wide_rejected():
    with pytest.raises(InputError):
        nfdh_pack([SquareHull("a", F(2))], 1)


def test_height_bound_examples():
    d = F(1, 5)
    assert nfdh_height_bound(d * d, d, [1]) == d
    A = F(1, 3)
    b = nfdh_height_bound(A, A / 10**6, [1])
    assert abs(b - A) <= A / 100
    with pytest.raises(ParameterError):
        nfdh_height_bound(1, 2, [1])


def test_empty_bound_examples():
    assert nfdh_empty_bound(0, 1, 1) == 0
    assert nfdh_empty_bound(F(1, 10), 1, 1) == F(1, 5)


@given(sides, st.fractions(min_value=1, max_value=3))
@settings(max_examples=150)
def test_height_within_bound_and_order(ss, width):
    hulls = [SquareHull(f"s{i}", s) for i, s in enumerate(ss)]
    sp = nfdh_pack(hulls, width)
    delta = max(ss)
    area = sum(s * s for s in ss)
    assert sp.height <= nfdh_height_bound(area, delta, [width])
    seq = [side for _, _, _, side in sp.hull_positions()]
    assert seq == sorted(seq, reverse=True)
    for shelf in sp.shelves:
        for (_, x, s), (_, x2, _) in zip(shelf.items, shelf.items[1:]):
            assert x + s <= x2
        _, x, s = shelf.items[-1]
        assert x + s <= width


@given(sides, st.fractions(min_value=1, max_value=2), st.fractions(min_value=1, max_value=2))
@settings(max_examples=150)
def test_unfinished_box_is_nearly_full(ss, w, h):
    hulls = [SquareHull(f"s{i}", s) for i, s in enumerate(ss)]
    sp = nfdh_pack(hulls, w, h)
    if sp.unpacked:
        packed = sum(side * side for *_, side in sp.hull_positions())
        assert w * h - packed <= nfdh_empty_bound(max(ss), w, h)


@given(st.integers(0, 10**6), st.sampled_from([F(8, 1), F(4, 1)]), st.sampled_from([F(1), F(2)]))
@settings(max_examples=60)
def test_small_items_bound(seed, alpha, beta):
    # squares with sides <= beta eps^2 w and area <= alpha eps w h
    rng = random.Random(seed)
    eps, w, h = F(1, 4), F(1), F(1)
    cap = beta * eps * eps * w
    ss, area = [], F(0)
    while True:
        s = cap * F(rng.randint(1, 64), 64)
        if area + s * s > alpha * eps * w * h:
            break
        ss.append(s)
        area += s * s
    if not ss:
        return
    sp = nfdh_pack([SquareHull(f"s{i}", s) for i, s in enumerate(ss)], w)
    assert sp.height <= small_items_height_bound(alpha, beta, eps, h)


def test_pack_medium_empty():
    mp = pack_medium([], 1, 1, F(1, 4))
    assert mp.placements == [] and mp.height == 0 and mp.profit == 0


def test_pack_medium_one_shelf_takes_everything():
    items = [Circle(f"m{i}", F(1, 20), i + 1) for i in range(5)]
    mp = pack_medium(items, 1, 1, F(1, 4))
    assert mp.profit == 15
    assert verify_packing(Bin(1, mp.height), mp.placements, items).valid


def test_pack_medium_rejects_large_item():
    with pytest.raises(InputError):
        pack_medium([Circle("a", F(1, 2))], 1, 1, F(1, 4))


def _best_subset_in(items, w, H):
    best = F(0)
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            p = sum((c.profit for c in combo), F(0))
            if p <= best:
                continue
            if not nfdh_pack([SquareHull(c.id, c.diameter) for c in combo], w, H).unpacked:
                best = p
    return best


@pytest.mark.parametrize("seed", range(15))
def test_pack_medium_beats_subsets_of_thin_strip(seed):
    rng = random.Random(seed)
    eps, w = F(1, 4), F(1)
    h = rng.choice([F(1, 4), F(1, 2), F(1)])
    n = rng.randint(1, 10)
    items = [Circle(f"m{i}", F(rng.randint(8, 64), 256), rng.randint(1, 9)) for i in range(n)]
    mp = pack_medium(items, w, h, eps)
    assert mp.height <= 8 * eps * h
    assert verify_packing(Bin(w, 8 * eps * h), mp.placements, items).valid
    assert mp.profit >= _best_subset_in(items, w, 3 * eps * h)


def test_pack_medium_multiple_strips():
    items = [Circle(f"m{i}", F(1, 5), 1, 3) for i in range(8)]
    mp = pack_medium(items, 1, 1, F(1, 4), m=2)
    dmax = F(1, 5)
    assert len(mp.strips) == 2
    assert all(hh <= 8 * F(1, 4) + dmax for hh in mp.strip_heights)
    for pl, hh in zip(mp.strips, mp.strip_heights):
        if pl:
            assert verify_packing(Bin(1, hh), pl, items).valid
