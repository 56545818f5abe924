import random
from fractions import Fraction

import pytest

from circlepack import Bin, Circle, Instance, SideConstraint, verify_packing
from circlepack.errors import ParameterError
from circlepack.oracle import (exact_binpack, exact_container, exact_knapsack, exact_pack_decision,
                               exact_strip)

F = Fraction


def test_single_circle_packable():
    d = exact_pack_decision([Circle("a", F(1, 2))], Bin(1, 1))
    assert d.packable
    assert verify_packing(Bin(1, 1), d.placements, [Circle("a", F(1, 2))]).valid


def test_two_unit_circles_rejected_by_area():
    d = exact_pack_decision([Circle("a", 1), Circle("b", 1)], Bin(1, 1))
    assert not d.packable and d.reason == "area"


def test_four_unit_circles_in_two_by_two():
    cs = [Circle(f"u{i}", 1) for i in range(4)]
    d = exact_pack_decision(cs, Bin(2, 2))
    assert d.packable
    assert verify_packing(Bin(2, 2), d.placements, cs).valid
    assert sorted((p.x, p.y) for p in d.placements) == [(F(1, 2), F(1, 2)), (F(1, 2), F(3, 2)),
                                                          (F(3, 2), F(1, 2)), (F(3, 2), F(3, 2))]


def test_size_caps():
    with pytest.raises(ParameterError):
        exact_pack_decision([Circle(f"x{i}", F(1, 10)) for i in range(7)], Bin(1, 1))
    with pytest.raises(ParameterError):
        exact_knapsack(Instance(Bin(1, 1), [Circle("a", F(1, 2))], 3))


def test_all_items_fit_gives_total_profit():
    inst = Instance(Bin(1, 1), [Circle(f"s{i}", F(1, 4), i + 1) for i in range(4)])
    assert exact_knapsack(inst).profit == 10


def test_conflicting_pair_keeps_better_item():
    items = [Circle("a", F(1, 4), 3), Circle("b", F(1, 4), 5)]
    inst = Instance(Bin(1, 1), items, constraints=[SideConstraint({"a": F(1), "b": F(1)}, F(1))])
    res = exact_knapsack(inst)
    assert res.profit == 5 and res.chosen == ["b"]


@pytest.mark.parametrize("seed", range(6))
def test_knapsack_order_independent(seed):
    rng = random.Random(seed)
    items = [Circle(f"c{i}", F(rng.randint(16, 48), 64), rng.randint(1, 9)) for i in range(5)]
    a = exact_knapsack(Instance(Bin(1, 1), items))
    b = exact_knapsack(Instance(Bin(1, 1), list(reversed(items))))
    assert a.profit == b.profit
    table = {c.id: c for c in items}
    for pl in a.bins:
        assert verify_packing(Bin(1, 1), pl, table).valid
    assert sum(table[c].profit for c in a.chosen) == a.profit


def test_two_knapsacks_double_the_room():
    items = [Circle(f"h{i}", F(3, 4), 1) for i in range(3)]
    assert exact_knapsack(Instance(Bin(1, 1), items, 1)).profit == 1
    assert exact_knapsack(Instance(Bin(1, 1), items, 2)).profit == 2


def test_mutually_exclusive_circles_need_own_bins():
    items = [Circle(f"b{i}", F(3, 4)) for i in range(3)]
    n, bins = exact_binpack(Instance(Bin(1, 1), items))
    assert n == 3 and len(bins) == 3


def test_nested_pair_shares_a_bin():
    items = [Circle("big", F(3, 5)), Circle("small", F(1, 4))]
    n, bins = exact_binpack(Instance(Bin(1, 1), items))
    assert n == 1
    assert verify_packing(Bin(1, 1), bins[0], items).valid


def test_multiplicity_expands():
    n, _ = exact_binpack(Instance(Bin(1, 1), [Circle("a", F(3, 4), 0, 2)]))
    assert n == 2


def test_container_of_one_circle():
    d = F(3, 7)
    side, bins = exact_container([Circle("a", d)])
    assert d <= side <= d + d / 2 ** 20


def test_strip_two_circles_side_by_side():
    items = [Circle("a", F(1, 2)), Circle("b", F(1, 2))]
    h, _ = exact_strip(items, F(1))
    assert F(1, 2) <= h <= F(1, 2) * (1 + F(1, 2 ** 20))
    h, _ = exact_strip(items, F(1, 2))
    assert 1 <= h <= 1 + F(1, 2 ** 20)
    h2, _ = exact_strip(items, F(1, 2), m=2)
    assert h2 <= F(1, 2) * (1 + F(1, 2 ** 20))
