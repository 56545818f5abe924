import random
from dataclasses import replace
from fractions import Fraction

import pytest

from circlepack import (Bin, Circle, Instance, SideConstraint, short_description, solve_binpack,
                        solve_container, solve_knapsack, solve_multiknapsack, solve_strip, verify_packing,
                        verify_structure)
from circlepack.assembler import strip_split_transform, type_census
from circlepack.errors import InputError, ParameterError

from helpers import EPS, random_instance, two_level_params

F = Fraction


def _flat_valid(pk):
    table = pk.table
    for k in range(len(pk.bins)):
        assert verify_packing(pk.frame, pk.flatten(k), table).valid


@pytest.mark.parametrize("mode", ["ras", "ras1d", "ptas"])
def test_empty_instance(mode):
    pk = solve_knapsack(Instance(Bin(1, 1), []), two_level_params(mode))
    assert pk.profit == 0 and verify_structure(pk).valid


@pytest.mark.parametrize("mode", ["ras", "ras1d", "ptas"])
def test_single_full_width_circle(mode):
    pk = solve_knapsack(Instance(Bin(1, 1), [Circle("a", 1, 7)]), two_level_params(mode))
    assert pk.profit == 7
    _flat_valid(pk)


def test_oversized_item_is_dropped():
    pk = solve_knapsack(Instance(Bin(1, 1), [Circle("a", 2, 9), Circle("b", F(1, 2), 1)]), two_level_params())
    assert pk.profit == 1 and pk.stats["dropped"] == ["a"]


@pytest.mark.parametrize("seed", range(6))
def test_modes_verify_and_respect_frames(seed):
    inst = random_instance(random.Random(seed), 6)
    ras = solve_knapsack(inst, two_level_params("ras"))
    one = solve_knapsack(inst, two_level_params("ras1d"))
    ptas = solve_knapsack(inst, two_level_params("ptas"))
    for pk in (ras, one, ptas):
        assert verify_structure(pk).valid
        _flat_valid(pk)
    assert ras.augmentation[0] <= 1 + EPS
    assert one.frame.width == 1
    assert ptas.frame == Bin(1, 1)


def test_wide_bin_is_transposed_back():
    inst = random_instance(random.Random(3), 5)
    wide = Instance(Bin(2, 1), inst.items)
    pk = solve_knapsack(wide, two_level_params())
    assert pk.nominal == Bin(2, 1)
    a_w, a_h = pk.augmentation
    assert a_h <= 1 + EPS
    _flat_valid(pk)


def test_tampered_radius_is_caught():
    inst = Instance(Bin(1, 1), [Circle("a", F(1, 2), 3), Circle("b", F(1, 3), 2)])
    pk = solve_knapsack(inst, two_level_params())
    assert verify_structure(pk).valid
    bad = replace(pk, table={k: replace(c, diameter=c.diameter * 3) for k, c in pk.table.items()})
    assert not verify_structure(bad).valid


def test_multiknapsack_uses_at_most_m_bins():
    inst = random_instance(random.Random(8), 6, m=2)
    pk = solve_multiknapsack(inst, 2, two_level_params())
    assert pk.bin_count <= 2
    one = solve_knapsack(Instance(inst.bin, inst.items), two_level_params())
    assert pk.profit >= one.profit
    _flat_valid(pk)


def test_side_constraints_are_honored():
    items = [Circle("a", F(1, 4), 3), Circle("b", F(1, 4), 5), Circle("c", F(1, 4), 4)]
    cons = [SideConstraint({"a": F(1), "b": F(1)}, F(1)), SideConstraint({"c": F(2)}, F(1))]
    pk = solve_knapsack(Instance(Bin(1, 1), items, constraints=cons), two_level_params())
    sel = pk.selected()
    for sc in cons:
        assert sum(a * sel.get(cid, 0) for cid, a in sc.coeffs.items()) <= sc.rhs
    assert pk.profit == 5


def test_census_matches_lp_counts():
    items = [Circle("x", F(1, 2), 1, 3), Circle("y", F(1, 200), F(1, 50), 40)]
    pk = solve_knapsack(Instance(Bin(1, 1), items), two_level_params("ptas"))
    cen = short_description(pk).census()
    for lvl, lvl_cid, n in pk.stats["discarded_bins"]:
        cen[(lvl, lvl_cid)] = cen.get((lvl, lvl_cid), 0) + n
    want = {(j, c): n for j, cs in pk.lp_counts.items() for c, n in enumerate(cs) if n}
    assert cen == want


def test_type_census_counts_nested_bins():
    items = [Circle("y", F(1, 300), 1, 30)]
    pk = solve_knapsack(Instance(Bin(1, 1), items), two_level_params())
    census = type_census(pk)
    assert sum(census.values()) >= pk.bin_count
    assert short_description(pk).total_bins == sum(census.values())


def test_binpack_places_every_copy():
    items = [Circle("a", F(3, 4), 0, 2), Circle("b", F(1, 4), 0, 5)]
    pk = solve_binpack(Instance(Bin(1, 1), items), two_level_params())
    assert pk.selected() == {"a": 2, "b": 5}
    _flat_valid(pk)


def test_binpack_rejects_ptas_and_oversized():
    with pytest.raises(ParameterError):
        solve_binpack(Instance(Bin(1, 1), [Circle("a", F(1, 2))]), two_level_params("ptas"))
    with pytest.raises(InputError):
        solve_binpack(Instance(Bin(1, 1), [Circle("a", 2)]), two_level_params())


def test_strip_split_transform():
    inst = Instance(Bin(1, 4), [Circle("a", F(1, 2))], 2)
    out, q = strip_split_transform(inst, two_level_params())
    assert out.bin == Bin(1, 4) and q == 2 and out.m == 4


def test_container_and_strip_lower_bounds():
    items = [Circle("a", F(1, 2), 1), Circle("b", F(1, 3), 1)]
    inst = Instance(Bin(1, 1), items)
    side, pk = solve_container(inst, 1, two_level_params())
    assert side >= F(1, 2) and pk.frame == Bin(side, side)
    _flat_valid(pk)
    height, pk = solve_strip(inst, 1, two_level_params(), F(1))
    assert height >= F(1, 2) and pk.frame.height == height
    _flat_valid(pk)
    assert pk.constants["c"] >= 0
