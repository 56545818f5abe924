import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from circlepack.errors import ParameterError
from circlepack.geometry import SideConstraint
from circlepack.lp import (EQ, GE, LE, LevelModelData, LpModel, balanced_solve, build_fmmsb,
                           build_frounded, candidate_lengths, nonnull_per_level, round_up, solve_lp,
                           solve_with_integer_block)

F = Fraction
RULES = ["steepest", "bland"]


@pytest.mark.parametrize("rule", RULES)
def test_single_bound(rule):
    m = LpModel()
    x = m.add_var("x", "x")
    m.add_row({x: 1}, LE, 3, ("c",))
    m.objective = {x: F(1)}
    sol = solve_lp(m, rule=rule)
    assert sol.status == "optimal" and sol.objective == 3


def _beale():
    # the classic instance on which the textbook largest-coefficient rule cycles
    m = LpModel()
    x = [m.add_var(f"x{i}", "x") for i in range(4)]
    m.maximize = False
    m.objective = {x[0]: F(-3, 4), x[1]: F(20), x[2]: F(-1, 2), x[3]: F(6)}
    m.add_row({x[0]: F(1, 4), x[1]: F(-8), x[2]: F(-1), x[3]: F(9)}, LE, 0, ("r1",))
    m.add_row({x[0]: F(1, 2), x[1]: F(-12), x[2]: F(-1, 2), x[3]: F(3)}, LE, 0, ("r2",))
    m.add_row({x[2]: F(1)}, LE, 1, ("r3",))
    return m


@pytest.mark.parametrize("rule", RULES)
def test_degenerate_cycling_instance_terminates(rule):
    m = _beale()
    sol = solve_lp(m, rule=rule)
    ref = solve_lp(m, backend="float")
    assert sol.status == "optimal"
    assert m.residuals_ok(sol.values)
    assert abs(float(sol.objective) - float(ref.objective)) < 1e-9


def test_status_codes():
    m = LpModel()
    x = m.add_var("x", "x")
    m.objective = {x: F(1)}
    assert solve_lp(m).status == "unbounded"
    m.add_row({x: 1}, GE, 2, ("lo",))
    m.add_row({x: 1}, LE, 1, ("hi",))
    assert solve_lp(m).status == "infeasible"
    with pytest.raises(ParameterError):
        solve_lp(m, rule="dantzig")


def _random_model(rng, n=6, rows=5):
    m = LpModel()
    xs = [m.add_var(f"v{i}", "x", hi=rng.choice([None, rng.randint(1, 5)])) for i in range(n)]
    for k in range(rows):
        coeffs = {x: F(rng.randint(0, 9), rng.randint(1, 4)) for x in xs if rng.random() < 0.7}
        m.add_row(coeffs, rng.choice([LE, LE, GE, EQ]), F(rng.randint(0, 20)), ("r", k))
    m.add_row({x: 1 for x in xs}, LE, 30, ("cap",))
    m.objective = {x: F(rng.randint(-3, 9)) for x in xs}
    m.maximize = rng.random() < 0.7
    return m


@given(st.integers(0, 10**6))
@settings(max_examples=80)
def test_exact_matches_float_backend(seed):
    m = _random_model(random.Random(seed))
    ref = solve_lp(m, backend="float")
    for rule in RULES:
        sol = solve_lp(m, rule=rule)
        assert sol.status == ref.status
        if sol.status == "optimal":
            assert m.residuals_ok(sol.values)
            assert abs(float(sol.objective) - float(ref.objective)) <= 1e-9 * max(1, abs(float(ref.objective)))


def _one_level(counts, members, demand, free=None):
    return LevelModelData(0, counts, free or [F(0)] * len(counts), members, demand)


def test_single_circle_model():
    L = _one_level([(0,), (1,)], [["a"]], [1])
    m = build_frounded([L], {"a": F(7)}, {"a": 1})
    assert len(m.rows) == 4
    assert solve_with_integer_block(m).objective == 7


def test_binpack_model_counts_bins():
    k = 5
    L = LevelModelData(0, [(0,), (1,)], [F(0), F(0)], [["a"]], [k])
    m = build_frounded([L], {"a": F(0)}, {"a": k}, variant="bpp")
    assert solve_with_integer_block(m).objective == k


def test_conflict_row_keeps_better_item():
    L = LevelModelData(0, [(0, 0), (1, 0), (0, 1), (1, 1)], [F(0)] * 4, [["a"], ["b"]], [1, 1])
    sc = SideConstraint({"a": F(1), "b": F(1)}, F(1))
    m = build_frounded([L], {"a": F(3), "b": F(5)}, {"a": 1, "b": 1}, side_constraints=[sc])
    sol = solve_with_integer_block(m)
    named = sol.by_name(m)
    assert sol.objective == 5 and named["z:b"] == 1 and named["z:a"] == 0


def _two_level_toy(n_sym=5):
    # level 0: empty box or one big circle; level 1: one class, n_sym equal configurations
    L0 = LevelModelData(0, [(0,), (1,)], [F(10), F(4)], [["big"]], [1])
    counts = [(c,) for c in range(0, 4)] + [(3,)] * (n_sym - 1)
    L1 = LevelModelData(1, counts, [F(0)] * len(counts), [["s1", "s2"]], [40])
    profits = {"big": F(6), "s1": F(1), "s2": F(1, 2)}
    mult = {"big": 1, "s1": 20, "s2": 20}
    return [L0, L1], profits, mult


def test_two_level_toy_matches_float_backend():
    levels, profits, mult = _two_level_toy()
    m = build_frounded(levels, profits, mult)
    exact = solve_with_integer_block(m)
    # enumerate the level-0 choice and cross-check each with the float backend
    best = None
    for pick in (0, 1):
        fixed = m.copy()
        for c in range(2):
            v = fixed.vars[fixed.index[f"x:0:{c}"]]
            v.lo = v.hi = F(1 if c == pick else 0)
        ref = solve_lp(fixed, backend="float")
        if ref.status == "optimal":
            best = ref.objective if best is None else max(best, ref.objective)
    assert abs(float(exact.objective) - float(best)) < 1e-9
    assert m.residuals_ok(exact.values)


def test_integer_block_empty_equals_lp():
    m = _random_model(random.Random(5))
    assert solve_with_integer_block(m).objective == solve_lp(m).objective


def test_integer_block_beats_every_fixed_assignment():
    levels, profits, mult = _two_level_toy()
    m = build_frounded(levels, profits, mult)
    best = solve_with_integer_block(m)
    assert best.nodes <= 3
    for pick in (0, 1):
        fixed = m.copy()
        for c in range(2):
            v = fixed.vars[fixed.index[f"x:0:{c}"]]
            v.lo = v.hi = F(1 if c == pick else 0)
        sol = solve_lp(fixed)
        if sol.status == "optimal":
            assert best.objective >= sol.objective


def test_branch_and_bound_matches_enumeration():
    rng = random.Random(11)
    for _ in range(10):
        counts = [(a, b) for a in range(3) for b in range(3) if a + b <= 3]
        L = LevelModelData(0, counts, [F(0)] * len(counts), [["a"], ["b"]],
                           [rng.randint(1, 6), rng.randint(1, 6)])
        profits = {"a": F(rng.randint(1, 9)), "b": F(rng.randint(1, 9))}
        m = build_frounded([L], profits, {"a": L.class_demand[0], "b": L.class_demand[1]}, "mkp", m=3)
        enum = solve_with_integer_block(m, enum_limit=10**6)
        bnb = solve_with_integer_block(m, enum_limit=0)
        assert enum.objective == bnb.objective


@pytest.mark.parametrize("n_sym", [1, 3, 5, 8])
def test_balanced_keeps_objective_and_sparsity(n_sym):
    levels, profits, mult = _two_level_toy(n_sym)
    m = build_frounded(levels, profits, mult)
    sol = solve_with_integer_block(m)
    bal = balanced_solve(m, sol)
    assert bal.objective == sol.objective
    assert m.residuals_ok(bal.values)
    T1 = len(levels[1].class_members)
    assert nonnull_per_level(m, bal)[1] <= 2 * T1 + 2


def test_balanced_single_level_unchanged():
    L = _one_level([(0,), (1,)], [["a"]], [1])
    m = build_frounded([L], {"a": F(7)}, {"a": 1})
    sol = solve_with_integer_block(m)
    assert balanced_solve(m, sol).values == sol.values


def test_round_up_integral_and_half():
    L = _one_level([(0,), (1,)], [["a"]], [1])
    m = build_frounded([L], {"a": F(7)}, {"a": 1})
    sol = solve_with_integer_block(m)
    r = round_up(m, sol, [L], {"a": F(7)}, {"a": 1})
    assert r.counts[0] == [0, 1] and r.extra[0] == 0 and r.selected == {"a": 1}
    half = list(sol.values)
    half[m.index["x:0:1"]] = F(1, 2)
    half[m.index["x:0:0"]] = F(1, 2)
    from circlepack.lp import LpSolution
    r = round_up(m, LpSolution("optimal", half, F(0)), [L], {"a": F(7)}, {"a": 1})
    assert r.counts[0] == [1, 1] and r.extra[0] == 2


def test_round_up_prefers_profit_within_class():
    L = _one_level([(0,), (1,), (2,)], [["lo", "hi", "mid"]], [3])
    profits = {"lo": F(1), "hi": F(5), "mid": F(3)}
    m = build_frounded([L], profits, {"lo": 1, "hi": 1, "mid": 1})
    sol = solve_with_integer_block(m)
    r = round_up(m, sol, [L], profits, {"lo": 1, "hi": 1, "mid": 1})
    assert r.selected == {"hi": 1, "mid": 1}


def test_strip_capacity_arithmetic():
    # extra level-1 bins fit a w' x eps h' strip: r^(4r-3) >= 2 T_1 + 3 with T_1 <= r^3 ln r
    for r in range(4, 12):
        assert r ** (4 * r - 3) >= 2 * r ** 3 * math.log(r) + 3


def test_candidate_lengths_and_fmmsb():
    eps = F(1, 4)
    lower = F(1)
    upper = F(16, 5)        # >= sqrt(32/pi)
    cands = candidate_lengths(lower, upper, eps)
    assert cands[0] == lower and cands[-1] >= upper
    assert len(cands) <= math.log(math.sqrt(32 / math.pi)) / math.log(1.25) + 2
    L = LevelModelData(0, [(0,), (1,)], [F(0), F(0)], [["a"]], [1])
    m = build_fmmsb([(c, [L]) for c in cands], {"a": 1}, 1)
    sol = solve_with_integer_block(m)
    assert sol.objective == cands[0]


def test_dump_lists_everything():
    levels, profits, mult = _two_level_toy(2)
    m = build_frounded(levels, profits, mult)
    text = m.dump()
    assert text.count("\nVAR ") == len(m.vars)
    assert text.count("\nROW ") == len(m.rows)


def test_enumeration_respects_budget():
    from circlepack.errors import BudgetError
    levels, profits, mult = _two_level_toy()
    m = build_frounded(levels, profits, mult)
    with pytest.raises(BudgetError):
        solve_with_integer_block(m, budget=1)
    with pytest.raises(BudgetError):
        solve_with_integer_block(m, budget=0, enum_limit=0)
