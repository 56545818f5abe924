import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from circlepack.errors import InputError, ParameterError
from circlepack.geometry import (PI_HIGH, PI_LOW, Bin, Circle, Placement, XiPacking, ceil_rational,
                                 free_cells, grid_cells, is_xi_packing, min_xi, shift_bound, shift_repair,
                                 sqrt_down, sqrt_up, to_rational, verify_packing, wasted_cells)

from helpers import random_packing, slow_overlaps

F = Fraction
UNIT = [Circle("a", 2), Circle("b", 2)]


def test_to_rational_parses_exactly():
    assert to_rational("3/4") == F(3, 4)
    assert to_rational("0.1") == F(1, 10)
    assert to_rational(7) == 7
    with pytest.raises(InputError):
        to_rational(0.5)
    with pytest.raises(InputError):
        to_rational("x/2")


@given(st.fractions(min_value=0, max_value=10**6), st.integers(8, 80))
def test_sqrt_brackets(q, bits):
    lo, hi = sqrt_down(q, bits), sqrt_up(q, bits)
    assert lo * lo <= q <= hi * hi
    assert lo <= hi


def test_sqrt_exact_on_squares():
    assert sqrt_up(F(9, 4)) == F(3, 2) == sqrt_down(F(9, 4))


@given(st.fractions(min_value=-100, max_value=100))
def test_ceil_rational_rounds_up_onto_grid(q):
    c = ceil_rational(q, 10)
    assert c >= q and c - q < F(1, 2 ** 10)
    assert (c * 2 ** 10).denominator == 1


def test_pi_brackets():
    import math
    assert PI_LOW < math.pi < PI_HIGH


def test_tangent_to_walls_is_valid():
    v = verify_packing(Bin(2, 2), [Placement("a", 1, 1)], UNIT)
    assert v.valid and v.xi == 0


def test_overlapping_pair_reports_half():
    v = verify_packing(Bin(4, 2), [Placement("a", 1, 1), Placement("b", F(5, 2), 1)], UNIT)
    assert not v.valid
    assert v.xi == F(1, 2)
    assert [x.kind for x in v.violations] == ["pair"]


def test_min_xi_examples():
    assert min_xi(Bin(4, 2), [Placement("a", 1, 1), Placement("b", 3, 1)], UNIT) == 0
    q = F(1, 7)
    assert min_xi(Bin(10, 10), [Placement("a", 3, 3), Placement("b", 3 + 2 - q, 3)], UNIT) == q
    assert min_xi(Bin(2, 2), [Placement("a", F(1, 2), 1)], UNIT) == F(1, 2)


def test_unknown_circle_is_input_error():
    with pytest.raises(InputError):
        verify_packing(Bin(2, 2), [Placement("zz", 1, 1)], UNIT)


def _jittered(rng, eta):
    """Six circles on a lattice with spare room, then moved by at most eta per axis."""
    circles = [Circle(f"k{i}", F(1, 2)) for i in range(6)]
    base = [Placement(f"k{i}", F(1, 4) + F(i % 3, 2), F(1, 4) + F(i // 3, 2)) for i in range(6)]
    bin_ = Bin(F(3, 2), 1)
    assert verify_packing(bin_, base, circles).valid
    moved = [p.moved(F(rng.randint(-64, 64), 64) * eta, F(rng.randint(-64, 64), 64) * eta) for p in base]
    return bin_, moved, circles


@pytest.mark.parametrize("seed", range(20))
def test_jitter_bounds_xi(seed):
    rng = random.Random(seed)
    eta = F(1, 2 ** rng.randint(4, 10))
    bin_, moved, circles = _jittered(rng, eta)
    # each center moves by at most eta*sqrt(2); the pair gap shrinks by at most twice that
    assert min_xi(bin_, moved, circles) <= 2 * eta * sqrt_up(F(2))


@pytest.mark.parametrize("seed", range(20))
def test_shift_repair_on_jittered(seed):
    rng = random.Random(100 + seed)
    eta = F(1, 2 ** rng.randint(4, 10))
    bin_, moved, circles = _jittered(rng, eta)
    xi = min_xi(bin_, moved, circles)
    if xi == 0:
        xi = F(1, 2 ** 20)
    eps = xi / bin_.height
    out_bin, out = shift_repair(XiPacking(bin_, moved, xi), eps, circles)
    assert verify_packing(out_bin, out, circles).valid
    assert out_bin.width == bin_.width
    assert out_bin.height <= shift_bound(len(out), eps, bin_.height)


def test_shift_repair_identity_on_valid_packing():
    bin_ = Bin(4, 2)
    pl = [Placement("a", 1, 1), Placement("b", 3, 1)]
    out_bin, out = shift_repair(XiPacking(bin_, pl, F(0)), F(1, 4), UNIT)
    assert out_bin == bin_ and out == pl


def test_shift_repair_empty_and_precondition():
    assert shift_repair(XiPacking(Bin(1, 1), [], F(0)), F(1, 4), []) == (Bin(1, 1), [])
    with pytest.raises(ParameterError):
        shift_repair(XiPacking(Bin(1, 1), [], F(1)), F(1, 4), [])


def test_shift_repair_reports_displacements():
    seen = []
    bin_ = Bin(4, 2)
    pl = [Placement("a", 1, 1), Placement("b", F(5, 2), 1)]
    shift_repair(XiPacking(bin_, pl, F(1, 2)), F(1, 4), UNIT, on_displace=lambda a, b: seen.append((a, b)))
    assert seen and all(new.y >= old.y for old, new in seen)


def test_grid_cells_counts():
    assert len(grid_cells(Bin(4, 4), 1, 1)) == 16
    assert len(grid_cells(Bin(4, 4), 3, 3)) == 1
    cells = grid_cells(Bin(F(3, 2), F(5, 7)), F(3, 2), F(5, 7))
    assert len(cells) == 1 and cells[0].w == F(3, 2) and cells[0].h == F(5, 7)
    with pytest.raises(ParameterError):
        grid_cells(Bin(1, 1), 0, 1)


@given(st.fractions(min_value=F(1, 8), max_value=2), st.fractions(min_value=F(1, 8), max_value=2),
       st.fractions(min_value=F(1, 4), max_value=3), st.fractions(min_value=F(1, 4), max_value=3))
@settings(max_examples=50)
def test_grid_cells_disjoint_and_inside(cw, ch, w, h):
    from circlepack.geometry import Rect
    cells = grid_cells(Bin(w, h), cw, ch)
    whole = Rect(F(0), F(0), w, h)
    assert all(whole.contains_rect(c) for c in cells)
    for i in range(min(len(cells), 30)):
        for j in range(i + 1, min(len(cells), 30)):
            assert not cells[i].interiors_overlap(cells[j])


def test_free_cells_examples():
    assert len(free_cells(Bin(4, 4), [], 1, 1, [])) == 16
    assert free_cells(Bin(2, 2), [Placement("a", 1, 1)], 1, 1, UNIT) == []


def test_free_cells_touching_counts_as_blocked():
    # the disk of radius 1 at (1,1) touches the cell [2,3]x[0,1] at the point (2,1)
    cells = free_cells(Bin(3, 1), [Placement("a", 1, 1)], 1, 1, UNIT)
    assert cells == []
    cells = free_cells(Bin(4, 2), [Placement("a", 1, 1)], 1, 1, UNIT)
    assert [(c.x, c.y) for c in cells] == [(3, 0), (3, 1)]


def test_corner_circle_free_area_matches_cell_classification():
    r = F(1, 10)
    bin_ = Bin(1, 1)
    s = F(1, 100)
    circles = [Circle("a", 2 * r)]
    pl = [Placement("a", r, r)]
    free = free_cells(bin_, pl, s, s, circles)
    blocked = 10_000 - len(free)
    # independent classification of every cell
    count = 0
    for c in grid_cells(bin_, s, s):
        px = min(max(r, c.x), c.x1)
        py = min(max(r, c.y), c.y1)
        if (px - r) ** 2 + (py - r) ** 2 <= r * r:
            count += 1
    assert blocked == count
    assert len(free) * s * s >= bin_.area - count * s * s
    wasted = wasted_cells(bin_, pl, s, s, circles)
    assert len(wasted) * s * s <= 16 * F(1, 10) * PI_LOW * r * r


@given(st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_verifier_agrees_with_slow_check(seed):
    rng = random.Random(seed)
    bin_ = Bin(1, 1)
    placed, radii, circles = random_packing(rng, 12, bin_)
    assert verify_packing(bin_, placed, circles).valid
    assert not slow_overlaps(bin_, placed, radii)
    if placed:
        k = rng.randrange(len(placed))
        placed[k] = placed[k].moved(F(rng.randint(-30, 30), 256), F(rng.randint(-30, 30), 256))
        v = verify_packing(bin_, placed, circles)
        assert v.valid == (not slow_overlaps(bin_, placed, radii))


@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_min_xi_monotone_under_additions(seed):
    rng = random.Random(seed)
    bin_ = Bin(1, 1)
    circles = [Circle(f"q{i}", F(rng.randint(8, 64), 256)) for i in range(8)]
    pl = [Placement(c.id, F(rng.randint(0, 256), 256), F(rng.randint(0, 256), 256)) for c in circles]
    prev = F(0)
    for k in range(1, len(pl) + 1):
        cur = min_xi(bin_, pl[:k], circles)
        assert cur >= prev
        prev = cur


def test_verdict_survives_serialization():
    rng = random.Random(3)
    bin_ = Bin(1, 1)
    placed, radii, circles = random_packing(rng, 8, bin_)
    placed[0] = placed[0].moved(F(1, 50), 0)
    text = json.dumps([[p.circle_id, str(p.x), str(p.y)] for p in placed])
    back = [Placement(c, F(x), F(y)) for c, x, y in json.loads(text)]
    a = verify_packing(bin_, placed, circles)
    b = verify_packing(bin_, back, circles)
    assert (a.valid, a.xi, a.violations) == (b.valid, b.xi, b.violations)


def test_is_xi_packing_exact():
    pl = [Placement("a", 1, 1), Placement("b", F(5, 2), 1)]
    assert is_xi_packing(XiPacking(Bin(4, 2), pl, F(1, 2)), UNIT)
    assert not is_xi_packing(XiPacking(Bin(4, 2), pl, F(1, 2) - F(1, 10**9)), UNIT)
