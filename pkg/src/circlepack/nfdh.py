"""Next-Fit-Decreasing-Height shelf packing of square hulls, its closed-form
guarantees, and the high-profit packing of medium circles into a thin strip."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import BudgetError, InputError, InvariantError, ParameterError
from .geometry import Circle, Placement, to_rational


@dataclass(frozen=True)
class SquareHull:
    item: str
    side: Fraction


@dataclass
class Shelf:
    base_y: Fraction
    height: Fraction
    items: List[Tuple[str, Fraction, Fraction]] = field(default_factory=list)   # (id, x, side)


@dataclass
class ShelfPacking:
    width: Fraction
    shelves: List[Shelf]
    height: Fraction
    unpacked: List[SquareHull]

    def hull_positions(self):
        """(id, x, y, side) with (x, y) the lower-left corner."""
        for s in self.shelves:
            for cid, x, side in s.items:
                yield cid, x, s.base_y, side


def nfdh_pack(hulls: Sequence[SquareHull], strip_width, max_height=None) -> ShelfPacking:
    """Pack squares by non-increasing side (ties by id) onto shelves.

    Without max_height everything is packed.  With it, packing stops at the
    first square whose shelf would poke above max_height; that square and
    all later ones are reported as unpacked.
    """
    W = to_rational(strip_width)
    order = sorted(hulls, key=lambda q: (-q.side, q.item))
    for q in order:
        if q.side > W:
            raise InputError(f"item {q.item} wider than the strip")
    shelves: List[Shelf] = []
    x = Fraction(0)
    top = Fraction(0)
    for n, q in enumerate(order):
        if shelves and x + q.side <= W:
            shelf = shelves[-1]
        else:
            base = top
            if max_height is not None and base + q.side > max_height:
                return ShelfPacking(W, shelves, top, list(order[n:]))
            shelf = Shelf(base, q.side)
            shelves.append(shelf)
            top = base + q.side
            x = Fraction(0)
        shelf.items.append((q.item, x, q.side))
        x += q.side
    return ShelfPacking(W, shelves, top, [])


def nfdh_height_bound(total_area, max_side, widths: Sequence) -> Fraction:
    """Height that always suffices for NFDH: (vol - delta^d) / prod(l_i - delta) + delta."""
    vol, delta = to_rational(total_area), to_rational(max_side)
    ls = [to_rational(x) for x in widths]
    d = len(ls) + 1
    if any(l < delta for l in ls):
        raise ParameterError("every width must be at least the largest side")
    excess = vol - delta ** d
    if excess <= 0:
        return delta
    denom = Fraction(1)
    for l in ls:
        denom *= l - delta
    if denom == 0:
        raise ParameterError("width equals the largest side; the bound is undefined")
    return excess / denom + delta


def nfdh_empty_bound(max_side, width, height) -> Fraction:
    """Empty area NFDH may leave in a w x h bin it cannot finish: delta * perimeter / 2."""
    delta = to_rational(max_side)
    return delta * (2 * to_rational(width) + 2 * to_rational(height)) / 2


def small_items_height_bound(alpha, beta, eps, h) -> Fraction:
    """(64 alpha + 16 beta - beta^2) / (64 - 4 beta) * eps * h for sides <= beta eps^2 w."""
    a, b = to_rational(alpha), to_rational(beta)
    if 4 * b >= 64:
        raise ParameterError("beta must be below 16")
    return (64 * a + 16 * b - b * b) / (64 - 4 * b) * to_rational(eps) * to_rational(h)


@dataclass
class MediumPacking:
    width: Fraction
    strips: List[List[Placement]]      # one list per strip (m strips for multiple knapsacks)
    strip_heights: List[Fraction]
    packed: List[str]
    profit: Fraction

    @property
    def placements(self) -> List[Placement]:
        return [p for s in self.strips for p in s]

    @property
    def height(self) -> Fraction:
        return max(self.strip_heights, default=Fraction(0))


def _density_order(items: Sequence[Circle]) -> List[Circle]:
    # profit per unit of hull area; ties by id
    return sorted(items, key=lambda c: (-c.profit / (c.diameter * c.diameter), c.id))


def _fits(prefix: Sequence[Circle], W, H) -> bool:
    hulls = [SquareHull(c.id, c.diameter) for c in prefix]
    return not nfdh_pack(hulls, W, H).unpacked


def pack_medium(medium: Sequence[Circle], w, h, eps, m: int = 1,
                copy_limit: int = 1_000_000) -> MediumPacking:
    """High-profit packing of medium circles in a w x 8 eps h strip.

    Circles are ordered by profit density and the prefix is grown until the
    square hulls stop fitting, under NFDH, into a (1+eps)w x 4 eps (m h)
    box (binary search keeps a packing prefix and a failing one adjacent).
    Circles lying wholly in the rightmost 2 eps w are then moved to a second
    w x 4 eps (m h) box stacked on top.  With m > 1 the result is cut at
    shelf bases into m strips of height at most 8 eps h + max diameter.
    Multiplicities are expanded into copies sharing the item id, capped by
    what the box area allows; m is capped by the number of copies.
    """
    w, h, eps = to_rational(w), to_rational(h), to_rational(eps)
    for c in medium:
        if c.diameter > eps * w:
            raise InputError(f"medium item {c.id} is too large")
    # more strips than copies never help, and no hull can repeat beyond the box area
    m = max(1, min(m, sum(c.multiplicity for c in medium)))
    Wb = (1 + eps) * w
    Hb = 4 * eps * h * m
    reps = [(c, min(c.multiplicity, int(Wb * Hb / (c.diameter * c.diameter)))) for c in _density_order(medium)]
    if sum(n for _, n in reps) > copy_limit:
        raise BudgetError("too many medium copies to pack one by one")
    copies = [c for c, n in reps for _ in range(n)]
    lo, hi = 0, len(copies)
    if not _fits(copies, Wb, Hb):
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _fits(copies[:mid], Wb, Hb):
                lo = mid
            else:
                hi = mid
        chosen = copies[:lo]
    else:
        chosen = copies
    table = {c.id: c for c in chosen}
    shelf = nfdh_pack([SquareHull(c.id, c.diameter) for c in chosen], Wb, Hb)
    cut = (1 - eps) * w
    hulls = []   # (id, x, y, side) after the move
    for cid, x, y, side in shelf.hull_positions():
        if x >= cut:
            hulls.append((cid, x - cut, y + Hb, side))
        else:
            if x + side > w:
                raise InvariantError("a medium circle straddles the moved strip")
            hulls.append((cid, x, y, side))
    unit = 8 * eps * h
    strips: List[List[Placement]] = [[] for _ in range(m)]
    heights = [Fraction(0)] * m
    for cid, x, y, side in hulls:
        k = min(int(y // unit), m - 1) if m > 1 else 0
        y0 = y - k * unit
        r = side / 2
        strips[k].append(Placement(cid, x + r, y0 + r))
        heights[k] = max(heights[k], y0 + side)
    if m == 1:
        heights = [unit] if chosen else [Fraction(0)]
    profit = sum((table[cid].profit for cid, *_ in hulls), Fraction(0))
    return MediumPacking(w, strips, heights, [cid for cid, *_ in hulls], profit)
