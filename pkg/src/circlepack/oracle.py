"""Brute-force ground truth for tiny instances.

Everything here runs on integers: lengths are scaled by a common
denominator so no code is shared with the rational verifier.  A
"packable" answer always carries a realization; "not packable" only means
no placement was found on the dyadic search grid within the node budget.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import BudgetError, ParameterError
from .geometry import Bin, Circle, Instance, Placement

PACKABLE = "packable"
NOT_PACKABLE = "not_packable_at_resolution"

# 333/106 < pi, kept local so the oracle does not depend on geometry constants
_PI_NUM, _PI_DEN = 333, 106


@dataclass
class PackDecision:
    status: str
    placements: List[Placement] = field(default_factory=list)
    reason: str = ""
    nodes: int = 0

    @property
    def packable(self) -> bool:
        return self.status == PACKABLE


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def exact_pack_decision(circles: Sequence[Circle], bin: Bin, resolution_bits: int = 16,
                        node_budget: int = 20_000, max_items: int = 6) -> PackDecision:
    """Search for a packing with centers on dyadic grids of growing resolution.

    At resolution k the candidate coordinates are the multiples of
    width/2^k inside the admissible range, the two wall-tangent values, and
    positions touching an already placed circle along an axis.
    """
    circles = list(circles)
    if len(circles) > max_items:
        raise ParameterError(f"oracle handles at most {max_items} circles")
    if not circles:
        return PackDecision(PACKABLE, [], "empty")
    W, H = Fraction(bin.width), Fraction(bin.height)
    for c in circles:
        if c.diameter > W or c.diameter > H:
            return PackDecision(NOT_PACKABLE, reason="item larger than bin")
    # pi * sum r^2 <= W H is necessary; compare with pi rounded down
    s = sum(c.diameter * c.diameter for c in circles) / 4
    if s * _PI_NUM > W * H * _PI_DEN:
        return PackDecision(NOT_PACKABLE, reason="area")
    order = sorted(range(len(circles)), key=lambda i: (-circles[i].diameter, circles[i].id))
    base = 1
    for q in [W, H] + [c.diameter / 2 for c in circles]:
        base = _lcm(base, q.denominator)
    nodes = 0
    for k in range(0, resolution_bits + 1):
        den = base * 2 ** k
        Wi, Hi = int(W * den), int(H * den)
        radii = [int(c.diameter * den) // 2 for c in circles]
        found, used = _search(order, radii, Wi, Hi, Wi >> k, node_budget - nodes)
        nodes += used
        if found is not None:
            pl = [Placement(circles[i].id, Fraction(found[i][0], den), Fraction(found[i][1], den))
                  for i in order]
            return PackDecision(PACKABLE, pl, f"grid 2^-{k}", nodes)
        if nodes >= node_budget:
            return PackDecision(NOT_PACKABLE, reason=f"node budget at 2^-{k}", nodes=nodes)
    return PackDecision(NOT_PACKABLE, reason=f"exhausted 2^-{resolution_bits}", nodes=nodes)


def _search(order, radii, W, H, step, budget):
    """Depth-first search over integer center coordinates."""
    placed: Dict[int, Tuple[int, int]] = {}
    nodes = 0

    def coords(rad, L, extra):
        vals = {rad, L - rad}
        v = -(-rad // step) * step
        while v <= L - rad:
            vals.add(v)
            v += step
        vals.update(v for v in extra if rad <= v <= L - rad)
        return sorted(vals)

    def rec(pos):
        nonlocal nodes
        if pos == len(order):
            return True
        i = order[pos]
        rad = radii[i]
        xs_extra, ys_extra = [], []
        for j, (px, py) in placed.items():
            s = rad + radii[j]
            xs_extra += [px - s, px + s, px]
            ys_extra += [py - s, py + s, py]
        xs = coords(rad, W, xs_extra)
        ys = coords(rad, H, ys_extra)
        if pos == 0:
            # by symmetry the first circle can sit in the lower-left quadrant
            xs = [x for x in xs if 2 * x <= W]
            ys = [y for y in ys if 2 * y <= H]
        for y in ys:
            for x in xs:
                nodes += 1
                if nodes > budget:
                    return False
                ok = True
                for j, (px, py) in placed.items():
                    s = rad + radii[j]
                    if (x - px) ** 2 + (y - py) ** 2 < s * s:
                        ok = False
                        break
                if ok:
                    placed[i] = (x, y)
                    if rec(pos + 1):
                        return True
                    del placed[i]
                    if nodes > budget:
                        return False
        return False

    if rec(0):
        return dict(placed), nodes
    return None, nodes


def _expand(items: Sequence[Circle]) -> List[Circle]:
    out = []
    for c in items:
        for n in range(c.multiplicity):
            out.append(Circle(c.id if c.multiplicity == 1 else f"{c.id}#{n}", c.diameter, c.profit))
    return out


@dataclass
class KnapsackResult:
    profit: Fraction
    chosen: List[str]
    bins: List[List[Placement]]


def _constraints_ok(ids: Sequence[str], constraints) -> bool:
    for k in constraints:
        if sum((k.coeffs.get(cid.split("#")[0], Fraction(0)) for cid in ids), Fraction(0)) > k.rhs:
            return False
    return True


class _Decider:
    """Pack decisions cached by the sorted diameter tuple of the group."""

    def __init__(self, bin, bits, budget):
        self.bin, self.bits, self.budget = bin, bits, budget
        self.cache: Dict[Tuple, Optional[List[Tuple[Fraction, Fraction, Fraction]]]] = {}

    def __call__(self, group: Sequence[Circle]) -> PackDecision:
        key = tuple(sorted(c.diameter for c in group))
        if key not in self.cache:
            dec = exact_pack_decision(group, self.bin, self.bits, self.budget, max_items=len(group))
            if dec.packable:
                d = {c.id: c.diameter for c in group}
                self.cache[key] = [(d[p.circle_id], p.x, p.y) for p in dec.placements]
            else:
                self.cache[key] = None
        spots = self.cache[key]
        if spots is None:
            return PackDecision(NOT_PACKABLE)
        pool: Dict[Fraction, List[str]] = {}
        for c in sorted(group, key=lambda c: c.id):
            pool.setdefault(c.diameter, []).append(c.id)
        return PackDecision(PACKABLE, [Placement(pool[d].pop(0), x, y) for d, x, y in spots])


def exact_knapsack(instance: Instance, m: Optional[int] = None, resolution_bits: int = 16,
                   node_budget: int = 20_000, max_items: int = 8) -> KnapsackResult:
    """Best-profit subset packable into m copies of the bin.

    Subsets are visited by decreasing profit (ties: lexicographic on the
    sorted id tuple), so the first packable one is optimal.
    """
    m = instance.m if m is None else m
    if m > 2:
        raise ParameterError("oracle handles at most two knapsacks")
    items = _expand(instance.items)
    if len(items) > max_items:
        raise ParameterError(f"oracle handles at most {max_items} circles")
    decide = _Decider(instance.bin, resolution_bits, node_budget)
    subsets = []
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            subsets.append(combo)
    subsets.sort(key=lambda s: (-sum((c.profit for c in s), Fraction(0)), sorted(c.id for c in s)))
    area_cap = m * instance.bin.width * instance.bin.height * _PI_DEN
    for s in subsets:
        ids = [c.id for c in s]
        if not _constraints_ok(ids, instance.constraints):
            continue
        if sum(c.diameter * c.diameter for c in s) / 4 * _PI_NUM > area_cap:
            continue
        bins = _split(s, m, decide)
        if bins is not None:
            return KnapsackResult(sum((c.profit for c in s), Fraction(0)), sorted(ids), bins)
    return KnapsackResult(Fraction(0), [], [[] for _ in range(m)])


def _split(items, m, decide) -> Optional[List[List[Placement]]]:
    items = list(items)
    if m == 1:
        d = decide(items)
        return [d.placements] if d.packable else None
    n = len(items)
    for mask in range(2 ** n):
        if n and mask & 1:       # item 0 always goes to the first bin
            continue
        a = [items[i] for i in range(n) if not mask >> i & 1]
        b = [items[i] for i in range(n) if mask >> i & 1]
        da = decide(a)
        if not da.packable:
            continue
        db = decide(b)
        if db.packable:
            return [da.placements, db.placements]
    return None


def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def exact_binpack(instance: Instance, resolution_bits: int = 16, node_budget: int = 20_000,
                  max_items: int = 6) -> Tuple[int, List[List[Placement]]]:
    """Fewest bins holding every copy, over all set partitions."""
    items = _expand(instance.items)
    if len(items) > max_items:
        raise ParameterError(f"oracle handles at most {max_items} circles")
    if not items:
        return 0, []
    decide = _Decider(instance.bin, resolution_bits, node_budget)
    parts = sorted(_set_partitions(items), key=len)
    for part in parts:
        out = []
        for group in part:
            d = decide(group)
            if not d.packable:
                break
            out.append(d.placements)
        else:
            return len(part), out
    raise BudgetError("no partition packable at this resolution")


def _bisect(items, make_bin, lo: Fraction, hi: Fraction, tol: Fraction, bits, budget):
    best = exact_pack_decision(items, make_bin(hi), bits, budget)
    if not best.packable:
        raise BudgetError("upper bracket not certified")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        d = exact_pack_decision(items, make_bin(mid), bits, budget)
        if d.packable:
            hi, best = mid, d
        else:
            lo = mid
    return hi, best


def exact_container(items: Sequence[Circle], m: int = 1, rel_tol: Fraction = Fraction(1, 2 ** 20),
                    resolution_bits: int = 16, node_budget: int = 20_000) -> Tuple[Fraction, List[List[Placement]]]:
    """Smallest square side (certified packable) for m square bins, by bisection."""
    items = _expand(items)
    if len(items) > 4:
        raise ParameterError("container oracle handles at most 4 circles")
    return _best_split(items, m, lambda L: Bin(L, L), rel_tol, resolution_bits, node_budget)


def exact_strip(items: Sequence[Circle], width: Fraction, m: int = 1,
                rel_tol: Fraction = Fraction(1, 2 ** 20), resolution_bits: int = 16,
                node_budget: int = 20_000) -> Tuple[Fraction, List[List[Placement]]]:
    """Smallest common height for m strips of the given width."""
    items = _expand(items)
    if len(items) > 4:
        raise ParameterError("strip oracle handles at most 4 circles")
    return _best_split(items, m, lambda L: Bin(width, L), rel_tol, resolution_bits, node_budget)


def _best_split(items, m, make_bin, rel_tol, bits, budget):
    if not items:
        return Fraction(0), [[] for _ in range(m)]
    dmax = max(c.diameter for c in items)
    tol = rel_tol * dmax
    best = None
    groupings = []
    n = len(items)
    if m == 1:
        groupings = [[items]]
    else:
        for assign in itertools.product(range(m), repeat=n):
            if assign and assign[0] != 0:
                continue
            groups = [[items[i] for i in range(n) if assign[i] == b] for b in range(m)]
            groupings.append(groups)
    for groups in groupings:
        sides, packs = [], []
        for g in groups:
            if not g:
                sides.append(Fraction(0))
                packs.append([])
                continue
            lo = max(c.diameter for c in g)
            hi = sum(c.diameter for c in g)
            if best is not None and lo >= best[0]:
                sides = None
                break
            s, dec = _bisect(g, make_bin, lo, hi, tol, bits, budget)
            sides.append(s)
            packs.append(dec.placements)
        if sides is None:
            continue
        val = max(sides)
        if best is None or val < best[0]:
            best = (val, packs)
    return best
