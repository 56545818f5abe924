"""Radius rounding, configuration enumeration, constructive feasibility
checks and free-cell estimates for one level of a gap-structured partition."""
from __future__ import annotations

import itertools
import logging
import math
import random
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import BudgetError
from .geometry import PI_HIGH, PI_LOW, Bin, Circle, Placement, sqrt_up, verify_packing
from .partition import LevelGeometry, SchemeParams, config_size_bound

log = logging.getLogger(__name__)

# float slack used only to prefilter candidate positions; exact checks decide
_FTOL = 1e-11
_SNAP_BITS = 40
_RULES = ("bottom", "shelf", "left")


@dataclass
class RadiusClass:
    value: Fraction               # rounded radius
    members: List[str]            # profit descending, then id
    demand: int                   # total copies, counting multiplicities


@dataclass
class RadiusClasses:
    level: int
    classes: List[RadiusClass] = field(default_factory=list)

    def __len__(self):
        return len(self.classes)

    @property
    def values(self) -> List[Fraction]:
        return [c.value for c in self.classes]

    def class_of(self) -> Dict[str, int]:
        return {cid: k for k, c in enumerate(self.classes) for cid in c.members}


@dataclass
class Configuration:
    level: int
    counts: Tuple[int, ...]
    radii: Tuple[Fraction, ...]
    realization: Optional[List[Tuple[int, Fraction, Fraction]]] = None
    free_estimate: Fraction = Fraction(0)
    # a dominating configuration whose slots this one is a sub-multiset of
    source: Optional["Configuration"] = field(default=None, repr=False, compare=False)

    @property
    def size(self) -> int:
        return sum(self.counts)

    @property
    def sumsq(self) -> Fraction:
        return sum((c * t * t for c, t in zip(self.counts, self.radii)), Fraction(0))

    @property
    def area(self) -> Fraction:
        """Upper bracket on the disk area (pi rounded up)."""
        return PI_HIGH * self.sumsq

    @property
    def feasible(self) -> bool:
        return self.realization is not None or self.source is not None

    def slots(self) -> List[Tuple[int, Fraction, Fraction]]:
        """(class index, x, y) per slot; derived configurations keep the first
        slots of each class from their source."""
        if self.realization is not None:
            return self.realization
        if self.source is None:
            raise ValueError("configuration has no realization")
        left = list(self.counts)
        out = []
        for k, x, y in self.source.slots():
            if left[k]:
                left[k] -= 1
                out.append((k, x, y))
        return out


@dataclass
class EnumerationStats:
    vectors: int = 0
    area_pruned: int = 0
    not_found: int = 0
    truncated: bool = False


# ---------------------------------------------------------------- rounding

def _sorted_members(items: Sequence[Circle]) -> List[str]:
    return [c.id for c in sorted(items, key=lambda c: (-c.profit, c.id))]


def _grid_index(ratio: Fraction, base: Fraction) -> int:
    """Smallest k with base^k >= ratio (ratio >= 1, base > 1)."""
    if ratio <= 1:
        return 0
    k = max(0, int(math.floor(math.log(float(ratio)) / math.log(float(base)))) - 1)
    power = base ** k
    while power < ratio:
        power *= base
        k += 1
    while k > 0 and power / base >= ratio:
        power /= base
        k -= 1
    return k


def round_radii(level_items: Sequence[Circle], level: int, params: SchemeParams,
                geo: Optional[LevelGeometry] = None) -> RadiusClasses:
    """Group level items into rounded-radius classes; radii only round up.

    Levels use the grid r_min (1+eps)^k capped by r_max itself.  Level 0 in
    one-dimensional mode uses the finer base 1+delta, delta = eps^2/(6 K0^2),
    and the class value is its largest member radius (never above the grid
    value).  Level 0 in PTAS mode is not rounded at all.
    """
    out = RadiusClasses(level)
    if not level_items:
        return out
    radii = sorted({c.radius for c in level_items})
    r_min, r_max = radii[0], radii[-1]
    buckets: Dict[Fraction, List[Circle]] = {}
    if level == 0 and params.mode == "ptas":
        for c in level_items:
            buckets.setdefault(c.radius, []).append(c)
    elif level == 0 and params.mode == "ras1d":
        if geo is None:
            raise ValueError("level geometry required for one-dimensional rounding")
        k0 = config_size_bound(geo, r_min, params, True)
        delta = params.eps ** 2 / (6 * k0 * k0)
        index = _fine_indices(radii, r_min, delta)
        groups: Dict[int, List[Circle]] = {}
        for c in level_items:
            groups.setdefault(index[c.radius], []).append(c)
        for members in groups.values():
            buckets.setdefault(max(c.radius for c in members), []).extend(members)
    else:
        base = 1 + params.eps
        for c in level_items:
            if c.radius == r_max:
                value = r_max
            else:
                k = _grid_index(c.radius / r_min, base)
                value = min(r_min * base ** k, r_max)
            buckets.setdefault(value, []).append(c)
    for value in sorted(buckets):
        members = buckets[value]
        out.classes.append(RadiusClass(value, _sorted_members(members),
                                       sum(c.multiplicity for c in members)))
    return out


def _fine_indices(radii: Sequence[Fraction], r_min: Fraction, delta: Fraction) -> Dict[Fraction, int]:
    """ceil(log_{1+delta}(r / r_min)) with enough decimal digits to be exact in practice."""
    digits = max(50, len(str(delta.denominator)) + 40)
    with localcontext() as ctx:
        ctx.prec = digits
        step = (Decimal(1) + Decimal(delta.numerator) / Decimal(delta.denominator)).ln()
        out = {}
        for r in radii:
            q = r / r_min
            val = (Decimal(q.numerator) / Decimal(q.denominator)).ln() / step
            out[r] = int(val.to_integral_value(rounding="ROUND_CEILING"))
    return out


# ---------------------------------------------------------- feasibility

def _circle_pairs(r, placed):
    """Float positions for a circle of radius r tangent to two placed circles."""
    out = []
    n = len(placed)
    for a in range(n):
        xa, ya, ra = placed[a][:3]
        for b in range(a + 1, n):
            xb, yb, rb = placed[b][:3]
            da, db = r + ra, r + rb
            dx, dy = xb - xa, yb - ya
            d2 = dx * dx + dy * dy
            d = math.sqrt(d2)
            if d == 0 or d > da + db or d < abs(da - db):
                continue
            along = (da * da - db * db + d2) / (2 * d)
            hh = da * da - along * along
            if hh < 0:
                hh = 0.0
            hgt = math.sqrt(hh)
            mx, my = xa + along * dx / d, ya + along * dy / d
            out.append((mx - hgt * dy / d, my + hgt * dx / d))
            out.append((mx + hgt * dy / d, my - hgt * dx / d))
    return out


def _candidates(r, W, H, placed):
    c = [(r, r), (W - r, r)]
    for (x, y, rr) in (q[:3] for q in placed):
        s = r + rr
        for wall_y in (r,):
            dy = wall_y - y
            if s * s >= dy * dy:
                off = math.sqrt(s * s - dy * dy)
                c.append((x - off, wall_y))
                c.append((x + off, wall_y))
        for wall_x in (r, W - r):
            dx = wall_x - x
            if s * s >= dx * dx:
                off = math.sqrt(s * s - dx * dx)
                c.append((wall_x, y + off))
                c.append((wall_x, y - off))
        # directly on top
        c.append((x, y + s))
    c.extend(_circle_pairs(r, placed))
    return c


def _float_ok(x, y, r, W, H, placed, tol):
    if x < r - tol or x > W - r + tol or y < r - tol or y > H - r + tol:
        return False
    for (px, py, pr) in (q[:3] for q in placed):
        s = r + pr - tol
        dx, dy = x - px, y - py
        if dx * dx + dy * dy < s * s:
            return False
    return True


def _snap(v: float, lo: Fraction, hi: Fraction, unit: Fraction, tol: float) -> Fraction:
    if abs(v - float(lo)) <= tol:
        return lo
    if abs(v - float(hi)) <= tol:
        return hi
    q = Fraction(round(v / float(unit))) * unit
    return min(max(q, lo), hi)


def _exact_fix(x: Fraction, y: Fraction, r: Fraction, W: Fraction, H: Fraction,
               placed, bits: int) -> Optional[Tuple[Fraction, Fraction]]:
    """Push (x, y) upward until it clears every placed circle exactly."""
    for _ in range(6):
        if y < r:
            y = r
        if y > H - r:
            return None
        worst = None
        for (_, _, _, qx, qy, qr) in placed:
            s = r + qr
            dx, dy = x - qx, y - qy
            if dx * dx + dy * dy < s * s:
                rest = s * s - dx * dx
                need = qy + sqrt_up(rest, bits)
                if worst is None or need > worst:
                    worst = need
        if worst is None:
            return x, y
        y = worst
    return None


def _greedy(radii: Sequence[Fraction], order: Sequence[int], W: Fraction, H: Fraction,
            bits: int, rule: str = "bottom") -> Optional[List[Tuple[int, Fraction, Fraction]]]:
    """Place circles one by one at the best candidate under `rule`.

    bottom: lowest then leftmost; shelf: lowest in steps of one radius, then
    leftmost (gives lattice rows); left: leftmost then lowest.
    """
    Wf, Hf = float(W), float(H)
    tol = _FTOL * Wf
    unit = W / 2 ** _SNAP_BITS
    placed = []
    result = [None] * len(radii)
    for idx in order:
        r = radii[idx]
        rf = float(r)
        if 2 * r > W or 2 * r > H:
            return None
        cands = [c for c in _candidates(rf, Wf, Hf, placed) if _float_ok(c[0], c[1], rf, Wf, Hf, placed, tol)]
        if rule == "shelf":
            cands.sort(key=lambda c: (round(c[1] / rf), c[0], c[1]))
        elif rule == "left":
            cands.sort(key=lambda c: (round(c[0] / tol), c[1]))
        else:
            cands.sort(key=lambda c: (round(c[1] / tol), c[0]))
        spot = None
        for cx, cy in cands:
            x = _snap(cx, r, W - r, unit, tol)
            y = _snap(cy, r, H - r, unit, tol)
            fixed = _exact_fix(x, y, r, W, H, placed, bits)
            if fixed is not None:
                spot = fixed
                break
        if spot is None:
            return None
        x, y = spot
        placed.append((float(x), float(y), rf, x, y, r))
        result[idx] = (x, y)
    return result


def _grid_search(radii: Sequence[Fraction], W: Fraction, H: Fraction, steps: int = 16
                 ) -> Optional[List[Tuple[Fraction, Fraction]]]:
    """Exhaustive placement on a rational grid plus wall-tangent coordinates (n <= 3)."""
    def coords(r, L):
        vals = {r, L - r}
        k = 0
        unit = W / steps
        while k * unit <= L:
            v = k * unit
            if r <= v <= L - r:
                vals.add(v)
            k += 1
        return sorted(vals)

    n = len(radii)
    if len(coords(radii[0], W)) * len(coords(radii[0], H)) > 4096:
        return None
    pos: List[Tuple[Fraction, Fraction]] = []

    def rec(i):
        if i == n:
            return True
        r = radii[i]
        if 2 * r > W or 2 * r > H:
            return False
        for y in coords(r, H):
            for x in coords(r, W):
                ok = True
                for (px, py), pr in zip(pos, radii):
                    s = r + pr
                    if (x - px) ** 2 + (y - py) ** 2 < s * s:
                        ok = False
                        break
                if ok:
                    pos.append((x, y))
                    if rec(i + 1):
                        return True
                    pos.pop()
        return False

    return list(pos) if rec(0) else None


def check_feasibility(counts: Sequence[int], radii: Sequence[Fraction], bin_w: Fraction,
                      bin_h: Fraction, gamma: Fraction = Fraction(0), seed: int = 0,
                      restarts: int = 8, bits: int = 64, greedy_limit: int = 40
                      ) -> Optional[List[Tuple[int, Fraction, Fraction]]]:
    """Try to pack the multiset into bin_w x (1+gamma) bin_h.

    Shelf packing of square hulls is tried first; small multisets then get
    the tangency-driven greedy with seeded restarts and, up to three
    circles, a grid search.  Returns (class index, x, y) triples that pass
    the exact verifier, or None when nothing was found; None does not prove
    infeasibility.  Large shelf packings skip the quadratic re-verification
    since hulls are disjoint by construction.
    """
    W = Fraction(bin_w)
    H = (1 + Fraction(gamma)) * Fraction(bin_h)
    flat = [k for k, c in enumerate(counts) for _ in range(c)]
    if not flat:
        return []
    rr = [radii[k] for k in flat]
    if any(2 * r > W or 2 * r > H for r in rr):
        return None
    if PI_LOW * sum(r * r for r in rr) > W * H:
        return None
    base = sorted(range(len(rr)), key=lambda i: (-rr[i], i))
    pos = _hull_shelves(rr, base, W, H)
    if pos is not None:
        out = [(flat[i], x, y) for i, (x, y) in enumerate(pos)]
        if len(out) > greedy_limit or _verify(out, radii, W, H):
            return out
    if len(rr) > greedy_limit:
        return None
    rng = random.Random(seed)
    orders = [base]
    for _ in range(restarts):
        o = base[:]
        rng.shuffle(o)
        orders.append(o)
    for o in orders:
        for rule in _RULES:
            pos = _greedy(rr, o, W, H, bits, rule)
            if pos is not None:
                out = [(flat[i], x, y) for i, (x, y) in enumerate(pos)]
                if _verify(out, radii, W, H):
                    return out
    if len(rr) <= 3:
        pos = _grid_search([rr[i] for i in base], W, H)
        if pos is not None:
            out = [(flat[i], x, y) for i, (x, y) in zip(base, pos)]
            if _verify(out, radii, W, H):
                return out
    return None


def _hull_shelves(rr: Sequence[Fraction], order: Sequence[int], W: Fraction, H: Fraction
                  ) -> Optional[List[Tuple[Fraction, Fraction]]]:
    """Circles centred in their square hulls, hulls packed by next-fit shelves."""
    pos: List[Optional[Tuple[Fraction, Fraction]]] = [None] * len(rr)
    x = base = shelf = Fraction(0)
    for i in order:
        d = 2 * rr[i]
        if x + d > W or shelf == 0:
            base += shelf
            x, shelf = Fraction(0), d
            if base + d > H:
                return None
        pos[i] = (x + rr[i], base + rr[i])
        x += d
    return pos


def _verify(real, radii, W, H) -> bool:
    circles = {str(k): Circle(str(k), 2 * radii[k]) for k in {k for k, _, _ in real}}
    pl = [Placement(str(k), x, y) for k, x, y in real]
    return verify_packing(Bin(W, H), pl, circles).valid


# ---------------------------------------------------------- enumeration

def free_estimate(config: Configuration, geo: LevelGeometry, next_geo: LevelGeometry,
                  eps: Fraction) -> Fraction:
    """(w'_j h'_j - (1+16 eps) * area(C)) / (w'_{j+1} h'_{j+1}); may be negative."""
    return (geo.nominal_area - (1 + 16 * eps) * config.area) / next_geo.nominal_area


def _dominates(v, w) -> bool:
    return all(a >= b for a, b in zip(v, w))


def enumerate_configurations(classes: RadiusClasses, geo: LevelGeometry, next_geo: LevelGeometry,
                             params: SchemeParams, bin_w: Optional[Fraction] = None,
                             bin_h: Optional[Fraction] = None,
                             stats: Optional[EnumerationStats] = None,
                             strict_cap: bool = False) -> List[Configuration]:
    """All feasible count vectors in lexicographic order (empty one included).

    Vectors respect c_k <= demand_k, |C| <= K_j and rational disk area <=
    box area.  For each prefix the largest packable count of the last class
    is searched (one packer call, then bisection); every smaller count takes
    a sub-multiset of that realization, which is a packing as well.
    Prefixes whose empty tail already failed prune their supersets.
    """
    stats = stats if stats is not None else EnumerationStats()
    W = geo.bin_w if bin_w is None else bin_w
    H = geo.bin_h if bin_h is None else bin_h
    vals = classes.values
    T = len(vals)
    cap_size = config_size_bound(geo, vals[0], params, True) if T else 0
    limits = [min(c.demand, cap_size) for c in classes.classes]
    box = W * H
    failed: List[Tuple[int, ...]] = []
    out: List[Configuration] = []

    def make(vec) -> Optional[Configuration]:
        real = check_feasibility(vec, vals, W, H, 0, params.seed, bits=params.precision_bits)
        if real is None:
            return None
        return Configuration(classes.level, tuple(vec), tuple(vals), real)

    def emit_tail(prefix, sumsq, size) -> bool:
        t2 = vals[-1] * vals[-1]
        room = (box / PI_LOW - sumsq) / t2
        top = max(0, min(limits[-1], cap_size - size, math.floor(room)))
        stats.area_pruned += limits[-1] - top
        if any(_dominates(prefix + (0,), f) for f in failed):
            stats.not_found += top + 1
            return True
        best = make(prefix + (top,))
        if best is None:
            best = make(prefix + (0,))
            if best is None:
                failed.append(prefix + (0,))
                stats.not_found += top + 1
                return True
            lo, hi = 0, top
            while hi - lo > 1:
                mid = (lo + hi) // 2
                cfg = make(prefix + (mid,))
                if cfg is None:
                    hi = mid
                else:
                    lo, best = mid, cfg
        n_best = best.counts[-1]
        stats.not_found += top - n_best
        if stats.vectors + n_best + 1 > params.config_cap:
            stats.truncated = True
            if strict_cap:
                raise BudgetError("configuration enumeration cap exceeded")
            n_best = params.config_cap - stats.vectors - 1
            if n_best < 0:
                return False
        stats.vectors += n_best + 1
        for c in range(n_best + 1):
            if c == best.counts[-1]:
                cfg = best
            else:
                cfg = Configuration(classes.level, prefix + (c,), tuple(vals), None, source=best)
            cfg.free_estimate = free_estimate(cfg, geo, next_geo, params.eps)
            out.append(cfg)
        return not stats.truncated

    vec: List[int] = []

    def rec(k, sumsq, size) -> bool:
        if k == T - 1:
            return emit_tail(tuple(vec), sumsq, size)
        t2 = vals[k] * vals[k]
        for c in range(limits[k] + 1):
            if c and (PI_LOW * (sumsq + c * t2) > box or size + c > cap_size):
                stats.area_pruned += 1
                break
            vec.append(c)
            ok = rec(k + 1, sumsq + c * t2, size + c)
            vec.pop()
            if not ok:
                return False
        return True

    if T == 0:
        stats.vectors += 1
        cfg = Configuration(classes.level, (), (), [])
        cfg.free_estimate = free_estimate(cfg, geo, next_geo, params.eps)
        out.append(cfg)
    else:
        rec(0, Fraction(0), 0)
    if stats.truncated:
        log.warning("configuration enumeration truncated at %d vectors (level %d)",
                    params.config_cap, classes.level)
    out.sort(key=lambda c: c.counts)
    return out


def _copies(members: Sequence[str], table) -> Iterator[str]:
    for cid in members:
        for _ in range(table[cid].multiplicity if table else 1):
            yield cid


def realize_with_originals(config: Configuration, classes: RadiusClasses,
                           pools: Optional[Dict[int, Iterator[str]]] = None,
                           table: Optional[Dict[str, Circle]] = None) -> List[Placement]:
    """Swap scaled slots for original circles of highest profit.

    pools optionally supplies per-class id streams (one entry per copy);
    otherwise class members are used in profit order, each repeated by its
    multiplicity when a circle table is given.  Slots left without an
    original stay empty.
    """
    if pools is None:
        pools = {k: _copies(c.members, table) for k, c in enumerate(classes.classes)}
    out = []
    by_class: Dict[int, List[Tuple[Fraction, Fraction]]] = {}
    for k, x, y in config.slots():
        by_class.setdefault(k, []).append((x, y))
    for k in sorted(by_class):
        it = pools.get(k, iter(()))
        for (x, y) in by_class[k]:
            cid = next(it, None)
            if cid is None:
                break
            out.append(Placement(cid, x, y))
    return out


def hull_candidates(configs: Sequence[Configuration], geo: LevelGeometry, next_geo: LevelGeometry,
                    eps: Fraction, max_classes: int = 10) -> List[Configuration]:
    """Configurations that can be vertices of the hull of the feasible set's down-closure.

    Sub-multisets of a realized configuration are realized as well, so the
    down-closure is feasible.  Its hull vertices are, for some set of
    classes forced to zero, maximal among the projections.  When the
    free-cell estimate is affine in the counts (levels with continuous
    variables) the remaining columns are convex combinations of these and
    can be dropped without changing the LP optimum.
    """
    if not configs:
        return []
    T = len(configs[0].counts)
    if T > max_classes or len(configs) <= 2:
        return list(configs)
    maximal_sets: Dict[Tuple[int, ...], Configuration] = {}
    for mask in range(2 ** T):
        proj: Dict[Tuple[int, ...], Configuration] = {}
        for cfg in configs:
            key = tuple(0 if mask >> k & 1 else c for k, c in enumerate(cfg.counts))
            proj.setdefault(key, cfg)
        keys = sorted(proj, key=lambda v: (-sum(v), v))
        kept: List[Tuple[int, ...]] = []
        for v in keys:
            if not any(_dominates(u, v) for u in kept):
                kept.append(v)
        for v in kept:
            if v not in maximal_sets:
                src = proj[v]
                if src.counts == v:
                    maximal_sets[v] = src
                else:
                    cfg = Configuration(src.level, v, src.radii, None, source=src)
                    cfg.free_estimate = free_estimate(cfg, geo, next_geo, eps)
                    maximal_sets[v] = cfg
    return [maximal_sets[v] for v in sorted(maximal_sets)]
