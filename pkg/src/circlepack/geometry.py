"""Exact-rational 2-D primitives: circles, bins, placements, the
xi-packing model, an exact verifier and the upward shifting repair."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import InputError, ParameterError

Number = Union[int, str, Fraction, Decimal]

# rational brackets around pi; used wherever an area must stay rational
PI_LOW = Fraction(333, 106)
PI_HIGH = Fraction(355, 113)


def to_rational(value: Number) -> Fraction:
    """Parse ints, Fractions, Decimals and "p/q" or decimal strings exactly.

    Floats are refused on purpose: they would smuggle rounding into files.
    """
    if isinstance(value, bool):
        raise InputError("boolean is not a number")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Decimal):
        return Fraction(value)
    if isinstance(value, str):
        s = value.strip()
        try:
            if "/" in s:
                num, den = s.split("/", 1)
                return Fraction(int(num), int(den))
            return Fraction(Decimal(s))
        except (ValueError, ZeroDivisionError, ArithmeticError) as exc:
            raise InputError(f"not a rational number: {value!r}") from exc
    raise InputError(f"unsupported numeric type {type(value).__name__}")


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def sqrt_up(q: Fraction, bits: int = 64) -> Fraction:
    """Smallest dyadic rational >= sqrt(q) at `bits` significant bits (exact for squares)."""
    if q < 0:
        raise ValueError("negative radicand")
    if q == 0:
        return Fraction(0)
    a, b = q.numerator, q.denominator
    ra, rb = math.isqrt(a), math.isqrt(b)
    if ra * ra == a and rb * rb == b:
        return Fraction(ra, rb)
    k = bits - (a.bit_length() - b.bit_length()) // 2
    if k >= 0:
        scaled_num, scaled_den = a * 4 ** k, b
    else:
        scaled_num, scaled_den = a, b * 4 ** (-k)
    c = -(-scaled_num // scaled_den)
    s = math.isqrt(c)
    if s * s < c:
        s += 1
    return Fraction(s, 2 ** k) if k >= 0 else Fraction(s * 2 ** (-k))


def sqrt_down(q: Fraction, bits: int = 64) -> Fraction:
    """Largest dyadic rational <= sqrt(q) at `bits` significant bits."""
    if q < 0:
        raise ValueError("negative radicand")
    if q == 0:
        return Fraction(0)
    a, b = q.numerator, q.denominator
    ra, rb = math.isqrt(a), math.isqrt(b)
    if ra * ra == a and rb * rb == b:
        return Fraction(ra, rb)
    k = bits - (a.bit_length() - b.bit_length()) // 2
    if k >= 0:
        s = math.isqrt((a * 4 ** k) // b)
        return Fraction(s, 2 ** k)
    s = math.isqrt(a // (b * 4 ** (-k)))
    return Fraction(s * 2 ** (-k))


def ceil_rational(q: Fraction, bits: int = 64) -> Fraction:
    """Round q up onto the dyadic grid with `bits` fractional bits."""
    scale = 2 ** bits
    return Fraction(-((-q.numerator * scale) // q.denominator), scale)


@dataclass(frozen=True)
class Circle:
    id: str
    diameter: Fraction
    profit: Fraction = Fraction(0)
    multiplicity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "diameter", to_rational(self.diameter))
        object.__setattr__(self, "profit", to_rational(self.profit))
        if self.diameter <= 0:
            raise InputError(f"circle {self.id}: diameter must be positive")
        if self.profit < 0:
            raise InputError(f"circle {self.id}: profit must be nonnegative")
        if not isinstance(self.multiplicity, int) or self.multiplicity < 1:
            raise InputError(f"circle {self.id}: multiplicity must be a positive integer")

    @property
    def radius(self) -> Fraction:
        return self.diameter / 2


@dataclass(frozen=True)
class Bin:
    width: Fraction
    height: Fraction

    def __post_init__(self):
        object.__setattr__(self, "width", to_rational(self.width))
        object.__setattr__(self, "height", to_rational(self.height))
        if self.width <= 0 or self.height <= 0:
            raise InputError("bin dimensions must be positive")

    @property
    def area(self) -> Fraction:
        return self.width * self.height


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle given by its lower-left corner and size."""
    x: Fraction
    y: Fraction
    w: Fraction
    h: Fraction

    @property
    def x1(self):
        return self.x + self.w

    @property
    def y1(self):
        return self.y + self.h

    def contains_rect(self, other: "Rect") -> bool:
        return (self.x <= other.x and self.y <= other.y
                and other.x1 <= self.x1 and other.y1 <= self.y1)

    def interiors_overlap(self, other: "Rect") -> bool:
        return (self.x < other.x1 and other.x < self.x1
                and self.y < other.y1 and other.y < self.y1)


@dataclass(frozen=True)
class Placement:
    circle_id: str
    x: Fraction
    y: Fraction

    def moved(self, dx=0, dy=0) -> "Placement":
        return Placement(self.circle_id, self.x + dx, self.y + dy)


@dataclass(frozen=True)
class SideConstraint:
    """Linear constraint sum(coeffs[id] * z[id]) <= rhs over item selections."""
    coeffs: Dict[str, Fraction]
    rhs: Fraction


@dataclass
class Instance:
    bin: Bin
    items: List[Circle]
    m: int = 1
    constraints: List[SideConstraint] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for c in self.items:
            if c.id in seen:
                raise InputError(f"duplicate item id {c.id}")
            seen.add(c.id)
        if self.m < 1:
            raise InputError("m must be at least 1")
        for k in self.constraints:
            for cid, a in k.coeffs.items():
                if cid not in seen:
                    raise InputError(f"constraint references unknown item {cid}")
                if a < 0:
                    raise InputError("constraint coefficients must be nonnegative")
            if k.rhs < 0:
                raise InputError("constraint rhs must be nonnegative")

    def table(self) -> Dict[str, Circle]:
        return {c.id: c for c in self.items}

    def normalized(self) -> "Instance":
        """Swap the bin so that width <= height (coordinates are relative anyway)."""
        if self.bin.width <= self.bin.height:
            return self
        return Instance(Bin(self.bin.height, self.bin.width), self.items, self.m, self.constraints)


@dataclass
class XiPacking:
    bin: Bin
    placements: List[Placement]
    xi: Fraction


@dataclass(frozen=True)
class Violation:
    kind: str                  # "pair" or "boundary"
    items: Tuple[str, ...]
    amount: Fraction           # overlap, rounded up when irrational


@dataclass
class Verdict:
    valid: bool
    xi: Fraction
    violations: List[Violation]

    def __bool__(self):
        return self.valid


def _table(circles) -> Dict[str, Circle]:
    if isinstance(circles, dict):
        return circles
    return {c.id: c for c in circles}


def _radii(placements, circles) -> List[Fraction]:
    table = _table(circles)
    out = []
    for p in placements:
        c = table.get(p.circle_id)
        if c is None:
            raise InputError(f"placement references unknown circle {p.circle_id!r}")
        out.append(c.radius)
    return out


def _boundary_overlap(p: Placement, r: Fraction, bin: Bin) -> Fraction:
    return max(r - p.x, p.x - (bin.width - r), r - p.y, p.y - (bin.height - r))


def _candidate_pairs(placements: Sequence[Placement], radii: Sequence[Fraction]) -> List[Tuple[int, int]]:
    """Index pairs (i < j) whose projections on the sweep axis overlap.

    Pairs left out are at least r_i + r_j apart along that axis, so they
    cannot overlap; the sweep runs along the axis with the larger spread.
    """
    n = len(placements)
    if n < 2:
        return []
    xs = [p.x for p in placements]
    ys = [p.y for p in placements]
    coord = xs if max(xs) - min(xs) >= max(ys) - min(ys) else ys
    order = sorted(range(n), key=lambda i: (coord[i] - radii[i], i))
    out = []
    active: List[int] = []
    for i in order:
        lo = coord[i] - radii[i]
        active = [k for k in active if coord[k] + radii[k] > lo]
        for k in active:
            out.append((min(i, k), max(i, k)))
        active.append(i)
    out.sort()
    return out


def verify_packing(bin: Bin, placements: Sequence[Placement], circles,
                   bits: int = 64) -> Verdict:
    """Exact check that the placements form a packing (tangency allowed).

    Validity is decided by squared-distance comparisons only.  When a pair
    overlaps by an irrational amount the reported amount is rounded up.
    """
    radii = _radii(placements, circles)
    violations: List[Violation] = []
    worst = Fraction(0)
    for p, r in zip(placements, radii):
        over = _boundary_overlap(p, r, bin)
        if over > 0:
            violations.append(Violation("boundary", (p.circle_id,), over))
            worst = max(worst, over)
    n = len(placements)
    for i, j in _candidate_pairs(placements, radii):
        pi, ri = placements[i], radii[i]
        pj, rj = placements[j], radii[j]
        dx = pi.x - pj.x
        dy = pi.y - pj.y
        d2 = dx * dx + dy * dy
        s = ri + rj
        if d2 < s * s:
            over = s - sqrt_down(d2, bits)
            violations.append(Violation("pair", (pi.circle_id, pj.circle_id), over))
            worst = max(worst, over)
    return Verdict(not violations, worst, violations)


def min_xi(bin: Bin, placements: Sequence[Placement], circles, bits: int = 64) -> Fraction:
    """Smallest xi making the attribution a xi-packing (upper-rounded when irrational)."""
    return verify_packing(bin, placements, circles, bits).xi


def is_xi_packing(xp: XiPacking, circles) -> bool:
    """Exact membership test of the xi-packing inequalities (no rounding at all)."""
    radii = _radii(xp.placements, circles)
    xi = xp.xi
    for p, r in zip(xp.placements, radii):
        if _boundary_overlap(p, r, xp.bin) > xi:
            return False
    n = len(radii)
    for i in range(n):
        for j in range(i + 1, n):
            s = radii[i] + radii[j] - xi
            if s <= 0:
                continue
            dx = xp.placements[i].x - xp.placements[j].x
            dy = xp.placements[i].y - xp.placements[j].y
            if dx * dx + dy * dy < s * s:
                return False
    return True


def shift_bound(n: int, eps: Fraction, h: Fraction, bits: int = 64) -> Fraction:
    """Rounded-up height (1 + n*sqrt(6*eps))*h guaranteed by shift_repair."""
    return h + n * sqrt_up(6 * eps, bits) * h


def shift_repair(xp: XiPacking, eps: Fraction, circles, bits: int = 64,
                 on_displace: Optional[Callable[[Placement, Placement], None]] = None
                 ) -> Tuple[Bin, List[Placement]]:
    """Turn an (eps*h)-packing into a valid packing by pushing circles upward.

    Centers first move horizontally inside the walls (at most xi each), then
    circles are processed bottom-up by (y, id); each is raised by the least
    amount keeping it clear of everything below, never less than the lift of
    the circle processed before it.  The bin keeps its width and grows in
    height only.  `on_displace(old, new)` is called for each moved circle.
    """
    eps = to_rational(eps)
    if eps <= 0:
        raise ParameterError("eps must be positive")
    bin = xp.bin
    if xp.xi > eps * bin.height:
        raise ParameterError("xi exceeds eps * h")
    if not xp.placements:
        return bin, []
    table = _table(circles)
    radii = _radii(xp.placements, table)
    if not is_xi_packing(xp, table):
        raise InputError("input is not a xi-packing for the declared xi")
    w = bin.width
    moved = []
    for p, r in zip(xp.placements, radii):
        x = min(max(p.x, r), w - r)
        moved.append((p.y, p.circle_id, x, r, p))
    moved.sort(key=lambda t: (t[0], t[1]))
    lifts: List[Fraction] = []
    out: List[Tuple[Fraction, Fraction, Fraction, Placement]] = []
    prev = Fraction(0)
    for k, (y, cid, x, r, orig) in enumerate(moved):
        lift = max(prev, r - y)
        for i in range(k):
            yi, _, xi_, ri, _ = moved[i]
            s = r + ri
            dx = x - xi_
            rest = s * s - dx * dx
            if rest <= 0:
                continue
            need = sqrt_up(rest, bits) - (y - yi) + lifts[i]
            if need > lift:
                lift = need
        lifts.append(lift)
        prev = lift
        out.append((x, y + lift, r, orig))
    top = max(yy + r for _, yy, r, _ in out)
    height = max(bin.height, top)
    result = []
    for x, y, r, orig in out:
        np_ = Placement(orig.circle_id, x, y)
        if on_displace is not None and (np_.x != orig.x or np_.y != orig.y):
            on_displace(orig, np_)
        result.append(np_)
    # keep the caller's order
    index = {id(o): i for i, (_, _, _, o) in enumerate(out)}
    ordered = [result[index[id(p)]] for p in xp.placements]
    return Bin(w, height), ordered


def grid_cells(bin: Bin, cell_w: Fraction, cell_h: Fraction, origin=(0, 0)) -> List[Rect]:
    """Full cells of a grid anchored at the bin origin, row-major from the bottom."""
    cell_w, cell_h = to_rational(cell_w), to_rational(cell_h)
    if cell_w <= 0 or cell_h <= 0:
        raise ParameterError("cell dimensions must be positive")
    ox, oy = origin
    cols = int(bin.width // cell_w)
    rows = int(bin.height // cell_h)
    return [Rect(ox + c * cell_w, oy + r * cell_h, cell_w, cell_h)
            for r in range(rows) for c in range(cols)]


def disk_touches_rect(cx, cy, r, rect: Rect) -> bool:
    """Closed disk against closed rectangle, via the closest point of the rectangle."""
    px = min(max(cx, rect.x), rect.x1)
    py = min(max(cy, rect.y), rect.y1)
    dx, dy = cx - px, cy - py
    return dx * dx + dy * dy <= r * r


def free_cells(bin: Bin, placements: Sequence[Placement], cell_w, cell_h, circles=None,
               radii: Optional[Sequence[Fraction]] = None) -> List[Rect]:
    """Grid cells whose closed rectangle meets no closed disk."""
    cell_w, cell_h = to_rational(cell_w), to_rational(cell_h)
    if cell_w <= 0 or cell_h <= 0:
        raise ParameterError("cell dimensions must be positive")
    if radii is None:
        radii = _radii(placements, circles)
    cols = int(bin.width // cell_w)
    rows = int(bin.height // cell_h)
    blocked = set()
    for p, r in zip(placements, radii):
        c0 = max(0, math.floor((p.x - r) / cell_w) - 1)
        c1 = min(cols - 1, math.floor((p.x + r) / cell_w) + 1)
        r0 = max(0, math.floor((p.y - r) / cell_h) - 1)
        r1 = min(rows - 1, math.floor((p.y + r) / cell_h) + 1)
        for row in range(r0, r1 + 1):
            for col in range(c0, c1 + 1):
                if (row, col) in blocked:
                    continue
                cell = Rect(col * cell_w, row * cell_h, cell_w, cell_h)
                if disk_touches_rect(p.x, p.y, r, cell):
                    blocked.add((row, col))
    return [Rect(c * cell_w, r * cell_h, cell_w, cell_h)
            for r in range(rows) for c in range(cols) if (r, c) not in blocked]


def count_free_cells(bin: Bin, placements, cell_w, cell_h, radii) -> int:
    cols = int(bin.width // cell_w)
    rows = int(bin.height // cell_h)
    if not placements:
        return cols * rows
    return len(free_cells(bin, placements, cell_w, cell_h, radii=radii))


def wasted_cells(bin: Bin, placements, cell_w, cell_h, circles) -> List[Rect]:
    """Cells that meet some disk without lying inside a single disk."""
    cell_w, cell_h = to_rational(cell_w), to_rational(cell_h)
    radii = _radii(placements, circles)
    cols = int(bin.width // cell_w)
    rows = int(bin.height // cell_h)
    touched: Dict[Tuple[int, int], bool] = {}     # cell -> lies inside one disk
    for p, r in zip(placements, radii):
        # integer coordinates in units of 1/D keep the per-cell tests cheap
        D = _lcm_all((cell_w.denominator, cell_h.denominator, p.x.denominator, p.y.denominator, r.denominator))
        cx, cy, rr = int(p.x * D), int(p.y * D), int(r * D)
        cw, ch = int(cell_w * D), int(cell_h * D)
        r2 = rr * rr
        c0 = max(0, (cx - rr) // cw - 1)
        c1 = min(cols - 1, (cx + rr) // cw + 1)
        r0 = max(0, (cy - rr) // ch - 1)
        r1 = min(rows - 1, (cy + rr) // ch + 1)
        for row in range(r0, r1 + 1):
            y0, y1 = row * ch, row * ch + ch
            dy = 0 if y0 <= cy <= y1 else min(abs(cy - y0), abs(cy - y1))
            fy = max(abs(cy - y0), abs(cy - y1))
            for col in range(c0, c1 + 1):
                if touched.get((row, col)):
                    continue
                x0, x1 = col * cw, col * cw + cw
                dx = 0 if x0 <= cx <= x1 else min(abs(cx - x0), abs(cx - x1))
                if dx * dx + dy * dy <= r2:
                    fx = max(abs(cx - x0), abs(cx - x1))
                    touched[(row, col)] = fx * fx + fy * fy <= r2
    return [Rect(c * cell_w, r * cell_h, cell_w, cell_h)
            for (r, c), inside in sorted(touched.items()) if not inside]


def _lcm_all(values) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def circle_area_bounds(radii: Iterable[Fraction]) -> Tuple[Fraction, Fraction]:
    """Rational lower/upper brackets on the total disk area."""
    s = sum((r * r for r in radii), Fraction(0))
    return PI_LOW * s, PI_HIGH * s
