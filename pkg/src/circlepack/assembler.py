"""End-to-end drivers: partition, medium packing, configuration LPs, rounding
and recursive grid placement, assembled into structured packings.

A packing is stored by bin *types*.  A type is a box holding its own
circles plus child bins in free grid cells; children are kept as runs
(child type, count) consuming the free cells in row-major order, so
multiplicities in the billions never get expanded.  Top-level bins are
runs of root types with the medium strip and the overflow strip on top.
"""
from __future__ import annotations

import hashlib
import logging
import math
import time
from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .configs import (Configuration, EnumerationStats, RadiusClasses, enumerate_configurations,
                      hull_candidates, round_radii)
from .errors import BudgetError, InputError, InvariantError, PackError, ParameterError
from .geometry import (PI_LOW, Bin, Circle, Instance, Placement, Rect, SideConstraint,
                       disk_touches_rect, sqrt_down, sqrt_up, verify_packing)
from .lp import (LevelModelData, LpModel, LpSolution, Rounded, balanced_solve, build_fmmsb,
                 build_frounded, candidate_lengths, round_up, solve_with_integer_block)
from .nfdh import MediumPacking, SquareHull, nfdh_pack, pack_medium
from .partition import (GapPartition, SchemeParams, build_groups, build_levels, level_geometry)

log = logging.getLogger(__name__)

# used cells checked one by one during verification up to this many per type
VERIFY_CELL_LIMIT = 200_000
# flattened exact verification is skipped above this many circles per bin
FLATTEN_LIMIT = 4_000

ADVERTISED_HEIGHT = {"knapsack": 1919, "multiknapsack": 1920, "split": 3844}


# ------------------------------------------------------------------ cell grids

class CellGrid:
    """Free cells of a box: an origin-anchored grid minus the cells that meet
    one of the box's disks, followed by optional extra cells.

    Blocked columns are computed per row from the disks crossing it, so the
    number of rows and columns can be large as long as few rows meet disks.
    """

    def __init__(self, width: Fraction, height: Fraction, cell_w: Fraction, cell_h: Fraction,
                 disks: Sequence[Tuple[Fraction, Fraction, Fraction]] = (),
                 extra: Sequence[Rect] = (), swap: bool = False):
        if cell_w <= 0 or cell_h <= 0:
            raise ParameterError("cell dimensions must be positive")
        self.width, self.height = width, height
        self.cell_w, self.cell_h = cell_w, cell_h
        self.cols = int(width // cell_w)
        self.rows = int(height // cell_h)
        self.disks = tuple(disks)
        self.swap = swap
        self._blocked: Dict[int, List[Tuple[int, int]]] = self._block()
        self._brows = sorted(self._blocked)
        self._bfree = {row: self.cols - sum(b - a + 1 for a, b in iv)
                       for row, iv in self._blocked.items()}
        self.extra = tuple(e for e in extra if self._extra_ok(e))
        self._extra_ok_all(self.extra)
        self._count = (self.rows * self.cols - sum(self.cols - f for f in self._bfree.values())
                       + len(self.extra))

    # internal geometry is never swapped; swap only affects what is handed out

    def _touch(self, disk, row, col) -> bool:
        cx, cy, r = disk
        return disk_touches_rect(cx, cy, r, Rect(col * self.cell_w, row * self.cell_h,
                                                 self.cell_w, self.cell_h))

    def _block(self) -> Dict[int, List[Tuple[int, int]]]:
        out: Dict[int, List[Tuple[int, int]]] = {}
        cw, ch = self.cell_w, self.cell_h
        if not self.cols or not self.rows:
            return out
        for disk in self.disks:
            cx, cy, r = disk
            r0 = max(0, math.floor((cy - r) / ch) - 1)
            r1 = min(self.rows - 1, math.floor((cy + r) / ch) + 1)
            for row in range(r0, r1 + 1):
                y0, y1 = row * ch, row * ch + ch
                dy = Fraction(0) if y0 <= cy <= y1 else min(abs(cy - y0), abs(cy - y1))
                if dy > r:
                    continue
                hw = math.sqrt(max(0.0, float(r * r - dy * dy)))
                c0 = max(0, math.floor((float(cx) - hw) / float(cw)) - 1)
                c1 = min(self.cols - 1, math.floor((float(cx) + hw) / float(cw)) + 1)
                while c0 <= c1 and not self._touch(disk, row, c0):
                    c0 += 1
                while c1 >= c0 and not self._touch(disk, row, c1):
                    c1 -= 1
                if c0 > c1:
                    continue
                while c0 > 0 and self._touch(disk, row, c0 - 1):
                    c0 -= 1
                while c1 < self.cols - 1 and self._touch(disk, row, c1 + 1):
                    c1 += 1
                out.setdefault(row, []).append((c0, c1))
        for row, iv in out.items():
            iv.sort()
            merged = [iv[0]]
            for a, b in iv[1:]:
                if a <= merged[-1][1] + 1:
                    merged[-1] = (merged[-1][0], max(merged[-1][1], b))
                else:
                    merged.append((a, b))
            out[row] = merged
        return out

    def _is_free(self, row: int, col: int) -> bool:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            return False
        for a, b in self._blocked.get(row, ()):
            if a <= col <= b:
                return False
        return True

    def _extra_ok(self, e: Rect) -> bool:
        if e.x < 0 or e.y < 0 or e.x1 > self.width or e.y1 > self.height:
            return False
        if any(disk_touches_rect(cx, cy, r, e) for cx, cy, r in self.disks):
            return False
        cw, ch = self.cell_w, self.cell_h
        for row in range(math.floor(e.y / ch), math.ceil(e.y1 / ch)):
            for col in range(math.floor(e.x / cw), math.ceil(e.x1 / cw)):
                if self._is_free(row, col) and Rect(col * cw, row * ch, cw, ch).interiors_overlap(e):
                    return False
        return True

    def _extra_ok_all(self, extra):
        for i in range(len(extra)):
            for k in range(i + 1, len(extra)):
                if extra[i].interiors_overlap(extra[k]):
                    raise InvariantError("overlapping extra cells")

    def transposed(self) -> "CellGrid":
        # one view per grid, so types sharing a grid keep sharing it
        view = self.__dict__.get("_view")
        if view is None:
            view = object.__new__(CellGrid)
            view.__dict__.update(self.__dict__)
            view.swap = not self.swap
            view._view = self
            self._view = view
        return view

    @property
    def cell_size(self) -> Tuple[Fraction, Fraction]:
        return (self.cell_h, self.cell_w) if self.swap else (self.cell_w, self.cell_h)

    def count(self) -> int:
        return self._count

    def _out(self, rect: Rect) -> Rect:
        return Rect(rect.y, rect.x, rect.h, rect.w) if self.swap else rect

    def _free_cols(self, row: int) -> Iterator[int]:
        col = 0
        for a, b in self._blocked.get(row, ()):
            yield from range(col, a)
            col = b + 1
        yield from range(col, self.cols)

    def cells(self, start: int = 0, count: Optional[int] = None) -> Iterator[Rect]:
        """Free cells number start, start+1, ... in row-major order, extras last."""
        cw, ch = self.cell_w, self.cell_h
        left = self._count - start if count is None else min(count, self._count - start)
        skip = start
        row, bi = 0, 0
        while row < self.rows and left > 0:
            if bi < len(self._brows) and self._brows[bi] == row:
                n_free = self._bfree[row]
                bi += 1
                if skip >= n_free:
                    skip -= n_free
                else:
                    for col in self._free_cols(row):
                        if skip:
                            skip -= 1
                            continue
                        yield self._out(Rect(col * cw, row * ch, cw, ch))
                        left -= 1
                        if not left:
                            return
                row += 1
                continue
            nxt = self._brows[bi] if bi < len(self._brows) else self.rows
            full = (nxt - row) * self.cols
            if skip >= full:
                skip -= full
                row = nxt
                continue
            row += skip // self.cols
            col = skip % self.cols
            skip = 0
            while row < nxt and left > 0:
                while col < self.cols and left > 0:
                    yield self._out(Rect(col * cw, row * ch, cw, ch))
                    left -= 1
                    col += 1
                col = 0
                row += 1
        grid_total = self._count - len(self.extra)
        for i, e in enumerate(self.extra):
            if left <= 0:
                return
            if grid_total + i < start:
                continue
            yield self._out(e)
            left -= 1

    def extent(self, n: int) -> Tuple[Fraction, Fraction]:
        """Upper-right corner bounding the first n cells."""
        if n <= 0:
            return Fraction(0), Fraction(0)
        if n <= 4096:
            xs = ys = Fraction(0)
            for c in self.cells(0, n):
                xs, ys = max(xs, c.x1), max(ys, c.y1)
            return xs, ys
        grid_n = min(n, self._count - len(self.extra))
        # find the row holding cell grid_n - 1
        seen, row, bi = 0, 0, 0
        last_row = 0
        while row < self.rows:
            if bi < len(self._brows) and self._brows[bi] == row:
                seen += self._bfree[row]
                bi += 1
                if seen >= grid_n:
                    last_row = row
                    break
                row += 1
                continue
            nxt = self._brows[bi] if bi < len(self._brows) else self.rows
            span = (nxt - row) * self.cols
            if seen + span >= grid_n:
                last_row = row + (grid_n - seen - 1) // self.cols
                break
            seen += span
            row = nxt
        x1, y1 = self.cols * self.cell_w, (last_row + 1) * self.cell_h
        for e in self.extra[:max(0, n - grid_n)]:
            x1, y1 = max(x1, e.x1), max(y1, e.y1)
        return (y1, x1) if self.swap else (x1, y1)


# ------------------------------------------------------------------ bin types

@dataclass(frozen=True)
class BinType:
    id: int
    level: int
    width: Fraction
    height: Fraction
    kind: str                                         # config | container | strip | shrunk
    config: Optional[int] = None                      # configuration index at its level
    circles: Tuple[Tuple[str, Fraction, Fraction, Fraction], ...] = ()   # (item, x, y, slot radius)
    grid: Optional[CellGrid] = field(default=None, compare=False, hash=False)
    children: Tuple[Tuple[int, int], ...] = ()        # runs over the grid's free cells
    placed: Tuple[Tuple[Rect, int], ...] = ()         # explicitly positioned children

    @property
    def cells_used(self) -> int:
        return sum(n for _, n in self.children)


class TypeStore:
    """Registry of distinct bin types."""

    def __init__(self):
        self.types: Dict[int, BinType] = {}
        self._keys: Dict[tuple, int] = {}
        self._profit: Dict[int, Fraction] = {}
        self._items: Dict[int, Counter] = {}

    def add(self, **kw) -> int:
        grid = kw.get("grid")
        key = (kw.get("level"), kw.get("kind"), kw.get("config"), kw.get("width"), kw.get("height"),
               kw.get("circles", ()), id(grid) if grid is not None else None,
               kw.get("children", ()), kw.get("placed", ()))
        if key in self._keys:
            return self._keys[key]
        tid = len(self.types)
        self.types[tid] = BinType(id=tid, **kw)
        self._keys[key] = tid
        return tid

    def __getitem__(self, tid: int) -> BinType:
        return self.types[tid]

    def items(self, tid: int) -> Counter:
        """Copies of each item inside one bin of this type, children included."""
        if tid not in self._items:
            t = self.types[tid]
            c = Counter(cid for cid, *_ in t.circles)
            for child, n in t.children:
                for cid, k in self.items(child).items():
                    c[cid] += n * k
            for _, child in t.placed:
                c.update(self.items(child))
            self._items[tid] = c
        return self._items[tid]

    def profit(self, tid: int, table: Dict[str, Circle]) -> Fraction:
        if tid not in self._profit:
            self._profit[tid] = sum((table[cid].profit * k for cid, k in self.items(tid).items()),
                                    Fraction(0))
        return self._profit[tid]

    def with_children(self, tid: int, runs: Sequence[Tuple[int, int]]) -> int:
        t = self.types[tid]
        merged: List[Tuple[int, int]] = []
        for child, n in runs:
            if n <= 0:
                continue
            if merged and merged[-1][0] == child:
                merged[-1] = (child, merged[-1][1] + n)
            else:
                merged.append((child, n))
        return self.add(level=t.level, width=t.width, height=t.height, kind=t.kind, config=t.config,
                        circles=t.circles, grid=t.grid, children=tuple(merged), placed=t.placed)


# ------------------------------------------------------------------ streams

class _Stream:
    """Selected copies of one radius class as runs (item id, copies)."""

    def __init__(self, runs: Sequence[Tuple[str, int]]):
        self.ids = [cid for cid, n in runs if n > 0]
        self.cum = [0]
        for cid, n in runs:
            if n > 0:
                self.cum.append(self.cum[-1] + n)

    @property
    def total(self) -> int:
        return self.cum[-1]

    def take(self, pos: int, k: int) -> List[str]:
        out = []
        i = bisect_right(self.cum, pos) - 1
        while k > 0 and i < len(self.ids):
            avail = self.cum[i + 1] - pos
            n = min(avail, k)
            out.extend([self.ids[i]] * n)
            k -= n
            pos += n
            i += 1
        return out

    def boundaries(self, lo: int, hi: int) -> List[int]:
        """Run boundaries strictly inside (lo, hi)."""
        a = bisect_right(self.cum, lo)
        b = bisect_left(self.cum, hi)
        return self.cum[a:b]


def _level_types(store: TypeStore, level: int, configs: Sequence[Configuration],
                 counts: Sequence[int], classes: RadiusClasses, streams: Sequence[_Stream],
                 grid_of, box: Tuple[Fraction, Fraction]) -> List[Tuple[int, int]]:
    """Bin types for one level with multiplicities, filling slots from the streams.

    Bins of one configuration are cut into segments at the stream run
    boundaries; inside a segment all bins receive the same items.
    """
    T = len(classes)
    offsets = [0] * T
    runs: List[Tuple[int, int]] = []
    for ci, n in enumerate(counts):
        if n <= 0:
            continue
        cfg = configs[ci]
        c = cfg.counts
        cuts = {0, n}
        for k in range(T):
            if not c[k]:
                continue
            lo, hi = offsets[k], offsets[k] + c[k] * n
            for p in streams[k].boundaries(lo, hi):
                b = (p - lo) // c[k]
                cuts.update((b, b + 1))
        cuts = sorted(x for x in cuts if 0 <= x <= n)
        slots = cfg.slots()
        for a, b in zip(cuts, cuts[1:]):
            ids = {k: streams[k].take(offsets[k] + a * c[k], c[k]) for k in range(T) if c[k]}
            taken = {k: 0 for k in ids}
            circles = []
            for k, x, y in slots:
                lst = ids[k]
                if taken[k] < len(lst):
                    circles.append((lst[taken[k]], x, y, classes.classes[k].value))
                    taken[k] += 1
            tid = store.add(level=level, width=box[0], height=box[1], kind="config", config=ci,
                            circles=tuple(circles), grid=grid_of(ci, cfg))
            if runs and runs[-1][0] == tid:
                runs[-1] = (tid, runs[-1][1] + b - a)
            else:
                runs.append((tid, b - a))
        for k in range(T):
            offsets[k] += c[k] * n
    return runs


def _fill(store: TypeStore, parents: Sequence[Tuple[int, int]], children: Sequence[Tuple[int, int]]
          ) -> Tuple[List[Tuple[int, int]], List[Tuple[int, int]]]:
    """Put child runs into the free cells of parent runs, in order.

    A parent run either takes whole blocks of one child type (multiplicity
    preserved), or one mixed bin at a child-run boundary.  Returns the new
    parent runs and the children that did not fit.
    """
    queue = [list(x) for x in children if x[1] > 0]
    qi = 0
    out: List[Tuple[int, int]] = []
    for ptid, M in parents:
        F = store[ptid].grid.count() if store[ptid].grid is not None else 0
        F -= store[ptid].cells_used
        while M > 0 and qi < len(queue) and F > 0:
            cid, N = queue[qi]
            if N >= F:
                q = min(M, N // F)
                out.append((store.with_children(ptid, list(store[ptid].children) + [(cid, F)]), q))
                M -= q
                queue[qi][1] -= q * F
                if queue[qi][1] == 0:
                    qi += 1
                continue
            runs, free = list(store[ptid].children), F
            while free > 0 and qi < len(queue):
                cid, N = queue[qi]
                take = min(N, free)
                runs.append((cid, take))
                free -= take
                queue[qi][1] -= take
                if queue[qi][1] == 0:
                    qi += 1
            out.append((store.with_children(ptid, runs), 1))
            M -= 1
        if M > 0:
            out.append((ptid, M))
    left = [(cid, N) for cid, N in queue[qi:] if N > 0]
    return out, left


# ------------------------------------------------------------------ packings

@dataclass
class TopBin:
    roots: Tuple[Tuple[int, Fraction, Fraction], ...] = ()      # (type id, x, y)
    medium: Tuple[Placement, ...] = ()
    multiplicity: int = 1


@dataclass
class ShortEntry:
    type_id: int
    tree_hash: str
    multiplicity: int
    level: int
    kind: str
    config: Optional[int]


@dataclass
class ShortDescription:
    entries: List[ShortEntry]

    @property
    def total_bins(self) -> int:
        return sum(e.multiplicity for e in self.entries)

    def census(self) -> Dict[Tuple[int, int], int]:
        """(level, configuration index) -> number of bins of that configuration.

        Shrunk bins count under the configuration they were cut from.
        """
        out: Dict[Tuple[int, int], int] = {}
        for e in self.entries:
            if e.kind in ("config", "shrunk"):
                out[(e.level, e.config)] = out.get((e.level, e.config), 0) + e.multiplicity
        return out


@dataclass
class Packing:
    problem: str
    mode: str
    eps: Fraction
    nominal: Bin                      # the bin the instance asked for
    frame: Bin                        # the (possibly augmented) bin actually used
    store: TypeStore
    bins: List[TopBin]
    table: Dict[str, Circle]
    constants: Dict[str, Fraction] = field(default_factory=dict)
    stats: Dict[str, object] = field(default_factory=dict)
    t: Optional[int] = None
    lp_counts: Dict[int, List[int]] = field(default_factory=dict)

    @property
    def augmentation(self) -> Tuple[Fraction, Fraction]:
        return self.frame.width / self.nominal.width, self.frame.height / self.nominal.height

    @property
    def bin_count(self) -> int:
        return sum(b.multiplicity for b in self.bins)

    def selected(self) -> Counter:
        out: Counter = Counter()
        for b in self.bins:
            c: Counter = Counter(p.circle_id for p in b.medium)
            for tid, _, _ in b.roots:
                c.update(self.store.items(tid))
            for cid, k in c.items():
                out[cid] += k * b.multiplicity
        return out

    @property
    def profit(self) -> Fraction:
        return sum((self.table[cid].profit * k for cid, k in self.selected().items()), Fraction(0))

    @property
    def circle_count(self) -> int:
        return sum(self.selected().values())

    def flatten(self, index: int) -> List[Placement]:
        """Global placements of one top-level bin (all copies of its run look alike)."""
        b = self.bins[index]
        out = list(b.medium)
        for tid, x, y in b.roots:
            out.extend(_flatten_type(self.store, tid, x, y))
        return out

    def transposed(self) -> "Packing":
        store = TypeStore()
        mapping: Dict[int, int] = {}
        for tid in sorted(self.store.types, key=lambda k: -self.store[k].level):
            t = self.store[tid]
            mapping[tid] = store.add(
                level=t.level, width=t.height, height=t.width, kind=t.kind, config=t.config,
                circles=tuple((cid, y, x, r) for cid, x, y, r in t.circles),
                grid=None if t.grid is None else t.grid.transposed(),
                children=tuple((mapping[c], n) for c, n in t.children),
                placed=tuple((Rect(r.y, r.x, r.h, r.w), mapping[c]) for r, c in t.placed))
        bins = [TopBin(tuple((mapping[tid], y, x) for tid, x, y in b.roots),
                       tuple(Placement(p.circle_id, p.y, p.x) for p in b.medium), b.multiplicity)
                for b in self.bins]
        out = replace(self, nominal=Bin(self.nominal.height, self.nominal.width),
                      frame=Bin(self.frame.height, self.frame.width), store=store, bins=bins)
        out.constants = dict(self.constants)
        if "c_w" in out.constants:
            out.constants["c_w"], out.constants["c_h"] = out.constants["c_h"], out.constants["c_w"]
        return out


def _flatten_type(store: TypeStore, tid: int, ox, oy) -> List[Placement]:
    t = store[tid]
    out = [Placement(cid, ox + x, oy + y) for cid, x, y, _ in t.circles]
    if t.children:
        cells = t.grid.cells(0, t.cells_used)
        for child, n in t.children:
            for _ in range(n):
                c = next(cells)
                out.extend(_flatten_type(store, child, ox + c.x, oy + c.y))
    for rect, child in t.placed:
        out.extend(_flatten_type(store, child, ox + rect.x, oy + rect.y))
    return out


def type_extent(store: TypeStore, tid: int, table: Dict[str, Circle],
                memo: Optional[Dict[int, Tuple[Fraction, Fraction]]] = None) -> Tuple[Fraction, Fraction]:
    """Upper-right corner of everything a type holds, relative to its origin."""
    memo = {} if memo is None else memo
    if tid in memo:
        return memo[tid]
    t = store[tid]
    x1 = y1 = Fraction(0)
    for cid, x, y, _ in t.circles:
        r = table[cid].radius
        x1, y1 = max(x1, x + r), max(y1, y + r)
    if t.children:
        ex, ey = t.grid.extent(t.cells_used)
        x1, y1 = max(x1, ex), max(y1, ey)
    for rect, _ in t.placed:
        x1, y1 = max(x1, rect.x1), max(y1, rect.y1)
    memo[tid] = (x1, y1)
    return x1, y1


def tree_hash(store: TypeStore, tid: int, memo: Optional[Dict[int, str]] = None) -> str:
    memo = {} if memo is None else memo
    if tid in memo:
        return memo[tid]
    t = store[tid]
    h = hashlib.sha256()
    h.update(repr((t.level, t.kind, t.config, str(t.width), str(t.height))).encode())
    for cid, x, y, r in t.circles:
        h.update(repr((cid, str(x), str(y), str(r))).encode())
    if t.grid is not None:
        h.update(repr((str(t.grid.cell_w), str(t.grid.cell_h), t.grid.swap,
                       [(str(e.x), str(e.y)) for e in t.grid.extra])).encode())
    for child, n in t.children:
        h.update(f"run {tree_hash(store, child, memo)} {n}".encode())
    for rect, child in t.placed:
        h.update(repr((str(rect.x), str(rect.y), tree_hash(store, child, memo))).encode())
    memo[tid] = h.hexdigest()[:16]
    return memo[tid]


def type_census(packing: Packing) -> Dict[int, int]:
    """Total number of bins of every reachable type (top-level and nested)."""
    count: Dict[int, int] = {}
    for b in packing.bins:
        for tid, _, _ in b.roots:
            count[tid] = count.get(tid, 0) + b.multiplicity
    for tid in sorted(list(packing.store.types), key=lambda k: packing.store[k].level):
        n = count.get(tid, 0)
        if not n:
            continue
        t = packing.store[tid]
        for child, k in t.children:
            count[child] = count.get(child, 0) + n * k
        for _, child in t.placed:
            count[child] = count.get(child, 0) + n
    return {k: v for k, v in count.items() if v}


def short_description(packing: Packing) -> ShortDescription:
    memo: Dict[int, str] = {}
    entries = []
    for tid, n in sorted(type_census(packing).items()):
        t = packing.store[tid]
        entries.append(ShortEntry(tid, tree_hash(packing.store, tid, memo), n, t.level, t.kind, t.config))
    return ShortDescription(entries)


# ------------------------------------------------------------------ verification

@dataclass
class Report:
    valid: bool
    problems: List[str] = field(default_factory=list)
    flattened: bool = False
    partial: bool = False


def _strict_overlap(cx, cy, r, rect: Rect) -> bool:
    px = min(max(cx, rect.x), rect.x1)
    py = min(max(cy, rect.y), rect.y1)
    return (cx - px) ** 2 + (cy - py) ** 2 < r * r


def verify_structure(packing: Packing, flatten_limit: int = FLATTEN_LIMIT,
                     cell_limit: int = VERIFY_CELL_LIMIT) -> Report:
    """Geometric re-check of every reachable type and of the top-level bins.

    Per type: own circles form a packing of the box and sit in slots no
    smaller than themselves; every used cell lies in the box and meets no
    own disk; child boxes fit their cells; explicit children are pairwise
    disjoint.  Per top-level bin: roots and medium circles stay in the
    frame without overlapping.  Small bins are additionally flattened and
    checked pairwise in one piece.
    """
    rep = Report(True)
    store, table = packing.store, packing.table
    reach = type_census(packing)
    for tid in reach:
        t = store[tid]
        box = Bin(t.width, t.height)
        for cid, x, y, r in t.circles:
            if cid not in table:
                rep.problems.append(f"type {tid}: unknown item {cid}")
            elif r < table[cid].radius:
                rep.problems.append(f"type {tid}: slot radius below the radius of {cid}")
        if any(cid not in table for cid, *_ in t.circles):
            continue
        pl = [Placement(cid, x, y) for cid, x, y, _ in t.circles]
        v = verify_packing(box, pl, table)
        if not v.valid:
            for viol in v.violations[:5]:
                rep.problems.append(f"type {tid}: {viol.kind} {viol.items}")
        disks = [(x, y, table[cid].radius) for cid, x, y, _ in t.circles]
        if t.children:
            if t.grid is None:
                rep.problems.append(f"type {tid}: children without a grid")
                continue
            used = t.cells_used
            if used > t.grid.count():
                rep.problems.append(f"type {tid}: {used} cells used, {t.grid.count()} free")
                continue
            cw, ch = t.grid.cell_size
            for child, _ in t.children:
                c = store[child]
                if c.width > cw or c.height > ch:
                    rep.problems.append(f"type {tid}: child {child} larger than its cell")
            limit = min(used, cell_limit)
            if limit < used:
                rep.partial = True
            rows: Dict[int, List[Tuple[Fraction, Fraction, Fraction]]] = {}
            for d in disks:
                for row in range(math.floor((d[1] - d[2]) / ch) - 1, math.floor((d[1] + d[2]) / ch) + 2):
                    rows.setdefault(row, []).append(d)
            for cell in t.grid.cells(0, limit):
                if cell.x < 0 or cell.y < 0 or cell.x1 > t.width or cell.y1 > t.height:
                    rep.problems.append(f"type {tid}: cell outside the box")
                    break
                near = rows.get(math.floor(cell.y / ch), ()) if ch else disks
                if any(disk_touches_rect(cx, cy, r, cell) for cx, cy, r in near):
                    rep.problems.append(f"type {tid}: cell at ({cell.x}, {cell.y}) meets a circle")
                    break
        rects = [r for r, _ in t.placed]
        for rect, child in t.placed:
            c = store[child]
            if rect.x < 0 or rect.y < 0 or rect.x1 > t.width or rect.y1 > t.height:
                rep.problems.append(f"type {tid}: placed child outside the box")
            if c.width > rect.w or c.height > rect.h:
                rep.problems.append(f"type {tid}: placed child larger than its cell")
            if any(disk_touches_rect(cx, cy, r, rect) for cx, cy, r in disks):
                rep.problems.append(f"type {tid}: placed child meets a circle")
        order = sorted(range(len(rects)), key=lambda i: rects[i].x)
        for a in range(len(order)):
            for b in range(a + 1, len(order)):
                ra, rb = rects[order[a]], rects[order[b]]
                if rb.x >= ra.x1:
                    break
                if ra.interiors_overlap(rb):
                    rep.problems.append(f"type {tid}: placed children overlap")
    W, H = packing.frame.width, packing.frame.height
    for bi, b in enumerate(packing.bins):
        # roots are compared by the extent of what they hold, not their nominal box
        boxes = []
        for tid, x, y in b.roots:
            ex, ey = type_extent(store, tid, table)
            boxes.append(Rect(x, y, ex, ey))
            if x < 0 or y < 0 or x + ex > W or y + ey > H:
                rep.problems.append(f"bin {bi}: content of type {tid} leaves the frame")
        for i in range(len(boxes)):
            for k in range(i + 1, len(boxes)):
                if boxes[i].interiors_overlap(boxes[k]):
                    rep.problems.append(f"bin {bi}: root boxes overlap")
        if any(p.circle_id not in table for p in b.medium):
            rep.problems.append(f"bin {bi}: unknown medium item")
            continue
        v = verify_packing(packing.frame, list(b.medium), table)
        if not v.valid:
            rep.problems.append(f"bin {bi}: medium circles {v.violations[0].kind} {v.violations[0].items}")
        for p in b.medium:
            r = table[p.circle_id].radius
            if any(_strict_overlap(p.x, p.y, r, box) for box in boxes):
                rep.problems.append(f"bin {bi}: medium circle {p.circle_id} overlaps a root box")
                break
    if not rep.problems:
        sizes = []
        for b in packing.bins:
            n = len(b.medium) + sum(sum(store.items(tid).values()) for tid, _, _ in b.roots)
            sizes.append(n)
        if all(n <= flatten_limit for n in sizes):
            rep.flattened = True
            for bi in range(len(packing.bins)):
                v = verify_packing(packing.frame, packing.flatten(bi), table)
                if not v.valid:
                    viol = v.violations[0]
                    rep.problems.append(f"bin {bi}: flattened {viol.kind} {viol.items}")
    rep.valid = not rep.problems
    return rep


# ------------------------------------------------------------------ pipeline pieces

@dataclass
class LevelSolve:
    """Everything one run of the configuration pipeline produced."""
    part: GapPartition
    classes: Dict[int, RadiusClasses]
    configs: Dict[int, List[Configuration]]
    data: List[LevelModelData]
    model: Optional[LpModel]
    solution: Optional[LpSolution]
    rounded: Optional[Rounded]
    stats: Dict[str, object]


def _ptas_corner_cells(w: Fraction, h: Fraction, s: Fraction) -> List[Rect]:
    out = []
    for x, y in ((w - s, h - s), (Fraction(0), h - s), (w - s, Fraction(0))):
        if x >= 0 and y >= 0 and (x % s or y % s):
            out.append(Rect(x, y, s, s))
    return out


def _grid_factory(part: GapPartition, params: SchemeParams, level: int,
                  box: Tuple[Fraction, Fraction], classes: RadiusClasses):
    """Per-configuration grid of free next-level cells (cached)."""
    cache: Dict[int, CellGrid] = {}
    if level + 1 >= len(part.levels):
        return lambda ci, cfg: None
    nxt = part.geometry(level + 1)

    def make(ci, cfg):
        if ci not in cache:
            disks = [(x, y, classes.classes[k].value) for k, x, y in cfg.slots()]
            extra = ()
            if params.mode == "ptas" and level == 0:
                extra = _ptas_corner_cells(box[0], box[1], nxt.cell_w)
            cache[ci] = CellGrid(box[0], box[1], nxt.cell_w, nxt.cell_h, disks, extra)
        return cache[ci]
    return make


def solve_levels(part: GapPartition, table: Dict[str, Circle], params: SchemeParams,
                 variant: str, m: int = 1, constraints: Sequence[SideConstraint] = ()) -> LevelSolve:
    """Radius classes, configurations, F_rounded, integer block, balancing, rounding."""
    stats: Dict[str, object] = {}
    t0 = time.perf_counter()
    classes: Dict[int, RadiusClasses] = {}
    configs: Dict[int, List[Configuration]] = {}
    data: List[LevelModelData] = []
    L = len(part.levels)
    while L > 0 and not part.levels[L - 1]:
        L -= 1
    grids = {}
    for j in range(L):
        geo = part.geometry(j)
        items = [table[cid] for cid in part.levels[j]]
        classes[j] = round_radii(items, j, params, geo)
        est = EnumerationStats()
        configs[j] = enumerate_configurations(classes[j], geo, part.geometry(j + 1), params, stats=est)
        stats[f"configs_{j}"] = len(configs[j])
        if j >= 1:
            configs[j] = hull_candidates(configs[j], geo, part.geometry(j + 1), params.eps)
            stats[f"columns_{j}"] = len(configs[j])
        if est.truncated:
            stats[f"truncated_{j}"] = True
        free = [c.free_estimate for c in configs[j]]
        if params.mode == "ptas" and j == 0 and L > 1:
            mk = _grid_factory(part, params, 0, (geo.bin_w, geo.bin_h), classes[0])
            grids[0] = mk
            free = [max(f, Fraction(mk(ci, c).count())) for f, (ci, c) in zip(free, enumerate(configs[j]))]
        data.append(LevelModelData(j, [c.counts for c in configs[j]], free,
                                   [list(c.members) for c in classes[j].classes],
                                   [c.demand for c in classes[j].classes]))
    stats["t_configs"] = time.perf_counter() - t0
    if not data:
        return LevelSolve(part, classes, configs, data, None, None, None, stats)
    t0 = time.perf_counter()
    profits = {cid: c.profit for cid, c in table.items()}
    mult = {cid: c.multiplicity for cid, c in table.items()}
    model = build_frounded(data, profits, mult, variant, m, constraints)
    sol = solve_with_integer_block(model, budget=params.budget)
    stats["lp_nodes"] = sol.nodes
    if sol.status != "optimal":
        if variant == "bpp":
            raise PackError(f"bin packing model {sol.status}")
        return LevelSolve(part, classes, configs, data, model, sol, None, stats)
    sol = balanced_solve(model, sol)
    rounded = round_up(model, sol, data, profits, mult)
    stats["t_lp"] = time.perf_counter() - t0
    stats["lp_objective"] = sol.objective
    stats["_grids"] = grids
    return LevelSolve(part, classes, configs, data, model, sol, rounded, stats)


@dataclass
class Structure:
    store: TypeStore
    roots: List[Tuple[int, int]]                 # level-0 types with multiplicity
    strip: Optional[int] = None                  # overflow strip type
    strip_height: Fraction = Fraction(0)
    discarded: List[Tuple[int, int]] = field(default_factory=list)
    containers: int = 0


def assemble_structured(ls: LevelSolve, table: Dict[str, Circle], params: SchemeParams,
                        overflow: str = "strip") -> Structure:
    """Bins per level from the rounded counts, then children into free cells bottom-up.

    Level-j overflow (j >= 2) opens empty level-(j-1) container bins;
    level-1 overflow goes to a strip of level-1 cells (overflow="strip") or
    is dropped, cheapest first (overflow="discard").  In PTAS mode level-1
    bins are shrunk by strip discarding before they enter level-0 cells.
    """
    part, rounded = ls.part, ls.rounded
    store = TypeStore()
    if rounded is None:
        return Structure(store, [])
    L = len(ls.data)
    runs: Dict[int, List[Tuple[int, int]]] = {}
    for j in range(L):
        geo = part.geometry(j)
        box = (geo.bin_w, geo.bin_h)
        cls = ls.classes[j]
        streams = []
        for k, c in enumerate(cls.classes):
            streams.append(_Stream([(cid, rounded.selected.get(cid, 0)) for cid in c.members]))
        mk = ls.stats.get("_grids", {}).get(j) or _grid_factory(part, params, j, box, cls)
        runs[j] = _level_types(store, j, ls.configs[j], rounded.counts[j], cls, streams, mk, box)
    st = Structure(store, [])
    for j in range(L - 1, 0, -1):
        children = runs[j]
        if params.mode == "ptas" and j == 1:
            children = [(_shrink(store, tid, table, params), n) for tid, n in children]
        children = sorted(children, key=lambda x: (-store.profit(x[0], table), x[0]))
        parents, left = _fill(store, runs[j - 1], children)
        if left and j >= 2:
            geo = part.geometry(j - 1)
            nxt = part.geometry(j)
            grid = CellGrid(geo.bin_w, geo.bin_h, nxt.cell_w, nxt.cell_h)
            if grid.count() == 0:
                raise InvariantError("container bin has no cells")
            ctid = store.add(level=j - 1, width=geo.bin_w, height=geo.bin_h, kind="container", grid=grid)
            need = -(-sum(n for _, n in left) // grid.count())
            more, left = _fill(store, [(ctid, need)], left)
            if left:
                raise InvariantError("containers could not take the overflow")
            parents = parents + more
            st.containers += need
        elif left:
            if overflow == "discard":
                st.discarded = left
            else:
                geo0, geo1 = part.geometry(0), part.geometry(1)
                cols = int(geo0.bin_w // geo1.cell_w)
                if cols == 0:
                    raise InvariantError("level-1 cells wider than the level-0 bin")
                total = sum(n for _, n in left)
                rows = -(-total // cols)
                grid = CellGrid(cols * geo1.cell_w, rows * geo1.cell_h, geo1.cell_w, geo1.cell_h)
                stid = store.add(level=0, width=cols * geo1.cell_w, height=rows * geo1.cell_h,
                                 kind="strip", grid=grid)
                filled, rest = _fill(store, [(stid, 1)], left)
                if rest or len(filled) != 1:
                    raise InvariantError("overflow strip too small")
                st.strip, st.strip_height = filled[0][0], rows * geo1.cell_h
        runs[j - 1] = parents
    st.roots = runs.get(0, [])
    return st


def _shrink(store: TypeStore, tid: int, table: Dict[str, Circle], params: SchemeParams) -> int:
    """Cut a (1+eps)w_1 square level-1 bin down to w_1 x w_1.

    The box is split into r+1 vertical strips of width eps*w_1; everything
    meeting the least profitable strip is dropped and the right part slides
    left.  The same is then done with horizontal strips.
    """
    t = store[tid]
    if t.kind == "shrunk":
        return tid
    r = params.r
    s = t.width / (r + 1)
    items = [("c", cid, x - rad, x + rad, y - rad, y + rad, (cid, x, y, rad))
             for cid, x, y, rad in t.circles]
    if t.children:
        used = t.cells_used
        if used > VERIFY_CELL_LIMIT:
            raise BudgetError("too many nested cells to shrink a level-1 bin")
        cells = t.grid.cells(0, used)
        for child, n in t.children:
            for _ in range(n):
                c = next(cells)
                items.append(("b", child, c.x, c.x1, c.y, c.y1, (c, child)))
    for rect, child in t.placed:
        items.append(("b", child, rect.x, rect.x1, rect.y, rect.y1, (rect, child)))

    def value(it):
        if it[0] == "c":
            return table[it[1]].profit
        return store.profit(it[1], table)

    def cut(items, axis):
        lo_i, hi_i = (2, 3) if axis == 0 else (4, 5)
        loss = []
        for k in range(r + 1):
            a, b = k * s, (k + 1) * s
            loss.append(sum((value(it) for it in items if it[lo_i] < b and it[hi_i] > a), Fraction(0)))
        k = min(range(r + 1), key=lambda i: (loss[i], i))
        a, b = k * s, (k + 1) * s
        out = []
        for it in items:
            if it[hi_i] <= a:
                out.append(it)
            elif it[lo_i] >= b:
                it = list(it)
                it[lo_i] -= s
                it[hi_i] -= s
                out.append(tuple(it))
        return out

    items = cut(cut(items, 0), 1)
    circles, placed = [], []
    for it in items:
        if it[0] == "c":
            cid, _, _, rad = it[6]
            circles.append((cid, it[2] + rad, it[4] + rad, rad))
        else:
            rect, child = it[6]
            placed.append((Rect(it[2], it[4], rect.w, rect.h), child))
    side = t.width - s
    return store.add(level=t.level, width=side, height=side, kind="shrunk", config=t.config,
                     circles=tuple(circles), placed=tuple(placed))


def _medium_all(medium: Sequence[Circle], w: Fraction, unit: Fraction,
                limit: int = 1_000_000) -> List[Tuple[List[Placement], Fraction]]:
    """Every medium copy, NFDH into width w, cut at shelf bases into pieces of height <= unit."""
    if sum(c.multiplicity for c in medium) > limit:
        raise BudgetError("too many medium copies to place one by one")
    hulls = [SquareHull(f"{c.id}\x00{n}", c.diameter) for c in medium for n in range(c.multiplicity)]
    if not hulls:
        return []
    shelf = nfdh_pack(hulls, w)
    pieces: List[Tuple[List[Placement], Fraction]] = []
    base = None
    for sh in shelf.shelves:
        if base is None or sh.base_y + sh.height - base > unit:
            pieces.append(([], Fraction(0)))
            base = sh.base_y
        pl, _ = pieces[-1]
        for hid, x, side in sh.items:
            pl.append(Placement(hid.split("\x00")[0], x + side / 2, sh.base_y - base + side / 2))
        pieces[-1] = (pl, sh.base_y + sh.height - base)
    return pieces


# ------------------------------------------------------------------ composition

def _compose(problem: str, params: SchemeParams, nominal: Bin, w: Fraction, h: Fraction,
             st: Structure, table: Dict[str, Circle], medium_strips: Sequence[Tuple[List[Placement], Fraction]],
             nbins_min: int, exact_frame: bool) -> Packing:
    """Top-level bins: roots at the origin, overflow strip and medium strip stacked above."""
    store = st.store
    memo: Dict[int, Tuple[Fraction, Fraction]] = {}
    top = Fraction(0)
    right = Fraction(0)
    for tid, _ in st.roots:
        ex, ey = type_extent(store, tid, table, memo)
        top, right = max(top, ey), max(right, ex)
    strip_h = Fraction(0)
    if st.strip is not None:
        sx, sy = type_extent(store, st.strip, table, memo)
        strip_h = sy
        right = max(right, sx)
    med_h = max((hh for _, hh in medium_strips), default=Fraction(0))
    for pl, _ in medium_strips:
        for p in pl:
            right = max(right, p.x + table[p.circle_id].radius)
    med_y = top + strip_h
    # physical bins that need individual treatment
    special = max(len(medium_strips), 1 if st.strip is not None else 0)
    runs = [[tid, n] for tid, n in st.roots if n > 0]
    bins: List[TopBin] = []
    k = 0
    while k < special:
        roots = ()
        if runs:
            roots = ((runs[0][0], Fraction(0), Fraction(0)),)
            runs[0][1] -= 1
            if runs[0][1] == 0:
                runs.pop(0)
        if k == 0 and st.strip is not None:
            roots = roots + ((st.strip, Fraction(0), top),)
        med = ()
        if k < len(medium_strips):
            med = tuple(p.moved(0, med_y) for p in medium_strips[k][0])
        bins.append(TopBin(roots, med, 1))
        k += 1
    for tid, n in runs:
        bins.append(TopBin(((tid, Fraction(0), Fraction(0)),), (), n))
    total = sum(b.multiplicity for b in bins)
    if total < nbins_min:
        bins.append(TopBin((), (), nbins_min - total))
    used_h = top + strip_h + med_h
    if exact_frame:
        if used_h > nominal.height or right > nominal.width:
            raise InvariantError("content leaves the unaugmented bin")
        frame = nominal
    else:
        frame = Bin(max(nominal.width, right), max(nominal.height, used_h))
    pk = Packing(problem, params.mode, params.eps, nominal, frame, store, bins, table)
    pk.stats["strip_height"] = strip_h
    pk.stats["medium_height"] = med_h
    pk.stats["containers"] = st.containers
    _set_constants(pk)
    return pk


def _set_constants(pk: Packing):
    a_w, a_h = pk.augmentation
    pk.constants["c_w"] = (a_w - 1) / pk.eps
    pk.constants["c_h"] = (a_h - 1) / pk.eps


def _check_advertised(pk: Packing, key: str):
    """Assert the mode's augmentation promise; record the bound next to the achieved constant."""
    cw, ch = pk.constants["c_w"], pk.constants["c_h"]
    if pk.mode == "ptas":
        if cw or ch:
            raise InvariantError("PTAS packing uses augmentation")
        return
    if pk.mode == "ras1d" and cw:
        raise InvariantError("one-dimensional mode widened the bin")
    if pk.mode == "ras" and cw > 1:
        raise InvariantError(f"width constant {cw} above 1")
    bound = ADVERTISED_HEIGHT.get(key)
    if bound is not None:
        pk.constants["c_h_bound"] = Fraction(bound)
        if ch > bound:
            raise InvariantError(f"height constant {ch} above {bound}")


# ------------------------------------------------------------------ drivers

def _clean_instance(instance: Instance, drop_large: bool) -> Tuple[Instance, bool, List[str]]:
    """Orient the bin so that w <= h and drop circles that fit nowhere."""
    transposed = instance.bin.width > instance.bin.height
    inst = instance.normalized()
    side = inst.bin.width
    dropped = [c.id for c in inst.items if c.diameter > side]
    if dropped and not drop_large:
        raise InputError(f"items larger than the bin: {', '.join(dropped)}")
    items = [c for c in inst.items if c.diameter <= side]
    keep = {c.id for c in items}
    cons = [SideConstraint({k: a for k, a in sc.coeffs.items() if k in keep}, sc.rhs)
            for sc in inst.constraints]
    return Instance(inst.bin, items, inst.m, cons), transposed, dropped


def _distinct_ts(inst: Instance, params: SchemeParams) -> List[int]:
    """Medium indices whose partitions differ; equal partitions give equal runs."""
    seen, out = set(), []
    for t in range(1, params.r):
        part = _partition(inst, params, t)
        key = (tuple(part.medium), tuple(tuple(ids) for ids in part.levels),
               tuple(j for j, ids in enumerate(part.levels) if ids))
        # level geometry depends on t only through the level-1 bin size
        if len(part.levels) > 1:
            key += (part.geometry(1).w,)
        if key not in seen:
            seen.add(key)
            out.append(t)
    return out


def _partition(inst: Instance, params: SchemeParams, t: int) -> GapPartition:
    w, h = inst.bin.width, inst.bin.height
    groups = build_groups(inst.items, w, params)
    part = build_levels(groups, t, params, w, h)
    constrained = {cid for sc in inst.constraints for cid, a in sc.coeffs.items() if a}
    moved = [cid for cid in part.medium if cid in constrained]
    if moved:
        # medium items under side constraints go through the LP at level 0
        part.medium = [cid for cid in part.medium if cid not in constrained]
        part.levels[0] = sorted(part.levels[0] + moved)
    return part


def _profit_run(inst: Instance, params: SchemeParams, t: int, m: int, problem: str) -> Tuple[Packing, Fraction]:
    """One value of t for the knapsack variants; returns the packing and its pre-repair profit."""
    table = inst.table()
    w, h = inst.bin.width, inst.bin.height
    part = _partition(inst, params, t)
    medium = [table[cid] for cid in part.medium]
    strips: List[Tuple[List[Placement], Fraction]] = []
    med_profit = Fraction(0)
    t0 = time.perf_counter()
    if medium and params.mode != "ptas":
        mp = pack_medium(medium, w, h, params.eps, m)
        strips = [(pl, hh) for pl, hh in zip(mp.strips, mp.strip_heights) if pl]
        med_profit = mp.profit
    t_med = time.perf_counter() - t0
    variant = "ckp" if m == 1 and problem == "knapsack" else "mkp"
    ls = solve_levels(part, table, params, variant, m, inst.constraints)
    t0 = time.perf_counter()
    st = assemble_structured(ls, table, params, "discard" if params.mode == "ptas" else "strip")
    pk = _compose(problem, params, inst.bin, w, h, st, table, strips, 0, params.mode == "ptas")
    pk.t = t
    pk.lp_counts = dict(ls.rounded.counts) if ls.rounded else {}
    pk.stats.update({k: v for k, v in ls.stats.items() if not k.startswith("_")})
    pk.stats["t_medium"] = t_med
    pk.stats["discarded_bins"] = [(st.store[tid].level, st.store[tid].config, n) for tid, n in st.discarded]
    pk.stats["t_assemble"] = time.perf_counter() - t0
    pre = med_profit
    if ls.rounded:
        pre += sum((table[cid].profit * n for cid, n in ls.rounded.selected.items()), Fraction(0))
    return pk, pre


def _finish(pk: Packing, transposed: bool, key: str) -> Packing:
    rep = verify_structure(pk)
    if not rep.valid:
        raise InvariantError("assembled packing failed verification: " + "; ".join(rep.problems[:3]))
    pk.stats["verified_flat"] = rep.flattened
    _check_advertised(pk, key)
    return pk.transposed() if transposed else pk


def strip_split_transform(instance: Instance, params: SchemeParams) -> Tuple[Instance, int]:
    """Replace each w x h bin by q bins of w x w/eps, q = ceil((1+4eps) eps h / w)."""
    w, h = instance.bin.width, instance.bin.height
    eps = params.eps
    q = math.ceil((1 + 4 * eps) * eps * h / w)
    return Instance(Bin(w, w / eps), list(instance.items), q * instance.m, list(instance.constraints)), q


def _stack(pk: Packing, q: int, m: int, nominal: Bin) -> Packing:
    """Stack groups of q transformed bins on top of each other."""
    flat: List[TopBin] = []
    for b in pk.bins:
        if b.multiplicity > 100_000:
            raise BudgetError("too many transformed bins to stack")
        flat.extend(TopBin(b.roots, b.medium, 1) for _ in range(b.multiplicity))
    while len(flat) < q * m:
        flat.append(TopBin())
    step = pk.frame.height
    out = []
    for g in range(m):
        roots, med = [], []
        for k, b in enumerate(flat[g * q:(g + 1) * q]):
            dy = k * step
            roots.extend((tid, x, y + dy) for tid, x, y in b.roots)
            med.extend(p.moved(0, dy) for p in b.medium)
        out.append(TopBin(tuple(roots), tuple(med), 1))
    res = replace(pk, nominal=nominal, frame=Bin(pk.frame.width, q * step), bins=out)
    res.constants = {}
    res.stats = dict(pk.stats, split_q=q)
    _set_constants(res)
    return res


def _profit_driver(instance: Instance, params: SchemeParams, m: int, problem: str) -> Packing:
    inst, transposed, dropped = _clean_instance(instance, drop_large=True)
    inst = Instance(inst.bin, inst.items, m, inst.constraints)
    w, h = inst.bin.width, inst.bin.height
    if params.mode != "ptas" and h / w > params.max_ratio:
        tr, q = strip_split_transform(inst, params)
        sub = _profit_driver(tr, params, tr.m, "multiknapsack")
        pk = _stack(sub, q, m, inst.bin)
        pk.problem = problem
        return _finish(pk, transposed, "split")
    best: Optional[Packing] = None
    best_profit = None
    reps = []
    started = time.perf_counter()
    for t in _distinct_ts(inst, params):
        pk, pre = _profit_run(inst, params, t, m, problem)
        rep = verify_structure(pk)
        if not rep.valid:
            raise InvariantError(f"t={t}: " + "; ".join(rep.problems[:3]))
        real = pk.profit
        c_rep = (pre - real) / (params.eps * pre) if pre else Fraction(0)
        reps.append(c_rep)
        if best is None or real > best_profit:
            best, best_profit = pk, real
    best.stats["t_total"] = time.perf_counter() - started
    best.stats["dropped"] = dropped
    if params.mode == "ptas":
        best.constants["c_repair"] = max(reps)
        best.constants["c"] = 1 / (1 - params.eps) + max(reps)
    return _finish(best, transposed, problem)


def solve_knapsack(instance: Instance, params: SchemeParams) -> Packing:
    """Single knapsack: best verified packing over every choice of the medium index."""
    return _profit_driver(instance, params, 1, "knapsack")


def solve_multiknapsack(instance: Instance, m: Optional[int], params: SchemeParams) -> Packing:
    m = instance.m if m is None else m
    if m < 1:
        raise ParameterError("m must be at least 1")
    return _profit_driver(instance, params, m, "knapsack" if m == 1 else "multiknapsack")


def _binpack_run(inst: Instance, params: SchemeParams, t: int, problem: str,
                 exact_width: bool = False) -> Packing:
    table = inst.table()
    w, h = inst.bin.width, inst.bin.height
    part = _partition(inst, params, t)
    ls = solve_levels(part, table, params, "bpp")
    st = assemble_structured(ls, table, params, "strip")
    b0 = sum(n for _, n in st.roots)
    medium = [table[cid] for cid in part.medium]
    pieces: List[Tuple[List[Placement], Fraction]] = []
    if medium:
        if b0:
            total = nfdh_pack([SquareHull(str(i), c.diameter) for i, c in enumerate(medium)
                               for _ in range(c.multiplicity)], w).height
            dmax = max(c.diameter for c in medium)
            unit = max(8 * params.eps * h, total / b0 + dmax)
        else:
            unit = h
        pieces = _medium_all(medium, w, unit)
    pk = _compose(problem, params, inst.bin, w, h, st, table, pieces, 0, False)
    pk.t = t
    pk.lp_counts = dict(ls.rounded.counts) if ls.rounded else {}
    pk.stats.update({k: v for k, v in ls.stats.items() if not k.startswith("_")})
    return pk


def solve_binpack(instance: Instance, params: SchemeParams) -> Packing:
    """Every copy packed; fewest (height-augmented) bins over all medium indices."""
    if params.mode == "ptas":
        raise ParameterError("bin packing runs in the augmented modes only")
    if instance.constraints:
        raise InputError("side constraints apply to the knapsack variants")
    inst, transposed, _ = _clean_instance(instance, drop_large=False)
    if not inst.items:
        pk = Packing("binpack", params.mode, params.eps, inst.bin, inst.bin, TypeStore(), [], {})
        _set_constants(pk)
        return pk.transposed() if transposed else pk
    best = None
    for t in _distinct_ts(inst, params):
        pk = _binpack_run(inst, params, t, "binpack")
        if best is None or pk.bin_count < best.bin_count:
            best = pk
    return _finish(best, transposed, "")


def _min_dimension(items: Sequence[Circle], params: SchemeParams, m: int, make_bin,
                   lower: Fraction, upper: Fraction, problem: str, max_steps: int = 200):
    """First candidate length on the (1+eps) grid whose bin-packing run needs at most m bins."""
    cands = candidate_lengths(lower, upper, params.eps)
    L = cands[0]
    for k in range(max_steps):
        if k >= len(cands):
            cands.append(cands[-1] * (1 + params.eps))
        L = cands[k]
        inst = Instance(make_bin(L), list(items), m)
        best = None
        for t in _distinct_ts(inst, params):
            pk = _binpack_run(inst, params, t, problem)
            if pk.bin_count <= m and (best is None or pk.frame.height < best.frame.height):
                best = pk
        if best is not None:
            return L, k, best
    raise PackError("no candidate length admitted a packing")


def solve_container(instance: Instance, m: Optional[int], params: SchemeParams) -> Tuple[Fraction, Packing]:
    """Smallest common side of m square bins (augmented), scanning candidate lengths."""
    m = instance.m if m is None else m
    if params.mode == "ptas":
        raise ParameterError("container packing runs in the augmented modes only")
    items = list(instance.items)
    if not items:
        raise InputError("no items")
    dmax = max(c.diameter for c in items)
    area = PI_LOW * sum((c.radius * c.radius * c.multiplicity for c in items), Fraction(0))
    lower = max(dmax, sqrt_down(area / m, params.precision_bits))
    upper = sqrt_up(Fraction(32) / PI_LOW, params.precision_bits) * lower
    L, k, pk = _min_dimension(items, params, m, lambda s: Bin(s, s), lower, upper, "container")
    side = max(pk.frame.width, pk.frame.height)
    pk.frame = Bin(side, side)
    pk.bins = _pad_bins(pk.bins, m)
    # a failed candidate below L means the optimum exceeds L/(1+eps)
    slack = Fraction(1) if k == 0 else 1 + params.eps
    pk.constants["candidate"] = L
    pk.constants["c"] = (side / L * slack - 1) / params.eps
    pk.constants["c_w"] = (side / L - 1) / params.eps
    pk.constants["c_h"] = pk.constants["c_w"]
    rep = verify_structure(pk)
    if not rep.valid:
        raise InvariantError("container packing failed verification: " + "; ".join(rep.problems[:3]))
    return side, pk


def solve_strip(instance: Instance, m: Optional[int], params: SchemeParams,
                width: Optional[Fraction] = None) -> Tuple[Fraction, Packing]:
    """Smallest common height of m strips of fixed width."""
    m = instance.m if m is None else m
    if params.mode == "ptas":
        raise ParameterError("strip packing runs in the augmented modes only")
    w = instance.bin.width if width is None else width
    items = list(instance.items)
    if not items:
        raise InputError("no items")
    if any(c.diameter > w for c in items):
        raise InputError("an item is wider than the strip")
    dmax = max(c.diameter for c in items)
    area = PI_LOW * sum((c.radius * c.radius * c.multiplicity for c in items), Fraction(0))
    lower = max(dmax, area / (m * w))
    upper = nfdh_pack([SquareHull(f"{c.id}#{n}", c.diameter) for c in items
                       for n in range(c.multiplicity)], w).height
    L, k, pk = _min_dimension(items, params, m, lambda s: Bin(w, s), lower, max(upper, lower), "strip")
    pk.bins = _pad_bins(pk.bins, m)
    height = pk.frame.height
    slack = Fraction(1) if k == 0 else 1 + params.eps
    pk.constants["candidate"] = L
    pk.constants["c"] = (height / L * slack - 1) / params.eps
    pk.constants["c_w"] = (pk.frame.width / w - 1) / params.eps
    pk.constants["c_h"] = (height / L - 1) / params.eps
    if params.mode == "ras1d" and pk.frame.width != w:
        raise InvariantError("one-dimensional mode widened the strip")
    rep = verify_structure(pk)
    if not rep.valid:
        raise InvariantError("strip packing failed verification: " + "; ".join(rep.problems[:3]))
    return height, pk


def _pad_bins(bins: List[TopBin], m: int) -> List[TopBin]:
    total = sum(b.multiplicity for b in bins)
    if total < m:
        bins = bins + [TopBin((), (), m - total)]
    return bins


def fmmsb_model(instance: Instance, params: SchemeParams, m: int, t: int = 1,
                max_candidates: int = 8) -> LpModel:
    """The candidate-length model over the first few candidates (for inspection and dumps)."""
    items = list(instance.items)
    dmax = max(c.diameter for c in items)
    area = PI_LOW * sum((c.radius * c.radius * c.multiplicity for c in items), Fraction(0))
    lower = max(dmax, sqrt_down(area / m, params.precision_bits))
    upper = sqrt_up(Fraction(32) / PI_LOW, params.precision_bits) * lower
    blocks = []
    for L in candidate_lengths(lower, upper, params.eps)[:max_candidates]:
        inst = Instance(Bin(L, L), items, m)
        part = _partition(inst, params, t)
        table = inst.table()
        data = []
        for j, ids in enumerate(part.levels):
            geo = part.geometry(j)
            cls = round_radii([table[c] for c in ids], j, params, geo)
            cfgs = enumerate_configurations(cls, geo, part.geometry(j + 1), params)
            data.append(LevelModelData(j, [c.counts for c in cfgs], [c.free_estimate for c in cfgs],
                                       [list(c.members) for c in cls.classes], [c.demand for c in cls.classes]))
        blocks.append((L, data))
    return build_fmmsb(blocks, {c.id: c.multiplicity for c in items}, m)
