"""Shared instance generators and an independent slow packing checker."""
import random
from fractions import Fraction

from circlepack import Bin, Circle, Instance, Placement
from circlepack.partition import ScaleProfile, SchemeParams

EPS = Fraction(1, 4)


def two_level_params(mode="ras", **kw):
    # group ratio eps^2 so that levels 0 and 1 both occur on tiny instances
    return SchemeParams(EPS, mode=mode, scale=ScaleProfile(2), **kw)


def random_diameter(rng, w=Fraction(1)):
    kind = rng.random()
    if kind < 0.55:
        return Fraction(rng.randint(16, 44), 64) * w         # level 0
    if kind < 0.75:
        return Fraction(1, rng.randint(17, 255)) * w         # medium band for t = 1
    return Fraction(1, rng.randint(257, 1200)) * w           # level 1 for t = 1


def random_instance(rng, n, w=Fraction(1), h=Fraction(1), m=1):
    items = [Circle(f"c{i}", random_diameter(rng, w), rng.randint(1, 10)) for i in range(n)]
    return Instance(Bin(w, h), items, m)


def slow_overlaps(bin, placements, radii):
    """Pairwise and wall violations, recomputed from scratch with plain loops."""
    bad = set()
    n = len(placements)
    for i in range(n):
        p, r = placements[i], radii[i]
        if p.x - r < 0 or p.y - r < 0 or p.x + r > bin.width or p.y + r > bin.height:
            bad.add(("wall", i))
    for i in range(n):
        for j in range(i + 1, n):
            a, b = placements[i], placements[j]
            need = radii[i] + radii[j]
            if (a.x - b.x) ** 2 + (a.y - b.y) ** 2 < need ** 2:
                bad.add(("pair", i, j))
    return bad


def random_packing(rng, n, bin, rmin=Fraction(1, 64), rmax=Fraction(1, 8), tries=200):
    """Circles dropped at random positions, kept only when they fit exactly."""
    placed, radii = [], []
    for _ in range(tries):
        if len(placed) == n:
            break
        r = Fraction(rng.randint(int(rmin * 1024), int(rmax * 1024)), 1024)
        if 2 * r > min(bin.width, bin.height):
            continue
        x = r + Fraction(rng.randint(0, 4096), 4096) * (bin.width - 2 * r)
        y = r + Fraction(rng.randint(0, 4096), 4096) * (bin.height - 2 * r)
        if all((x - p.x) ** 2 + (y - p.y) ** 2 >= (r + s) ** 2 for p, s in zip(placed, radii)):
            placed.append(Placement(f"p{len(placed)}", x, y))
            radii.append(r)
    circles = [Circle(p.circle_id, 2 * r) for p, r in zip(placed, radii)]
    return placed, radii, circles


ACCEPTANCE_LINES = []


def record(number, failures, detail, seconds):
    """One PASS/FAIL line per acceptance criterion, printed at the end of the run."""
    status = "PASS" if not failures else "FAIL"
    line = f"{status} criterion {number}: {detail} ({seconds:.1f} s)"
    if failures:
        line += f"; first failures: {failures[:3]}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line
