"""Gap-structured partitioning: size groups, candidate medium sets, levels and
the per-level bin geometry used by the configuration machinery."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import InputError, ParameterError
from .geometry import Circle, PI_LOW, to_rational

MODES = ("ras", "ras1d", "ptas")


@dataclass(frozen=True)
class ScaleProfile:
    """Exponent schedule for groups and level bins.

    group_step=None reproduces the scheme's own schedule (step r = 1/eps);
    a smaller integer step shrinks every exponent so that deep levels become
    reachable on small instances.  Group i holds diameters in
    (eps^(step*(i+1)) w, eps^(step*i) w]; the level-j bin side is
    eps^(step*(t+(j-1)r) + step - 1) w.
    """
    group_step: Optional[int] = None

    @property
    def is_default(self) -> bool:
        return self.group_step is None

    def step(self, r: int) -> int:
        return r if self.group_step is None else self.group_step

    @staticmethod
    def load(spec: str) -> "ScaleProfile":
        if spec == "paper":
            return ScaleProfile()
        if spec.startswith("custom:"):
            path = spec[len("custom:"):]
            try:
                with open(path) as fh:
                    data = json.load(fh)
            except (OSError, ValueError) as exc:
                raise ParameterError(f"cannot read scale profile {path}: {exc}") from exc
            return ScaleProfile.from_dict(data)
        raise ParameterError(f"unknown scale profile {spec!r}")

    @staticmethod
    def from_dict(data: dict) -> "ScaleProfile":
        step = data.get("group_step")
        if step is not None and (not isinstance(step, int) or step < 1):
            raise ParameterError("group_step must be a positive integer")
        return ScaleProfile(step)


@dataclass(frozen=True)
class SchemeParams:
    eps: Fraction
    mode: str = "ras"
    scale: ScaleProfile = ScaleProfile()
    gamma: Optional[Fraction] = None
    precision_bits: int = 64
    config_cap: int = 200_000
    seed: int = 0
    budget: int = 2_000_000
    ratio_bound: Optional[Fraction] = None

    def __post_init__(self):
        eps = to_rational(self.eps)
        object.__setattr__(self, "eps", eps)
        if eps <= 0 or eps.numerator != 1:
            raise ParameterError("eps must be 1/r for an integer r")
        if eps > Fraction(1, 4):
            raise ParameterError("eps must be at most 1/4")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}")
        g = self.eps if self.gamma is None else to_rational(self.gamma)
        if g <= 0:
            raise ParameterError("gamma must be positive")
        object.__setattr__(self, "gamma", g)
        if self.precision_bits < 8:
            raise ParameterError("precision_bits too small")

    @property
    def r(self) -> int:
        return self.eps.denominator

    @property
    def step(self) -> int:
        return self.scale.step(self.r)

    @property
    def max_ratio(self) -> Fraction:
        return Fraction(self.r) if self.ratio_bound is None else self.ratio_bound


@dataclass(frozen=True)
class LevelGeometry:
    """Sizes for one level.

    (w, h): nominal level bin; hhat: height after the structural allowance;
    (wp, hp): scaled bin the configurations refer to;
    (bin_w, bin_h): box the realizations are packed into;
    (cell_w, cell_h): footprint a level bin takes in its parent's grid.
    """
    level: int
    w: Fraction
    h: Fraction
    hhat: Fraction
    wp: Fraction
    hp: Fraction
    bin_w: Fraction
    bin_h: Fraction
    cell_w: Fraction
    cell_h: Fraction

    @property
    def nominal_area(self) -> Fraction:
        return self.wp * self.hp


@dataclass
class GapPartition:
    groups: Dict[int, List[str]]
    t: int
    medium: List[str]
    levels: List[List[str]]
    level_geometry: List[LevelGeometry]
    params: SchemeParams
    width: Fraction
    height: Fraction

    def level_of(self) -> Dict[str, int]:
        return {cid: j for j, ids in enumerate(self.levels) for cid in ids}

    def geometry(self, j: int) -> LevelGeometry:
        while j >= len(self.level_geometry):
            self.level_geometry.append(level_geometry(j, self.t, self.width, self.height, self.params))
        return self.level_geometry[j]


def group_index(d: Fraction, w: Fraction, params: SchemeParams) -> int:
    """Index i with eps^(step*i) w >= d > eps^(step*(i+1)) w."""
    if d > w:
        raise InputError("diameter exceeds bin width")
    ratio = params.eps ** params.step
    i = 0
    bound = w * ratio
    while d <= bound:
        i += 1
        bound *= ratio
    return i


def build_groups(items: Sequence[Circle], w: Fraction, params: SchemeParams) -> Dict[int, List[str]]:
    groups: Dict[int, List[str]] = {}
    for c in items:
        groups.setdefault(group_index(c.diameter, w, params), []).append(c.id)
    for ids in groups.values():
        ids.sort()
    return dict(sorted(groups.items()))


def candidate_medium_sets(groups: Dict[int, List[str]], params: SchemeParams) -> List[Tuple[int, List[str]]]:
    r = params.r
    out = []
    for ell in range(1, r):
        ids = sorted(cid for i, g in groups.items() if i % r == ell for cid in g)
        out.append((ell, ids))
    return out


def level_of_group(i: int, t: int, r: int) -> Optional[int]:
    """Level holding group i, or None when the group is medium."""
    if i < t:
        return 0
    if (i - t) % r == 0:
        return None
    return (i - t) // r + 1


def level_geometry(j: int, t: int, w: Fraction, h: Fraction, params: SchemeParams) -> LevelGeometry:
    eps, r, a, g = params.eps, params.r, params.step, params.gamma
    struct = 1 + 192 * eps
    if j == 0:
        lw, lh = w, h
    else:
        lw = lh = eps ** (a * (t + (j - 1) * r) + a - 1) * w
    hhat = struct * lh
    if params.mode == "ptas":
        if j == 0:
            return LevelGeometry(0, w, h, h, w, h, w, h, w, h)
        wp = (1 + eps) * lw
        cell = (lw, lh) if j == 1 else (wp, wp)
        return LevelGeometry(j, lw, lh, lh, wp, wp, wp, wp, cell[0], cell[1])
    wp = (1 + eps) * lw
    hp = (1 + eps) * (1 + 16 * eps) * hhat
    if params.mode == "ras1d" and j == 0:
        # width stays nominal; the (1+eps) factor moves to the height
        return LevelGeometry(0, lw, lh, hhat, wp, hp, lw, (1 + g) * (1 + eps) * hp,
                             lw, (1 + g) * (1 + eps) * hp)
    return LevelGeometry(j, lw, lh, hhat, wp, hp, wp, (1 + g) * hp, wp, (1 + g) * hp)


def build_levels(groups: Dict[int, List[str]], t: int, params: SchemeParams,
                 w: Fraction, h: Fraction) -> GapPartition:
    r = params.r
    if not 1 <= t <= r - 1:
        raise ParameterError("t must lie in [1, r-1]")
    medium: List[str] = []
    levels: List[List[str]] = [[]]
    for i, ids in groups.items():
        j = level_of_group(i, t, r)
        if j is None:
            medium.extend(ids)
            continue
        while len(levels) <= j:
            levels.append([])
        levels[j].extend(ids)
    medium.sort()
    for ids in levels:
        ids.sort()
    geo = [level_geometry(j, t, w, h, params) for j in range(len(levels) + 1)]
    return GapPartition(groups, t, medium, levels, geo, params, w, h)


def select_medium_ras(candidates: Sequence[Tuple[int, List[str]]], params: SchemeParams) -> List[int]:
    """Order in which medium indices are tried; the driver keeps the best result."""
    return [ell for ell, _ in candidates]


def select_medium_ptas(candidates, profits: Dict[str, Fraction]) -> int:
    """Index of the candidate medium set of least total profit (ties: smallest index)."""
    best = None
    for ell, ids in candidates:
        p = sum((profits[c] for c in ids), Fraction(0))
        if best is None or p < best[0]:
            best = (p, ell)
    return best[1]


def config_size_bound(geo: LevelGeometry, r_min: Fraction, params: SchemeParams, gamma_used) -> int:
    """Upper bound on how many circles of radius >= r_min fit in a level bin.

    Under the scheme's own schedule this is the closed form
    (4/pi) r^(2r^2-2r+2) (h_j/w_j); otherwise it is the area bound
    computed from the actual smallest radius.
    """
    if params.scale.is_default and geo.level >= 1:
        r = params.r
        return int(4 * Fraction(r) ** (2 * r * r - 2 * r + 2) * geo.h / geo.w / PI_LOW) + 1
    area = geo.bin_w * geo.bin_h if gamma_used else geo.wp * geo.hp
    return int(area / (PI_LOW * r_min * r_min))


def gap_ratio_holds(part: GapPartition, diam: Dict[str, Fraction]) -> bool:
    """max diameter of S_(j+1) < eps^step * min diameter of S_j for consecutive nonempty levels."""
    ratio = part.params.eps ** part.params.step
    for j in range(len(part.levels) - 1):
        upper, lower = part.levels[j], part.levels[j + 1]
        if not upper or not lower:
            continue
        if max(diam[c] for c in lower) >= ratio * min(diam[c] for c in upper):
            return False
    return True
