"""Configuration linear programs: model builders for the knapsack, multiple
knapsack, bin packing and candidate-length variants, an exact rational
simplex, the integer level-0 block, balanced re-solves and rounding."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import BudgetError, InvariantError, ParameterError

LE, EQ, GE = "<=", "=", ">="


@dataclass
class Var:
    name: str
    kind: str                   # x | b | z | y
    level: Optional[int] = None
    key: object = None          # configuration index, item id or candidate index
    lo: Fraction = Fraction(0)
    hi: Optional[Fraction] = None
    integer: bool = False


@dataclass
class Row:
    coeffs: Dict[int, Fraction]
    sense: str
    rhs: Fraction
    tag: Tuple


@dataclass
class LpModel:
    vars: List[Var] = field(default_factory=list)
    rows: List[Row] = field(default_factory=list)
    objective: Dict[int, Fraction] = field(default_factory=dict)
    maximize: bool = True
    index: Dict[str, int] = field(default_factory=dict)
    # level-0 style budget on the integer block: (var indices, max sum)
    block_sum: Optional[Tuple[List[int], int]] = None

    def add_var(self, name, kind, level=None, key=None, lo=0, hi=None, integer=False) -> int:
        if name in self.index:
            raise ValueError(f"duplicate variable {name}")
        self.vars.append(Var(name, kind, level, key, Fraction(lo),
                             None if hi is None else Fraction(hi), integer))
        self.index[name] = len(self.vars) - 1
        return self.index[name]

    def add_row(self, coeffs: Dict[int, Fraction], sense: str, rhs, tag: Tuple) -> int:
        clean = {k: Fraction(v) for k, v in coeffs.items() if v != 0}
        self.rows.append(Row(clean, sense, Fraction(rhs), tag))
        return len(self.rows) - 1

    @property
    def integer_block(self) -> List[int]:
        return [i for i, v in enumerate(self.vars) if v.integer]

    def vars_of(self, kind: str, level: Optional[int] = None) -> List[int]:
        return [i for i, v in enumerate(self.vars)
                if v.kind == kind and (level is None or v.level == level)]

    def copy(self) -> "LpModel":
        m = LpModel([Var(**v.__dict__) for v in self.vars],
                    [Row(dict(r.coeffs), r.sense, r.rhs, r.tag) for r in self.rows],
                    dict(self.objective), self.maximize, dict(self.index), self.block_sum)
        return m

    def dump(self) -> str:
        """Plain-text listing: one VAR line per variable, one ROW line per constraint."""
        def term(i, a):
            return f"{a.numerator}/{a.denominator}*{self.vars[i].name}"
        lines = [("MAX" if self.maximize else "MIN") + " " +
                 " + ".join(term(i, a) for i, a in sorted(self.objective.items()))]
        for v in self.vars:
            hi = "inf" if v.hi is None else f"{v.hi.numerator}/{v.hi.denominator}"
            lines.append(f"VAR {v.name} {v.kind} [{v.lo.numerator}/{v.lo.denominator}, {hi}]"
                         + (" int" if v.integer else ""))
        for r in self.rows:
            lines.append(f"ROW {':'.join(map(str, r.tag))} " +
                         " + ".join(term(i, a) for i, a in sorted(r.coeffs.items())) +
                         f" {r.sense} {r.rhs.numerator}/{r.rhs.denominator}")
        return "\n".join(lines) + "\n"

    def value(self, coeffs: Dict[int, Fraction], values: Sequence[Fraction]) -> Fraction:
        return sum((a * values[i] for i, a in coeffs.items()), Fraction(0))

    def residuals_ok(self, values: Sequence[Fraction]) -> bool:
        for i, v in enumerate(self.vars):
            if values[i] < v.lo or (v.hi is not None and values[i] > v.hi):
                return False
        for r in self.rows:
            lhs = self.value(r.coeffs, values)
            if (r.sense == LE and lhs > r.rhs) or (r.sense == GE and lhs < r.rhs) \
                    or (r.sense == EQ and lhs != r.rhs):
                return False
        return True


@dataclass
class LpSolution:
    status: str                          # optimal | infeasible | unbounded
    values: List[Fraction] = field(default_factory=list)
    objective: Optional[Fraction] = None
    nodes: int = 1

    def by_name(self, model: LpModel) -> Dict[str, Fraction]:
        return {v.name: self.values[i] for i, v in enumerate(model.vars)}


# ------------------------------------------------------------------ simplex

def _simplex(nrows: List[Tuple[Dict[int, Fraction], str, Fraction]], ncols: int,
             cost: Dict[int, Fraction], rule: str = "bland"):
    """Two-phase dense tableau simplex maximizing cost.x over x >= 0.

    rule="bland" uses Bland's rule throughout; rule="steepest" picks the
    most negative reduced cost and drops to Bland's rule after every
    degenerate pivot.  Both are deterministic and cannot cycle.
    """
    rows = []
    for coeffs, sense, rhs in nrows:
        if rhs < 0:
            coeffs = {k: -a for k, a in coeffs.items()}
            rhs = -rhs
            sense = {LE: GE, GE: LE, EQ: EQ}[sense]
        rows.append((coeffs, sense, rhs))
    m = len(rows)
    n_slack = sum(1 for _, s, _ in rows if s != EQ)
    n_art = sum(1 for _, s, _ in rows if s != LE)
    total = ncols + n_slack + n_art
    T: List[List[Fraction]] = []
    basis: List[int] = []
    s_col = ncols
    a_col = ncols + n_slack
    art_cols = set()
    zero = Fraction(0)
    for coeffs, sense, rhs in rows:
        row = [zero] * (total + 1)
        for k, a in coeffs.items():
            row[k] = a
        row[total] = rhs
        if sense == LE:
            row[s_col] = Fraction(1)
            basis.append(s_col)
            s_col += 1
        else:
            if sense == GE:
                row[s_col] = Fraction(-1)
                s_col += 1
            row[a_col] = Fraction(1)
            basis.append(a_col)
            art_cols.add(a_col)
            a_col += 1
        T.append(row)

    def pivot(r, c):
        pr = T[r]
        p = pr[c]
        if p != 1:
            inv = 1 / p
            for k in range(total + 1):
                if pr[k]:
                    pr[k] *= inv
        nz = [k for k in range(total + 1) if pr[k]]
        for i in range(len(T)):
            if i == r:
                continue
            f = T[i][c]
            if f:
                ri = T[i]
                for k in nz:
                    ri[k] -= f * pr[k]
        basis[r] = c

    def run(c_vec, allowed):
        # reduced costs z_j - c_j; optimal when all >= 0.  Entering column is
        # the most negative one until a pivot fails to move the objective,
        # then the lowest index (Bland) until it moves again, which rules out
        # cycling while keeping the pivot count low on wide models.
        bland = rule == "bland"
        while True:
            cb = [c_vec.get(b, zero) for b in basis]
            in_basis = set(basis)
            enter = None
            best_d = zero
            for j in allowed:
                if j in in_basis:
                    continue
                d = -c_vec.get(j, zero)
                for i in range(len(T)):
                    a = T[i][j]
                    if a and cb[i]:
                        d += cb[i] * a
                if d < best_d:
                    enter, best_d = j, d
                    if bland:
                        break
            if enter is None:
                return "optimal"
            best = None
            for i in range(len(T)):
                a = T[i][enter]
                if a > 0:
                    ratio = T[i][total] / a
                    if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                        best = (ratio, i)
            if best is None:
                return "unbounded"
            pivot(best[1], enter)
            if rule != "bland":
                bland = best[0] == 0

    if art_cols:
        c1 = {a: Fraction(-1) for a in art_cols}
        run(c1, list(range(total)))
        infeas = sum((T[i][total] for i in range(len(T)) if basis[i] in art_cols), zero)
        if infeas > 0:
            return "infeasible", None
        # drive zero-level artificials out, dropping redundant rows
        i = 0
        while i < len(T):
            if basis[i] in art_cols:
                col = next((j for j in range(ncols + n_slack) if T[i][j] != 0), None)
                if col is None:
                    del T[i]
                    del basis[i]
                    continue
                pivot(i, col)
            i += 1
    allowed = list(range(ncols + n_slack))
    status = run(cost, allowed)
    if status != "optimal":
        return status, None
    x = [zero] * ncols
    for i, b in enumerate(basis):
        if b < ncols:
            x[b] = T[i][total]
    return "optimal", x


def solve_lp(model: LpModel, backend: str = "exact", rule: str = "steepest") -> LpSolution:
    """Optimal basic solution of the relaxation (integrality ignored).

    rule is the exact backend's pivot rule, "steepest" or "bland".
    """
    if backend == "float":
        return _solve_float(model)
    if backend != "exact":
        raise ParameterError(f"unknown LP backend {backend!r}")
    n = len(model.vars)
    fixed: Dict[int, Fraction] = {}
    free: List[int] = []
    for i, v in enumerate(model.vars):
        if v.hi is not None and v.hi < v.lo:
            return LpSolution("infeasible")
        if v.hi is not None and v.hi == v.lo:
            fixed[i] = v.lo
        else:
            free.append(i)
    col = {i: k for k, i in enumerate(free)}
    rows = []
    for r in model.rows:
        shift = Fraction(0)
        coeffs = {}
        for i, a in r.coeffs.items():
            if i in fixed:
                shift += a * fixed[i]
            else:
                shift += a * model.vars[i].lo
                coeffs[col[i]] = a
        rhs = r.rhs - shift
        if not coeffs:
            if (r.sense == LE and rhs < 0) or (r.sense == GE and rhs > 0) or (r.sense == EQ and rhs != 0):
                return LpSolution("infeasible")
            continue
        rows.append((coeffs, r.sense, rhs))
    for i in free:
        v = model.vars[i]
        if v.hi is not None:
            rows.append(({col[i]: Fraction(1)}, LE, v.hi - v.lo))
    sign = 1 if model.maximize else -1
    cost = {col[i]: sign * a for i, a in model.objective.items() if i in col}
    if rule not in ("steepest", "bland"):
        raise ParameterError(f"unknown pivot rule {rule!r}")
    status, x = _simplex(rows, len(free), cost, rule)
    if status != "optimal":
        return LpSolution(status)
    values = [Fraction(0)] * n
    for i, val in fixed.items():
        values[i] = val
    for i in free:
        values[i] = model.vars[i].lo + x[col[i]]
    obj = model.value(model.objective, values)
    return LpSolution("optimal", values, obj)


def _solve_float(model: LpModel) -> LpSolution:
    import numpy as np
    from scipy.optimize import linprog

    n = len(model.vars)
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for r in model.rows:
        row = np.zeros(n)
        for i, a in r.coeffs.items():
            row[i] = float(a)
        if r.sense == LE:
            a_ub.append(row); b_ub.append(float(r.rhs))
        elif r.sense == GE:
            a_ub.append(-row); b_ub.append(-float(r.rhs))
        else:
            a_eq.append(row); b_eq.append(float(r.rhs))
    c = np.zeros(n)
    for i, a in model.objective.items():
        c[i] = -float(a) if model.maximize else float(a)
    bounds = [(float(v.lo), None if v.hi is None else float(v.hi)) for v in model.vars]
    res = linprog(c, A_ub=np.array(a_ub) if a_ub else None, b_ub=b_ub or None,
                  A_eq=np.array(a_eq) if a_eq else None, b_eq=b_eq or None,
                  bounds=bounds, method="highs")
    if res.status == 2:
        return LpSolution("infeasible")
    if res.status == 3:
        return LpSolution("unbounded")
    if res.status != 0:
        raise BudgetError(f"float LP backend failed: {res.message}")
    values = [Fraction(float(v)).limit_denominator(10 ** 9) for v in res.x]
    obj = Fraction(float(-res.fun if model.maximize else res.fun))
    return LpSolution("optimal", values, obj)


# ------------------------------------------------------------ integer block

def _better(a: Fraction, b: Optional[Fraction], maximize: bool) -> bool:
    if b is None:
        return True
    return a > b if maximize else a < b


def _fix(model: LpModel, assignment: Dict[int, Fraction]) -> LpModel:
    m = model.copy()
    for i, val in assignment.items():
        m.vars[i].lo = m.vars[i].hi = Fraction(val)
    return m


def _enumeration_size(model: LpModel, block: List[int]) -> Optional[int]:
    summed: List[int] = []
    limit = 0
    if model.block_sum is not None:
        summed = [i for i in model.block_sum[0] if i in set(block)]
        limit = model.block_sum[1]
    rest = [i for i in block if i not in set(summed)]
    count = math.comb(len(summed) + limit, limit) if summed else 1
    for i in rest:
        hi = model.vars[i].hi
        if hi is None:
            return None
        count *= int(hi - model.vars[i].lo) + 1
    return count


def _assignments(model: LpModel, block: List[int]):
    summed = []
    limit = 0
    if model.block_sum is not None:
        summed = [i for i in model.block_sum[0] if i in set(block)]
        limit = model.block_sum[1]
    rest = [i for i in block if i not in set(summed)]
    ranges = [range(int(model.vars[i].lo), int(model.vars[i].hi) + 1) for i in rest]
    for total in range(limit + 1):
        for combo in itertools.combinations_with_replacement(summed, total):
            base = {i: Fraction(0) for i in summed}
            for i in combo:
                base[i] += 1
            for vals in itertools.product(*ranges):
                a = dict(base)
                a.update({i: Fraction(v) for i, v in zip(rest, vals)})
                yield a


def solve_with_integer_block(model: LpModel, budget: int = 100_000,
                             enum_limit: int = 256) -> LpSolution:
    """Optimum with every integer-flagged variable integral.

    Small blocks are enumerated outright (one LP per assignment); larger
    ones go through a depth-first branch and bound on the exact LP bound.
    Either way at most `budget` LPs are solved.
    """
    block = model.integer_block
    if not block:
        return solve_lp(model)
    size = _enumeration_size(model, block)
    if size is not None and size <= enum_limit:
        best: Optional[LpSolution] = None
        nodes = 0
        for a in _assignments(model, block):
            nodes += 1
            if nodes > budget:
                raise BudgetError("integer block enumeration exceeded its node budget")
            sol = solve_lp(_fix(model, a))
            if sol.status == "optimal" and (best is None or _better(sol.objective, best.objective, model.maximize)):
                best = sol
        if best is None:
            return LpSolution("infeasible", nodes=nodes)
        best.nodes = nodes
        return best
    return _branch_and_bound(model, block, budget)


def _branch_and_bound(model: LpModel, block: List[int], budget: int) -> LpSolution:
    best: Optional[LpSolution] = None
    nodes = 0
    stack = [model]
    while stack:
        node = stack.pop()
        nodes += 1
        if nodes > budget:
            raise BudgetError("integer block search exceeded its node budget")
        sol = solve_lp(node)
        if sol.status == "unbounded":
            return sol
        if sol.status != "optimal":
            continue
        if best is not None and not _better(sol.objective, best.objective, model.maximize):
            continue
        frac = next((i for i in block if sol.values[i].denominator != 1), None)
        if frac is None:
            best = sol
            continue
        # rounding the block up or down and re-solving often gives an
        # incumbent that prunes most of the tree
        matched = False
        for rnd in (math.ceil, math.floor):
            dive = solve_lp(_fix(node, {i: Fraction(rnd(sol.values[i])) for i in block}))
            if dive.status == "optimal" and _better(dive.objective, None if best is None else best.objective,
                                                    model.maximize):
                best = dive
            if dive.status == "optimal" and dive.objective == sol.objective:
                matched = True
                break
        if matched:
            continue
        v = sol.values[frac]
        down, up = node.copy(), node.copy()
        down.vars[frac].hi = Fraction(math.floor(v))
        up.vars[frac].lo = Fraction(math.ceil(v))
        # explore the side nearer to the LP value first
        if v - math.floor(v) >= Fraction(1, 2):
            stack.extend([down, up])
        else:
            stack.extend([up, down])
    if best is None:
        return LpSolution("infeasible", nodes=nodes)
    best.nodes = nodes
    return best


# ------------------------------------------------------------ model builders

@dataclass
class LevelModelData:
    """What the builder needs from one level: configurations and class members."""
    level: int
    counts: List[Tuple[int, ...]]          # per configuration
    free: List[Fraction]                   # f_j(C) per configuration
    class_members: List[List[str]]         # item ids per class
    class_demand: List[int]


def build_frounded(levels: Sequence[LevelModelData], profits: Dict[str, Fraction],
                   multiplicity: Dict[str, int], variant: str = "ckp", m: int = 1,
                   side_constraints: Sequence = (), integral_items: Iterable[str] = ()) -> LpModel:
    """Configuration model over all levels.

    Rows: per-class demand and item linkage, per-level bin count, free area
    feeding the next level, and the root row (b_0 = 1 for one knapsack,
    b_0 <= m for m knapsacks; bin packing minimizes b_0 and forces every
    copy in).  Side constraints become coupling rows on z; items they touch
    are kept integral.
    """
    if variant not in ("ckp", "mkp", "bpp"):
        raise ParameterError(f"unknown variant {variant!r}")
    model = LpModel()
    model.maximize = variant != "bpp"
    integral = set(integral_items)
    for sc in side_constraints:
        integral.update(i for i, a in sc.coeffs.items() if a)
    xs: List[List[int]] = []
    bs: List[int] = []
    zs: Dict[str, int] = {}
    for L in levels:
        j = L.level
        bs.append(model.add_var(f"b:{j}", "b", j))
        xs.append([model.add_var(f"x:{j}:{c}", "x", j, c, integer=(j == 0))
                   for c in range(len(L.counts))])
        for members in L.class_members:
            for cid in members:
                mult = multiplicity[cid]
                lo = mult if variant == "bpp" else 0
                zs[cid] = model.add_var(f"z:{cid}", "z", j, cid, lo=lo, hi=mult,
                                        integer=cid in integral)
    for L, xj, bj in zip(levels, xs, bs):
        j = L.level
        for k, members in enumerate(L.class_members):
            use = {xi: Fraction(cnt[k]) for xi, cnt in zip(xj, L.counts) if cnt[k]}
            model.add_row(use, LE, L.class_demand[k], ("demand", j, k))
            link = {zs[cid]: Fraction(1) for cid in members}
            for xi, a in use.items():
                link[xi] = -a
            model.add_row(link, EQ, 0, ("link", j, k))
        row = {xi: Fraction(1) for xi in xj}
        row[bj] = Fraction(-1)
        model.add_row(row, EQ, 0, ("bins", j))
    for idx in range(len(levels) - 1):
        L = levels[idx]
        row = {xi: f for xi, f in zip(xs[idx], L.free) if f}
        row[bs[idx + 1]] = Fraction(-1)
        model.add_row(row, GE, 0, ("free", L.level))
    if bs:
        if variant == "ckp":
            model.add_row({bs[0]: Fraction(1)}, EQ, 1, ("root",))
        elif variant == "mkp":
            model.add_row({bs[0]: Fraction(1)}, LE, m, ("root",))
        if variant == "bpp":
            model.objective = {bs[0]: Fraction(1)}
    if variant != "bpp":
        model.objective = {zi: profits[cid] for cid, zi in zs.items() if profits[cid]}
    for n, sc in enumerate(side_constraints):
        row = {zs[cid]: a for cid, a in sc.coeffs.items() if cid in zs and a}
        model.add_row(row, LE, sc.rhs, ("side", n))
    if xs:
        model.block_sum = (xs[0], 1 if variant == "ckp" else (m if variant == "mkp" else 0))
        if variant == "bpp":
            model.block_sum = None
    return model


def build_fmmsb(blocks: Sequence[Tuple[Fraction, Sequence[LevelModelData]]],
                multiplicity: Dict[str, int], m: int) -> LpModel:
    """Candidate-length model: one bin-packing block per candidate side length.

    y_i picks the candidate (sum y = 1), each block needs b_0 = m y_i
    level-0 bins and must take every copy (z = mult * y_i).  The objective is
    the chosen length.
    """
    model = LpModel()
    model.maximize = False
    ys = []
    for ci, (length, levels) in enumerate(blocks):
        y = model.add_var(f"y:{ci}", "y", None, ci, hi=1, integer=True)
        ys.append(y)
        model.objective[y] = Fraction(length)
        xs, bs = [], []
        zs: Dict[str, int] = {}
        for L in levels:
            j = L.level
            bs.append(model.add_var(f"b:{ci}:{j}", "b", j, ci))
            xs.append([model.add_var(f"x:{ci}:{j}:{c}", "x", j, (ci, c), integer=(j == 0))
                       for c in range(len(L.counts))])
            for members in L.class_members:
                for cid in members:
                    zs[cid] = model.add_var(f"z:{ci}:{cid}", "z", j, (ci, cid), hi=multiplicity[cid])
        for L, xj, bj in zip(levels, xs, bs):
            j = L.level
            for k, members in enumerate(L.class_members):
                use = {xi: Fraction(cnt[k]) for xi, cnt in zip(xj, L.counts) if cnt[k]}
                link = {zs[cid]: Fraction(1) for cid in members}
                for xi, a in use.items():
                    link[xi] = -a
                model.add_row(link, EQ, 0, ("link", ci, j, k))
            row = {xi: Fraction(1) for xi in xj}
            row[bj] = Fraction(-1)
            model.add_row(row, EQ, 0, ("bins", ci, j))
        for idx in range(len(levels) - 1):
            row = {xi: f for xi, f in zip(xs[idx], levels[idx].free) if f}
            row[bs[idx + 1]] = Fraction(-1)
            model.add_row(row, GE, 0, ("free", ci, levels[idx].level))
        if bs:
            model.add_row({bs[0]: Fraction(1), y: Fraction(-m)}, LE, 0, ("root", ci))
        for cid, zi in zs.items():
            model.add_row({zi: Fraction(1), y: Fraction(-multiplicity[cid])}, EQ, 0, ("all", ci, cid))
    model.add_row({y: Fraction(1) for y in ys}, EQ, 1, ("choose",))
    return model


def candidate_lengths(lower: Fraction, upper: Fraction, eps: Fraction) -> List[Fraction]:
    """lower * (1+eps)^k for k = 0.. until the value first reaches upper."""
    out = [lower]
    while out[-1] < upper:
        out.append(out[-1] * (1 + eps))
    return out


# --------------------------------------------------------- balanced rounding

def balanced_solve(model: LpModel, solution: LpSolution) -> LpSolution:
    """Re-solve each level j >= 1 with everything else frozen.

    The bin count b_j stays at its value and the free-area row of level j
    becomes an equality at its realized left-hand side, so the original
    solution stays feasible and the objective cannot move.  Each re-solve
    returns a vertex, which limits the non-null configuration variables.
    """
    if solution.status != "optimal":
        return solution
    values = list(solution.values)
    levels = sorted({v.level for v in model.vars if v.kind == "x" and v.level is not None and v.level >= 1})
    for j in levels:
        own = [i for i, v in enumerate(model.vars)
               if v.level == j and (v.kind == "x" or (v.kind == "z" and not v.integer))]
        own_set = set(own)
        sub = model.copy()
        for i, v in enumerate(sub.vars):
            if i not in own_set:
                v.lo = v.hi = solution.values[i]
        for r in sub.rows:
            if r.tag[:1] == ("free",) and r.tag[-1] == j:
                r.sense = EQ
                r.rhs = model.value(r.coeffs, solution.values)
        sol = solve_lp(sub)
        if sol.status != "optimal":
            raise InvariantError(f"level {j} restriction infeasible; the frozen solution should satisfy it")
        for i in own:
            values[i] = sol.values[i]
    obj = model.value(model.objective, values)
    if obj != solution.objective:
        raise InvariantError("balanced re-solve changed the objective")
    if not model.residuals_ok(values):
        raise InvariantError("balanced solution violates a row")
    return LpSolution("optimal", values, obj, solution.nodes)


def nonnull_per_level(model: LpModel, solution: LpSolution) -> Dict[int, int]:
    out: Dict[int, int] = {}
    for i, v in enumerate(model.vars):
        if v.kind == "x":
            out.setdefault(v.level, 0)
            if solution.values[i] != 0:
                out[v.level] += 1
    return out


@dataclass
class Rounded:
    counts: Dict[int, List[int]]                 # level -> ceil(x) per configuration
    extra: Dict[int, int]                        # level -> configurations rounded up
    selected: Dict[str, int]                     # item id -> copies selected


def round_up(model: LpModel, solution: LpSolution, levels: Sequence[LevelModelData],
             profits: Dict[str, Fraction], multiplicity: Dict[str, int]) -> Rounded:
    """Ceil every configuration count and choose the items to fill the slots.

    Integral items (those under side constraints) keep exactly their solved
    selection; the remaining slots of each class go to free items in order of
    profit, then id.
    """
    counts: Dict[int, List[int]] = {}
    extra: Dict[int, int] = {}
    for L in levels:
        xs = [model.index[f"x:{L.level}:{c}"] for c in range(len(L.counts))]
        vals = [solution.values[i] for i in xs]
        counts[L.level] = [math.ceil(v) for v in vals]
        extra[L.level] = sum(1 for v in vals if v.denominator != 1)
    selected: Dict[str, int] = {}
    for L in levels:
        for k, members in enumerate(L.class_members):
            slots = sum(c * cnt[k] for c, cnt in zip(counts[L.level], L.counts))
            fixed = [cid for cid in members if model.vars[model.index[f"z:{cid}"]].integer]
            for cid in fixed:
                take = int(solution.values[model.index[f"z:{cid}"]])
                take = min(take, slots)
                if take:
                    selected[cid] = take
                    slots -= take
            rest = sorted((cid for cid in members if cid not in set(fixed)),
                          key=lambda c: (-profits[c], c))
            for cid in rest:
                if slots <= 0:
                    break
                take = min(multiplicity[cid], slots)
                selected[cid] = take
                slots -= take
    return Rounded(counts, extra, selected)
