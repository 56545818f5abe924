"""Command-line front end: solve, verify, oracle, gen, render, bench.

Exit codes: 0 success, 1 verification failed, 2 bad input, 3 bad
parameter, 4 budget exhausted, 5 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import random
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import assembler
from .assembler import Packing, verify_structure
from .errors import BudgetError, InputError, InvariantError, PackError, ParameterError
from .geometry import Bin, Circle, Instance, to_rational, verify_packing
from .partition import MODES, ScaleProfile, SchemeParams
from .serialize import (dump_json, instance_from_dict, instance_to_dict, load_instance, q,
                        solution_constraints, solution_from_dict, solution_to_dict)

EXIT_OK, EXIT_INVALID, EXIT_INPUT, EXIT_PARAM, EXIT_BUDGET, EXIT_INTERNAL = 0, 1, 2, 3, 4, 5

PROBLEMS = ("knapsack", "multiknapsack", "binpack", "strip", "container")


def _rational(s: str) -> Fraction:
    try:
        return to_rational(s)
    except InputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def params_from_args(args) -> SchemeParams:
    return SchemeParams(args.eps, mode=args.mode, scale=ScaleProfile.load(args.scale_profile),
                        gamma=args.gamma, seed=args.seed, budget=args.budget,
                        config_cap=args.config_cap)


# ------------------------------------------------------------------ verification

def check_solution(pk: Packing, constraints=(), declared: Optional[dict] = None) -> List[str]:
    """Everything `verify` checks; an empty list means valid.

    Geometry (structure and, where small enough, every flattened bin),
    copies against multiplicities, side constraints, the augmentation
    the constants declare, and declared profit / selection if given.
    """
    problems: List[str] = []
    rep = verify_structure(pk)
    problems += rep.problems
    sel = pk.selected()
    for cid, n in sel.items():
        c = pk.table.get(cid)
        if c is None:
            problems.append(f"unknown item {cid}")
        elif n > c.multiplicity:
            problems.append(f"item {cid} used {n} times, multiplicity {c.multiplicity}")
    for k, sc in enumerate(constraints):
        lhs = sum((a * sel.get(cid, 0) for cid, a in sc.coeffs.items()), Fraction(0))
        if lhs > sc.rhs:
            problems.append(f"side constraint {k}: {lhs} > {sc.rhs}")
    a_w, a_h = pk.augmentation
    cons = pk.constants
    if pk.mode == "ptas" and pk.problem in ("knapsack", "multiknapsack"):
        if pk.frame != pk.nominal:
            problems.append("PTAS solution uses a frame other than the bin")
    if "c_w" in cons and a_w > 1 + cons["c_w"] * pk.eps:
        problems.append(f"width augmentation {a_w} exceeds the declared constant")
    if "c_h" in cons and pk.problem not in ("strip", "container") and a_h > 1 + cons["c_h"] * pk.eps:
        problems.append(f"height augmentation {a_h} exceeds the declared constant")
    if "c_h_bound" in cons and cons.get("c_h", 0) > cons["c_h_bound"]:
        problems.append("height constant exceeds its advertised bound")
    if declared:
        if "profit" in declared and to_rational(declared["profit"]) != pk.profit:
            problems.append(f"declared profit {declared['profit']} differs from {q(pk.profit)}")
        if "selected" in declared and Counter(declared["selected"]) != Counter(dict(sel)):
            problems.append("declared selection differs from the placed circles")
    return problems


def verify_file(path: str) -> Tuple[Packing, List[str]]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read solution {path}: {exc}") from exc
    pk = solution_from_dict(data)
    return pk, check_solution(pk, solution_constraints(data), data)


# ------------------------------------------------------------------ solve

def pad_instance(inst: Instance, r: int, pad: bool) -> Tuple[Instance, Fraction]:
    """Check that the long side is a multiple of short/r; pad it up when allowed."""
    w, h = sorted((inst.bin.width, inst.bin.height))
    unit = w / r
    k = h / unit
    if k.denominator == 1:
        return inst, Fraction(0)
    if not pad:
        raise ParameterError(f"h*r/w = {k} is not an integer; pass --pad to round h up")
    new_h = math.ceil(k) * unit
    if inst.bin.width <= inst.bin.height:
        b = Bin(inst.bin.width, new_h)
    else:
        b = Bin(new_h, inst.bin.height)
    return Instance(b, inst.items, inst.m, inst.constraints), new_h - h


def run_solve(problem: str, inst: Instance, params: SchemeParams, m: Optional[int] = None,
              pad: bool = False) -> Tuple[Packing, dict]:
    """Dispatch one solve; returns the packing and problem-specific headline values."""
    m = inst.m if m is None else m
    extra: dict = {}
    if problem in ("knapsack", "multiknapsack", "binpack"):
        nominal = inst.bin
        inst, padded = pad_instance(inst, params.r, pad)
        if problem == "knapsack":
            pk = assembler.solve_knapsack(inst, params)
        elif problem == "multiknapsack":
            pk = assembler.solve_multiknapsack(inst, m, params)
        else:
            pk = assembler.solve_binpack(inst, params)
        if padded:
            pk.nominal = nominal
            assembler._set_constants(pk)
            extra["pad"] = q(padded)
        if problem == "binpack":
            extra["bins"] = pk.bin_count
        else:
            extra["profit_value"] = q(pk.profit)
    elif problem == "container":
        side, pk = assembler.solve_container(inst, m, params)
        extra["side"] = q(side)
    elif problem == "strip":
        height, pk = assembler.solve_strip(inst, m, params)
        extra["height"] = q(height)
    else:
        raise ParameterError(f"unknown problem {problem}")
    return pk, extra


def _summary(problem: str, pk: Packing, extra: dict, problems: List[str], elapsed: float) -> str:
    lines = [f"problem: {problem}  mode: {pk.mode}  eps: {q(pk.eps)}  t: {pk.t}"]
    if problem == "binpack":
        lines.append(f"bins: {pk.bin_count}")
    elif problem == "container":
        lines.append(f"side: {extra['side']}  (~{float(Fraction(extra['side'])):.6g})")
    elif problem == "strip":
        lines.append(f"height: {extra['height']}  (~{float(Fraction(extra['height'])):.6g})")
    else:
        lines.append(f"profit: {q(pk.profit)}  (~{float(pk.profit):.6g})  circles: {pk.circle_count}")
    a_w, a_h = pk.augmentation
    lines.append(f"frame: {q(pk.frame.width)} x {q(pk.frame.height)}  augmentation: "
                 f"w x{float(a_w):.6g}, h x{float(a_h):.6g}")
    if "pad" in extra:
        lines.append(f"padded height by {extra['pad']}")
    cons = "  ".join(f"{k}={float(v):.6g}" for k, v in sorted(pk.constants.items()))
    lines.append(f"constants: {cons}")
    times = "  ".join(f"{k}={v:.3f}s" for k, v in sorted(pk.stats.items())
                      if k.startswith("t_") and isinstance(v, float))
    lines.append(f"timings: {times}  wall={elapsed:.3f}s")
    lines.append("valid: yes" if not problems else "valid: NO (" + "; ".join(problems[:3]) + ")")
    return "\n".join(lines)


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    params = params_from_args(args)
    t0 = time.perf_counter()
    pk, extra = run_solve(args.problem, inst, params, args.m, args.pad)
    elapsed = time.perf_counter() - t0
    # the valid claim below comes from the same check `verify` runs
    problems = check_solution(pk, inst.constraints)
    data = solution_to_dict(pk, params, extra, not args.no_short, inst.constraints)
    out = args.out or os.path.splitext(args.instance)[0] + ".solution.json"
    dump_json(data, out)
    print(_summary(args.problem, pk, extra, problems, elapsed))
    print(f"solution: {out}")
    return EXIT_OK if not problems else EXIT_INVALID


def cmd_verify(args) -> int:
    _, problems = verify_file(args.solution)
    if problems:
        for p in problems:
            print(f"INVALID: {p}")
        return EXIT_INVALID
    print("valid")
    return EXIT_OK


# ------------------------------------------------------------------ oracle

def cmd_oracle(args) -> int:
    from . import oracle
    inst = load_instance(args.instance)
    if args.problem in ("knapsack", "multiknapsack"):
        m = args.m or inst.m
        res = oracle.exact_knapsack(inst, m, args.resolution_bits, args.node_budget)
        print(f"profit: {q(res.profit)}")
        print(f"chosen: {' '.join(res.chosen)}")
    elif args.problem == "binpack":
        n, _ = oracle.exact_binpack(inst, args.resolution_bits, args.node_budget)
        print(f"bins: {n}")
    elif args.problem == "container":
        side, _ = oracle.exact_container(inst.items, args.m or inst.m,
                                         resolution_bits=args.resolution_bits, node_budget=args.node_budget)
        print(f"side: {q(side)}")
    else:
        h, _ = oracle.exact_strip(inst.items, inst.bin.width, args.m or inst.m,
                                  resolution_bits=args.resolution_bits, node_budget=args.node_budget)
        print(f"height: {q(h)}")
    print(f"note: infeasibility is certified only up to grid resolution 2^-{args.resolution_bits}")
    return EXIT_OK


# ------------------------------------------------------------------ gen

REGIMES = {
    # (smallest diameter exponent, largest) as powers of 1/2 of the bin width
    "sparse": (1, 3),
    "dense": (3, 6),
    "mixed": (1, 8),
    "tiny": (6, 12),
}


def generate(n: int, seed: int, regime: str = "mixed", classes: Optional[int] = None,
             max_mult: int = 1, w: Fraction = Fraction(1), h: Fraction = Fraction(1),
             m: int = 1, profit: str = "random") -> Instance:
    """Random instance; the same arguments always give the same instance."""
    if regime not in REGIMES:
        raise ParameterError(f"unknown regime {regime}")
    if n < 0 or max_mult < 1:
        raise ParameterError("n must be >= 0 and max_mult >= 1")
    rng = random.Random(seed)
    lo, hi = REGIMES[regime]
    side = min(w, h)
    sizes = None
    if classes:
        sizes = sorted({Fraction(1, 2 ** rng.randint(lo, hi)) * Fraction(rng.randint(9, 16), 16)
                        for _ in range(classes)})
    items = []
    for i in range(n):
        if sizes:
            d = rng.choice(sizes) * side
        else:
            d = Fraction(1, 2 ** rng.randint(lo, hi)) * Fraction(rng.randint(9, 16), 16) * side
        if profit == "area":
            p = d * d * Fraction(rng.randint(8, 12), 10)
        else:
            p = Fraction(rng.randint(1, 20), rng.randint(1, 4))
        mult = rng.randint(1, max_mult)
        items.append(Circle(f"c{i}", d, p, mult))
    return Instance(Bin(w, h), items, m)


def cmd_gen(args) -> int:
    inst = generate(args.n, args.seed, args.regime, args.classes, args.max_mult,
                    args.w, args.h, args.m, args.profit)
    dump_json(instance_to_dict(inst), args.out)
    if not args.out:
        sys.stdout.write(dump_json(instance_to_dict(inst)))
    return EXIT_OK


# ------------------------------------------------------------------ render

LEVEL_COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"]


def _walk(store, tid, ox, oy, out, limit):
    t = store[tid]
    out.append(("box", t.level, t.kind, ox, oy, t.width, t.height))
    for cid, x, y, r in t.circles:
        if len(out) > limit:
            return
        out.append(("circle", t.level, cid, ox + x, oy + y, r))
    if t.children:
        cells = t.grid.cells(0, t.cells_used)
        for child, n in t.children:
            for _ in range(n):
                c = next(cells)
                if len(out) > limit:
                    return
                out.append(("cell", t.level + 1, ox + c.x, oy + c.y, c.w, c.h))
                _walk(store, child, ox + c.x, oy + c.y, out, limit)
    for rect, child in t.placed:
        out.append(("cell", t.level + 1, ox + rect.x, oy + rect.y, rect.w, rect.h))
        _walk(store, child, ox + rect.x, oy + rect.y, out, limit)


def render_bin(pk: Packing, index: int, radii: Dict[str, Fraction], limit: int = 50_000) -> str:
    """SVG of one top-level bin; one user unit per length unit, y pointing up."""
    W, H = pk.frame.width, pk.frame.height
    b = pk.bins[index]
    items: list = []
    for tid, x, y in b.roots:
        _walk(pk.store, tid, x, y, items, limit)
    f = float
    stroke = f(min(W, H)) / 400
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {f(W)} {f(H)}" '
             f'width="{600 * f(W) / f(max(W, H)):.1f}" height="{600 * f(H) / f(max(W, H)):.1f}">',
             f'<g transform="translate(0,{f(H)}) scale(1,-1)" stroke-width="{stroke}">',
             f'<rect x="0" y="0" width="{f(W)}" height="{f(H)}" fill="white" stroke="black"/>',
             f'<rect x="0" y="0" width="{f(pk.nominal.width)}" height="{f(pk.nominal.height)}" '
             f'fill="none" stroke="gray" stroke-dasharray="{stroke * 4}"/>']
    for it in items:
        if it[0] == "box":
            _, lev, kind, x, y, w, h = it
            parts.append(f'<rect x="{f(x)}" y="{f(y)}" width="{f(w)}" height="{f(h)}" fill="none" '
                         f'stroke="{LEVEL_COLORS[lev % len(LEVEL_COLORS)]}" opacity="0.5"><title>{kind} level {lev}</title></rect>')
        elif it[0] == "cell":
            _, lev, x, y, w, h = it
            parts.append(f'<rect x="{f(x)}" y="{f(y)}" width="{f(w)}" height="{f(h)}" fill="none" '
                         f'stroke="#bbbbbb" stroke-width="{stroke / 2}"/>')
        else:
            _, lev, cid, x, y, _slot = it
            r = radii[cid]
            parts.append(f'<circle cx="{f(x)}" cy="{f(y)}" r="{f(r)}" '
                         f'fill="{LEVEL_COLORS[lev % len(LEVEL_COLORS)]}" fill-opacity="0.6" '
                         f'stroke="black" stroke-width="{stroke / 2}"><title>{cid}</title></circle>')
    for p in b.medium:
        parts.append(f'<circle cx="{f(p.x)}" cy="{f(p.y)}" r="{f(radii[p.circle_id])}" fill="#7f7f7f" '
                     f'fill-opacity="0.6" stroke="black" stroke-width="{stroke / 2}"><title>{p.circle_id} (medium)</title></circle>')
    parts.append("</g></svg>")
    return "\n".join(parts) + "\n"


def cmd_render(args) -> int:
    with open(args.solution) as fh:
        pk = solution_from_dict(json.load(fh))
    radii = {cid: c.radius for cid, c in pk.table.items()}
    stem = args.out or os.path.splitext(args.solution)[0]
    for i in range(len(pk.bins)):
        path = f"{stem}.bin{i}.svg"
        with open(path, "w") as fh:
            fh.write(render_bin(pk, i, radii, args.limit))
        print(path)
    return EXIT_OK


# ------------------------------------------------------------------ bench

BENCH_FIELDS = ["instance", "problem", "eps", "mode", "value", "oracle", "ratio",
                "aug_w", "aug_h", "valid", "seconds", "oracle_seconds", "error"]


def bench_one(path: str, problem: str, eps: str, mode: str, scale: str, with_oracle: bool) -> dict:
    from . import oracle
    row = {"instance": os.path.basename(path), "problem": problem, "eps": eps, "mode": mode}
    try:
        inst = load_instance(path)
        params = SchemeParams(to_rational(eps), mode=mode, scale=ScaleProfile.load(scale))
        t0 = time.perf_counter()
        pk, extra = run_solve(problem, inst, params, pad=True)
        row["seconds"] = f"{time.perf_counter() - t0:.3f}"
        if problem == "binpack":
            value = Fraction(pk.bin_count)
        elif problem == "container":
            value = Fraction(extra["side"])
        elif problem == "strip":
            value = Fraction(extra["height"])
        else:
            value = pk.profit
        row["value"] = q(value)
        row["aug_w"], row["aug_h"] = (f"{float(a):.6g}" for a in pk.augmentation)
        row["valid"] = "yes" if not check_solution(pk, inst.constraints) else "no"
        if with_oracle:
            t0 = time.perf_counter()
            if problem in ("knapsack", "multiknapsack"):
                opt = oracle.exact_knapsack(inst, inst.m if problem == "multiknapsack" else 1).profit
                ratio = value / opt if opt else Fraction(1)
            elif problem == "binpack":
                opt = Fraction(oracle.exact_binpack(inst)[0])
                ratio = opt / value if value else Fraction(1)
            elif problem == "container":
                opt = oracle.exact_container(inst.items, inst.m)[0]
                ratio = opt / value
            else:
                opt = oracle.exact_strip(inst.items, inst.bin.width, inst.m)[0]
                ratio = opt / value
            row["oracle_seconds"] = f"{time.perf_counter() - t0:.3f}"
            row["oracle"] = q(opt)
            row["ratio"] = f"{float(ratio):.6f}"
    except PackError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_bench(args) -> int:
    files = sorted(os.path.join(args.corpus, f) for f in os.listdir(args.corpus) if f.endswith(".json")
                   and not f.endswith(".solution.json"))
    jobs = [(p, args.problem, e, md, args.scale_profile, not args.no_oracle)
            for p in files for e in args.eps_list.split(",") for md in args.modes.split(",")]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as ex:
            rows = list(ex.map(bench_one, *zip(*jobs))) if jobs else []
    else:
        rows = [bench_one(*j) for j in jobs]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow(r)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="circlepack", description="Exact-rational circle packing schemes.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve an instance file")
    sp.add_argument("problem", choices=PROBLEMS)
    sp.add_argument("instance")
    sp.add_argument("--eps", type=_rational, default=Fraction(1, 4))
    sp.add_argument("--mode", choices=MODES, default="ras")
    sp.add_argument("--m", type=int, default=None, help="number of bins (default: instance m)")
    sp.add_argument("--gamma", type=_rational, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scale-profile", default="paper", help="paper (default group schedule) or custom:FILE")
    sp.add_argument("--budget", type=int, default=2_000_000)
    sp.add_argument("--config-cap", type=int, default=200_000)
    sp.add_argument("--pad", action="store_true", help="round h up to a multiple of w*eps")
    sp.add_argument("--no-short", action="store_true", help="omit the short description")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_solve)

    vp = sub.add_parser("verify", help="re-check a solution file")
    vp.add_argument("solution")
    vp.set_defaults(func=cmd_verify)

    op = sub.add_parser("oracle", help="brute-force optimum of a tiny instance")
    op.add_argument("problem", choices=PROBLEMS)
    op.add_argument("instance")
    op.add_argument("--m", type=int, default=None)
    op.add_argument("--resolution-bits", type=int, default=16)
    op.add_argument("--node-budget", type=int, default=20_000)
    op.set_defaults(func=cmd_oracle)

    gp = sub.add_parser("gen", help="random instance")
    gp.add_argument("--n", type=int, default=6)
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--regime", choices=sorted(REGIMES), default="mixed")
    gp.add_argument("--classes", type=int, default=None, help="number of distinct diameters")
    gp.add_argument("--max-mult", type=int, default=1)
    gp.add_argument("--w", type=_rational, default=Fraction(1))
    gp.add_argument("--h", type=_rational, default=Fraction(1))
    gp.add_argument("--m", type=int, default=1)
    gp.add_argument("--profit", choices=("random", "area"), default="random")
    gp.add_argument("--out")
    gp.set_defaults(func=cmd_gen)

    rp = sub.add_parser("render", help="SVG per top-level bin")
    rp.add_argument("solution")
    rp.add_argument("--out", help="output stem")
    rp.add_argument("--limit", type=int, default=50_000, help="maximum drawn elements per bin")
    rp.set_defaults(func=cmd_render)

    bp = sub.add_parser("bench", help="CSV of results against the oracle over a corpus")
    bp.add_argument("corpus")
    bp.add_argument("--problem", choices=PROBLEMS, default="knapsack")
    bp.add_argument("--eps-list", default="1/4")
    bp.add_argument("--modes", default="ras")
    bp.add_argument("--scale-profile", default="paper")
    bp.add_argument("--workers", type=int, default=1)
    bp.add_argument("--no-oracle", action="store_true")
    bp.add_argument("--out")
    bp.set_defaults(func=cmd_bench)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except BudgetError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InvariantError, PackError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
