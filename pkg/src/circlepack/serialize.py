"""JSON reading and writing for instances and solutions.

Every number is written as a "p/q" string; decimals and integers are
accepted on input and converted exactly.  Solutions store the type tree
(grids included) so a file can be re-verified without re-solving.
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Dict, List, Optional

from .assembler import BinType, CellGrid, Packing, TopBin, TypeStore, short_description
from .errors import InputError
from .geometry import Bin, Circle, Instance, Placement, Rect, SideConstraint, format_rational, to_rational

SOLUTION_FORMAT = "circlepack-solution/1"


def q(x) -> str:
    return format_rational(Fraction(x))


def _num(v, what: str) -> Fraction:
    if isinstance(v, float):
        raise InputError(f"{what}: floats are not accepted, write \"p/q\" or a decimal string")
    return to_rational(v)


# ------------------------------------------------------------------ instances

def instance_to_dict(inst: Instance) -> dict:
    return {
        "bin": {"w": q(inst.bin.width), "h": q(inst.bin.height)},
        "m": inst.m,
        "items": [{"id": c.id, "d": q(c.diameter), "p": q(c.profit), "mult": c.multiplicity}
                  for c in inst.items],
        "constraints": [{"coeffs": {k: q(a) for k, a in sorted(sc.coeffs.items())}, "rhs": q(sc.rhs)}
                        for sc in inst.constraints],
    }


def instance_from_dict(data: Any) -> Instance:
    if not isinstance(data, dict):
        raise InputError("instance must be a JSON object")
    try:
        b = data["bin"]
        bin_ = Bin(_num(b["w"], "bin.w"), _num(b["h"], "bin.h"))
        items = []
        for it in data.get("items", []):
            mult = it.get("mult", 1)
            if not isinstance(mult, int) or isinstance(mult, bool):
                raise InputError(f"item {it.get('id')}: mult must be an integer")
            items.append(Circle(str(it["id"]), _num(it["d"], "d"), _num(it.get("p", 0), "p"), mult))
        cons = [SideConstraint({str(k): _num(a, "coeff") for k, a in sc["coeffs"].items()},
                               _num(sc["rhs"], "rhs"))
                for sc in data.get("constraints", [])]
        m = data.get("m", 1)
        if not isinstance(m, int) or isinstance(m, bool):
            raise InputError("m must be an integer")
        return Instance(bin_, items, m, cons)
    except (KeyError, TypeError, AttributeError) as exc:
        raise InputError(f"malformed instance: {exc!r}") from exc


def load_instance(path: str) -> Instance:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read instance {path}: {exc}") from exc
    return instance_from_dict(data)


def dump_json(data: dict, path: Optional[str] = None) -> str:
    text = json.dumps(data, indent=1, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text


# ------------------------------------------------------------------ solutions

def _rect(r: Rect) -> List[str]:
    return [q(r.x), q(r.y), q(r.w), q(r.h)]


def _grid_dict(g: CellGrid) -> dict:
    return {"w": q(g.width), "h": q(g.height), "cell_w": q(g.cell_w), "cell_h": q(g.cell_h),
            "swap": g.swap, "disks": [[q(x), q(y), q(r)] for x, y, r in g.disks],
            "extra": [_rect(e) for e in g.extra]}


def _grid_from(d: dict) -> CellGrid:
    return CellGrid(_num(d["w"], "grid"), _num(d["h"], "grid"), _num(d["cell_w"], "grid"),
                    _num(d["cell_h"], "grid"),
                    [tuple(_num(v, "disk") for v in disk) for disk in d["disks"]],
                    [Rect(*(_num(v, "cell") for v in e)) for e in d["extra"]], bool(d["swap"]))


def _stat(v):
    if isinstance(v, Fraction):
        return q(v)
    if isinstance(v, float):
        return f"{v:.6f}"          # timings only; not part of the exact data
    if isinstance(v, (list, tuple)):
        return [_stat(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _stat(x) for k, x in v.items()}
    return v


def solution_to_dict(pk: Packing, params=None, extra: Optional[dict] = None,
                     with_short: bool = True, constraints=()) -> dict:
    # grids may be shared between types; store each once
    grid_ids: Dict[int, int] = {}
    grids: List[dict] = []
    types = []
    for tid in sorted(pk.store.types):
        t = pk.store[tid]
        gi = None
        if t.grid is not None:
            key = id(t.grid)
            if key not in grid_ids:
                grid_ids[key] = len(grids)
                grids.append(_grid_dict(t.grid))
            gi = grid_ids[key]
        types.append({
            "id": tid, "level": t.level, "kind": t.kind, "config": t.config,
            "w": q(t.width), "h": q(t.height),
            "circles": [[cid, q(x), q(y), q(r)] for cid, x, y, r in t.circles],
            "grid": gi,
            "children": [[c, n] for c, n in t.children],
            "placed": [_rect(r) + [c] for r, c in t.placed],
        })
    selected = pk.selected()
    out = {
        "format": SOLUTION_FORMAT,
        "problem": pk.problem,
        "mode": pk.mode,
        "eps": q(pk.eps),
        "t": pk.t,
        "nominal": {"w": q(pk.nominal.width), "h": q(pk.nominal.height)},
        "frame": {"w": q(pk.frame.width), "h": q(pk.frame.height)},
        "augmentation": {"w": q(pk.augmentation[0]), "h": q(pk.augmentation[1])},
        "items": [{"id": c.id, "d": q(c.diameter), "p": q(c.profit), "mult": c.multiplicity}
                  for c in pk.table.values()],
        "constraints": [{"coeffs": {k: q(a) for k, a in sorted(sc.coeffs.items())}, "rhs": q(sc.rhs)}
                        for sc in constraints],
        "grids": grids,
        "types": types,
        "bins": [{"roots": [[tid, q(x), q(y)] for tid, x, y in b.roots],
                  "medium": [[p.circle_id, q(p.x), q(p.y)] for p in b.medium],
                  "multiplicity": b.multiplicity} for b in pk.bins],
        "bin_count": pk.bin_count,
        "selected": {cid: n for cid, n in sorted(selected.items())},
        "profit": q(pk.profit),
        "constants": {k: q(v) for k, v in sorted(pk.constants.items())},
        "lp_counts": {str(j): list(v) for j, v in sorted(pk.lp_counts.items())},
        "stats": _stat({k: v for k, v in pk.stats.items()}),
    }
    if params is not None:
        out["params"] = {"eps": q(params.eps), "gamma": q(params.gamma), "mode": params.mode,
                         "seed": params.seed, "budget": params.budget,
                         "group_step": params.scale.group_step}
    if with_short:
        sd = short_description(pk)
        out["short_description"] = [
            {"type": e.type_id, "hash": e.tree_hash, "multiplicity": e.multiplicity,
             "level": e.level, "kind": e.kind, "config": e.config} for e in sd.entries]
    if extra:
        out.update(extra)
    return out


def solution_constraints(data: dict) -> List[SideConstraint]:
    return [SideConstraint({str(k): _num(a, "coeff") for k, a in sc["coeffs"].items()}, _num(sc["rhs"], "rhs"))
            for sc in data.get("constraints", [])]


def solution_from_dict(data: Any) -> Packing:
    if not isinstance(data, dict) or data.get("format") != SOLUTION_FORMAT:
        raise InputError("not a solution file")
    try:
        table = {}
        for it in data["items"]:
            c = Circle(str(it["id"]), _num(it["d"], "d"), _num(it["p"], "p"), int(it["mult"]))
            table[c.id] = c
        grids = [_grid_from(g) for g in data["grids"]]
        store = TypeStore()
        for td in sorted(data["types"], key=lambda d: d["id"]):
            tid = td["id"]
            if tid != len(store.types):
                raise InputError("type ids must be consecutive from 0")
            grid = None if td["grid"] is None else grids[td["grid"]]
            t = BinType(
                id=tid, level=td["level"], width=_num(td["w"], "w"), height=_num(td["h"], "h"),
                kind=td["kind"], config=td["config"],
                circles=tuple((str(cid), _num(x, "x"), _num(y, "y"), _num(r, "r"))
                              for cid, x, y, r in td["circles"]),
                grid=grid,
                children=tuple((int(c), int(n)) for c, n in td["children"]),
                placed=tuple((Rect(*(_num(v, "rect") for v in p[:4])), int(p[4])) for p in td["placed"]))
            for c, _ in t.children + tuple((c, 0) for _, c in t.placed):
                if not 0 <= c < len(data["types"]):
                    raise InputError(f"type {tid}: unknown child type {c}")
            store.types[tid] = t
        bins = []
        for b in data["bins"]:
            roots = tuple((int(tid), _num(x, "x"), _num(y, "y")) for tid, x, y in b["roots"])
            for tid, _, _ in roots:
                if tid not in store.types:
                    raise InputError(f"unknown root type {tid}")
            medium = tuple(Placement(str(cid), _num(x, "x"), _num(y, "y")) for cid, x, y in b["medium"])
            bins.append(TopBin(roots, medium, int(b["multiplicity"])))
        pk = Packing(
            problem=data["problem"], mode=data["mode"], eps=_num(data["eps"], "eps"),
            nominal=Bin(_num(data["nominal"]["w"], "w"), _num(data["nominal"]["h"], "h")),
            frame=Bin(_num(data["frame"]["w"], "w"), _num(data["frame"]["h"], "h")),
            store=store, bins=bins, table=table,
            constants={k: _num(v, k) for k, v in data.get("constants", {}).items()},
            stats=dict(data.get("stats", {})), t=data.get("t"),
            lp_counts={int(j): list(v) for j, v in data.get("lp_counts", {}).items()})
        return pk
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed solution: {exc!r}") from exc


def load_solution(path: str) -> Packing:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read solution {path}: {exc}") from exc
    return solution_from_dict(data)
