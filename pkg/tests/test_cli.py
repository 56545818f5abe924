import csv
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from circlepack import Bin, Circle, Instance
from circlepack.cli import generate, main
from circlepack.serialize import (dump_json, instance_from_dict, instance_to_dict, load_solution,
                                  solution_from_dict, solution_to_dict)
from circlepack.assembler import solve_knapsack
from circlepack.geometry import SideConstraint

from helpers import random_instance, two_level_params

F = Fraction


def _write(path, inst):
    dump_json(instance_to_dict(inst), str(path))
    return str(path)


def test_instance_round_trip():
    inst = generate(8, 3, max_mult=4)
    inst.constraints.append(SideConstraint({"c0": F(1), "c1": F(2)}, F(2)))
    back = instance_from_dict(json.loads(dump_json(instance_to_dict(inst))))
    assert back == inst


def test_generator_is_deterministic():
    assert generate(10, 42) == generate(10, 42)
    assert generate(10, 42) != generate(10, 43)
    inst = generate(20, 1, classes=3)
    assert len({c.diameter for c in inst.items}) <= 3


def test_bad_instance_exits_with_input_error(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"bin": {"w": "1", "h": "1"}, "items": [{"id": "a", "d": "-1", "p": "1"}]}')
    assert main(["solve", "knapsack", str(p)]) == 2
    p.write_text("not json")
    assert main(["solve", "knapsack", str(p)]) == 2


def test_bad_eps_exits_with_parameter_error(tmp_path):
    path = _write(tmp_path / "i.json", generate(3, 1))
    assert main(["solve", "knapsack", path, "--eps", "1/3"]) == 3


def test_unpadded_height_needs_pad(tmp_path):
    path = _write(tmp_path / "i.json", Instance(Bin(1, F(9, 8)), [Circle("a", F(1, 2), 1)]))
    assert main(["solve", "knapsack", path]) == 3
    out = str(tmp_path / "s.json")
    assert main(["solve", "knapsack", path, "--pad", "--out", out]) == 0
    data = json.load(open(out))
    assert data["nominal"] == {"w": "1/1", "h": "9/8"}


def test_budget_exhaustion_exit_code(tmp_path):
    path = _write(tmp_path / "i.json", generate(6, 2, regime="sparse", max_mult=3))
    assert main(["solve", "knapsack", path, "--budget", "0"]) == 4


def test_solve_then_verify(tmp_path, capsys):
    path = _write(tmp_path / "i.json", random_instance(__import__("random").Random(4), 5))
    out = str(tmp_path / "s.json")
    assert main(["solve", "knapsack", path, "--out", out]) == 0
    assert "valid: yes" in capsys.readouterr().out
    assert main(["verify", out]) == 0
    assert capsys.readouterr().out.strip() == "valid"


def _tamper_first_circle(data):
    for t in data["types"]:
        if t["circles"]:
            cid, x, y, r = t["circles"][0]
            t["circles"][0] = [cid, str(F(x) + F(t["w"])), y, r]
            return True
    for b in data["bins"]:
        if b["medium"]:
            cid, x, y = b["medium"][0]
            b["medium"][0] = [cid, str(F(x) + 100), y]
            return True
    return False


def test_verify_rejects_tampered_solution(tmp_path, capsys):
    path = _write(tmp_path / "i.json", Instance(Bin(1, 1), [Circle("a", F(1, 2), 2), Circle("b", F(1, 3), 1)]))
    out = tmp_path / "s.json"
    assert main(["solve", "knapsack", path, "--out", str(out)]) == 0
    data = json.load(open(out))
    assert _tamper_first_circle(data)
    out.write_text(json.dumps(data))
    assert main(["verify", str(out)]) == 1
    assert "INVALID" in capsys.readouterr().out


def test_verify_rejects_wrong_declared_profit(tmp_path):
    path = _write(tmp_path / "i.json", Instance(Bin(1, 1), [Circle("a", F(1, 2), 2)]))
    out = tmp_path / "s.json"
    main(["solve", "knapsack", path, "--out", str(out)])
    data = json.load(open(out))
    data["profit"] = "3"
    out.write_text(json.dumps(data))
    assert main(["verify", str(out)]) == 1


def test_solution_round_trip_keeps_structure():
    inst = random_instance(__import__("random").Random(6), 6)
    pk = solve_knapsack(inst, two_level_params())
    back = solution_from_dict(json.loads(dump_json(solution_to_dict(pk))))
    assert back.profit == pk.profit
    assert back.frame == pk.frame
    assert [back.flatten(i) for i in range(len(back.bins))] == [pk.flatten(i) for i in range(len(pk.bins))]


def test_binpack_three_filling_circles(tmp_path, capsys):
    items = [Circle(f"u{i}", 1) for i in range(3)]
    path = _write(tmp_path / "i.json", Instance(Bin(1, 1), items))
    # at eps = 1/4 the height allowance lets two unit circles share an augmented bin
    assert main(["solve", "binpack", path, "--eps", "1/256", "--out", str(tmp_path / "s.json")]) == 0
    assert "bins: 3" in capsys.readouterr().out


def test_custom_scale_profile_and_oracle(tmp_path, capsys):
    prof = tmp_path / "prof.json"
    prof.write_text('{"group_step": 2}')
    path = _write(tmp_path / "i.json", Instance(Bin(1, 1), [Circle("a", F(1, 2), 2), Circle("b", F(1, 300), 1)]))
    assert main(["solve", "knapsack", path, "--scale-profile", f"custom:{prof}",
                 "--out", str(tmp_path / "s.json")]) == 0
    assert "profit: 3" in capsys.readouterr().out
    assert main(["oracle", "knapsack", path]) == 0
    assert "profit: 3/1" in capsys.readouterr().out
    assert main(["solve", "knapsack", path, "--scale-profile", "custom:/nonexistent"]) == 3


def test_container_and_strip_commands(tmp_path, capsys):
    path = _write(tmp_path / "i.json", Instance(Bin(1, 1), [Circle("a", F(1, 2), 1), Circle("b", F(1, 4), 1)]))
    assert main(["solve", "container", path, "--out", str(tmp_path / "c.json")]) == 0
    assert "side" in capsys.readouterr().out
    assert main(["solve", "strip", path, "--out", str(tmp_path / "s.json")]) == 0
    assert main(["verify", str(tmp_path / "s.json")]) == 0


def test_render_writes_svg(tmp_path, capsys):
    path = _write(tmp_path / "i.json", generate(5, 7))
    sol = str(tmp_path / "s.json")
    main(["solve", "knapsack", path, "--out", sol])
    capsys.readouterr()
    assert main(["render", sol]) == 0
    svg = capsys.readouterr().out.split()[0]
    text = open(svg).read()
    assert text.startswith("<svg") and "<circle" in text


def test_bench_csv(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    for s in range(2):
        _write(corpus / f"i{s}.json", random_instance(__import__("random").Random(s), 3))
    out = tmp_path / "b.csv"
    assert main(["bench", str(corpus), "--modes", "ras,ptas", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 4
    assert all(r["valid"] == "yes" and not r["error"] for r in rows)


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "circlepack", "gen", "--n", "2", "--seed", "5"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["items"][0]["id"] == "c0"
