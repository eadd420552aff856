"""Command-line driver: documented examples, exit codes, determinism, replay and DOT export."""

from __future__ import annotations

import json
import re
import subprocess
import sys

import pytest

from clopen_lab import clopen as C
from clopen_lab.actions import odometer
from clopen_lab.cli import SCHEMA, emit_dot, main, run
from clopen_lab.equidecomp import EquidecompositionWitness, SearchBudget, subequidecompose


def test_compare_example():
    code, out = run(["compare", "--action", "odometer2", "--A", "[00]", "--B", "[1]", "--depth", "2"])
    assert code == 0 and out["schema"] == SCHEMA
    assert out["result"]["gap"]["value"] == "-1/4" and out["result"]["gap"]["certificate_ok"]
    assert out["result"]["witness"] and out["result"]["verified"]
    assert out["config"]["depth"] == 2 and out["config"]["action"]["kind"] == "odometer"


def test_monoid_check_example():
    code, out = run(["monoid-check", "--gens", "2", "--rel", "2 0 = 0 2", "--property", "unperforated",
                     "--bound", "4"])
    assert code == 0 and out["verdict"] == "fails"
    assert out["result"]["certificate"]["params"]["n"] == 2


def test_zsubset_example():
    code, out = run(["zsubset", "--A", "weiss", "--B", "complement:weiss", "--shifts", "-1,0,1",
                     "--window", "4096"])
    assert code == 0 and out["verdict"] == "hall-violation"
    assert out["result"]["neighbourhood"] < out["result"]["F_size"]


@pytest.mark.parametrize("argv", [
    ["compare", "--action", "no-such-action", "--A", "[0]", "--B", "[1]"],
    ["compare", "--action", "odometer2", "--A", "[0", "--B", "[1]"],
    ["monoid-check", "--gens", "2", "--rel", "2 0 0 2"],
    ["zsubset", "--A", "evens", "--B", "odds", "--shifts", "", "--window", "8"],
])
def test_input_errors_exit_2(argv):
    code, out = run(argv)
    assert code == 2 and "error" in out


def test_unknown_is_a_verdict():
    code, out = run(["equidecompose", "--action", "fullshift2", "--A", "full", "--B", "[1]@0",
                     "--depth", "1", "--wordlen", "1", "--time-cap", "2"])
    assert code == 0 and out["verdict"] in ("unknown", "exhausted")


def test_every_command_runs():
    cases = [
        ["equidecompose", "--action", "odometer2", "--A", "[0]@L1", "--B", "[1]@L1", "--depth", "1"],
        ["type-leq", "--action", "swap", "--A", "[x]@0", "--B", "[y]@0", "--depth", "1"],
        ["measures", "--action", "odometer2", "--A", "[0]@L1", "--depth", "2"],
        ["paradox", "--action", "odometer2", "--A", "full", "--depth", "1", "--wordlen", "1",
         "--bound", "2"],
        ["coinvariants", "--action", "odometer2", "--depth", "3"],
        ["unit-ladder", "--action", "odometer2", "--A", "[0]@L1", "--B", "[1]@L1", "--depth", "1"],
        ["krieger", "--action", "odometer2", "--h-action", "odometer2", "--depth", "2"],
    ]
    for argv in cases:
        code, out = run(argv + ["--no-timing"])
        assert code == 0, (argv, out)
        assert out["command"] == argv[0] and out["verdict"]
    assert run(cases[4])[1]["result"]["rank"] == 1


def test_reports_are_deterministic(capsys):
    argv = ["compare", "--action", "odometer2", "--A", "[00]", "--B", "[1]", "--depth", "2", "--no-timing"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first
    assert "timing" not in json.loads(first)


def test_replay_round_trip(tmp_path):
    report = tmp_path / "r.json"
    main(["equidecompose", "--action", "odometer2", "--A", "[0]@L1", "--B", "[1]@L1", "--depth", "1",
          "--json-out", str(report)])
    code, out = run(["equidecompose", "--verify", str(report)])
    assert code == 0 and out["result"]["replay"]
    doc = json.loads(report.read_text())
    for p in doc["result"]["witness"]["pieces"]:
        p["word"] = "e"
    report.write_text(json.dumps(doc))
    code, out = run(["equidecompose", "--verify", str(report)])
    assert code == 3 and not out["result"]["replay"]


def test_console_script_exit_code():
    proc = subprocess.run([sys.executable, "-m", "clopen_lab.cli", "compare", "--action", "nope",
                           "--A", "[0]", "--B", "[1]"], capture_output=True, text=True)
    assert proc.returncode == 2 and json.loads(proc.stdout)["exit"] == 2


# --------------------------------------------------------------------------
# DOT export


def dot_counts(text):
    nodes = re.findall(r"^\s+([lr]\d+) \[label", text, re.M)
    edges = re.findall(r"^\s+l\d+ -- r\d+", text, re.M)
    bold = re.findall(r"style=bold", text)
    return nodes, edges, bold


def test_dot_empty_and_single_piece():
    nodes, edges, _ = dot_counts(emit_dot(EquidecompositionWitness(())))
    assert nodes == [] and edges == []
    act = odometer(2)
    w = subequidecompose(act, C.parse_clopen("[0]@L1 & [0]@L2"), C.parse_clopen("[1]@L1"),
                         SearchBudget(1, 2))
    single = EquidecompositionWitness(w.pieces[:1], w.mode)
    nodes, edges, _ = dot_counts(emit_dot(single))
    assert len(nodes) == 2 and len(edges) == 1


def test_dot_level_two_perfect_matching(tmp_path):
    dot = tmp_path / "w.dot"
    code, _ = run(["type-leq", "--action", "odometer2", "--A", "[0]@L2 + [1]@L2", "--B", "full",
                   "--depth", "2", "--wordlen", "1", "--dot", str(dot)])
    text = dot.read_text()
    nodes, edges, bold = dot_counts(text)
    assert code == 0
    assert sorted(n for n in nodes if n[0] == "l") == ["l0", "l1", "l2", "l3"]
    assert sorted(n for n in nodes if n[0] == "r") == ["r0", "r1", "r2", "r3"]
    matched = [e for e in text.splitlines() if "bold" in e]
    assert len(bold) == 4 and len({m.split("--")[1].split()[0] for m in matched}) == 4
    run(["type-leq", "--action", "odometer2", "--A", "[0]@L2 + [1]@L2", "--B", "full",
         "--depth", "2", "--wordlen", "1", "--dot", str(tmp_path / "again.dot")])
    assert (tmp_path / "again.dot").read_text() == text
