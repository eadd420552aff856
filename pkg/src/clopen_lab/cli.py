"""``clopen-lab``: command-line driver producing JSON reports.

Exit codes: 0 when a verdict was produced (``unknown`` included), 2 for
input errors, 3 when an internal invariant is violated.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import clopen as C
from .actions import (FiniteAction, FullShift, Odometer, SpecError, Subshift, action_from_dict,
                      action_to_dict, alphabet_of, loads_action)
from .equidecomp import (EquidecompositionWitness, SearchBudget, equidecompose, subequidecompose,
                         type_leq, verify_witness)
from .states_lp import (InvariantViolation, comparison_gap, frac_str, order_unit_test,
                        paradox_search, uniquely_ergodic_up_to)

SCHEMA = "clopen-lab/1"
SUBCOMMANDS = ("compare", "equidecompose", "type-leq", "measures", "paradox", "monoid-check",
               "coinvariants", "zsubset", "unit-ladder", "krieger")

SPEC_DIR = Path(__file__).resolve().parents[2] / "specs"

BUILTIN_ACTIONS = {
    "odometer2": {"kind": "odometer", "base": [2]},
    "odometer3": {"kind": "odometer", "base": [3]},
    "fullshift2": {"kind": "fullshift", "alphabet": 2},
    "golden-mean": {"kind": "subshift", "alphabet": 2, "forbidden": ["11"]},
    "swap": {"kind": "finite", "points": ["x", "y"], "group_table": [[0, 1], [1, 0]],
             "action_table": [[0, 1], [1, 0]]},
    "at-most-one-one-x-odometer2": {
        "kind": "product",
        "factors": [{"kind": "subshift", "alphabet": 2, "forbidden": "at-most-one-one"},
                    {"kind": "odometer", "base": [2]}]},
}


class InputError(ValueError):
    pass


# --------------------------------------------------------------------------
# inputs


def resolve_action(text: str):
    """A spec path, a spec name under ``specs/``, a builtin name or inline YAML."""
    if text is None:
        raise InputError("--action is required")
    path = Path(text)
    if path.is_file():
        return loads_action(path.read_text())
    stem = text[:-5] if text.endswith(".spec") else text
    candidate = SPEC_DIR / f"{stem}.spec"
    if candidate.is_file():
        return loads_action(candidate.read_text())
    if stem in BUILTIN_ACTIONS:
        return action_from_dict(BUILTIN_ACTIONS[stem])
    if text.lstrip().startswith("{") or "kind:" in text:
        return loads_action(text)
    raise InputError(f"cannot resolve action spec {text!r}")


_BARE_CYLINDER = re.compile(r"\[([0-9A-Za-z]+)\](?!\s*@)")


def expand_shorthand(action, text: str) -> str:
    """Expand bare cylinders ``[w]`` (no ``@``) for single-factor actions.

    Odometer: ``[01]`` is digit 0 at level 1 and digit 1 at level 2.
    Shift: ``[01]`` is ``[01]@0``.  Finite action: ``[x]`` is ``[x]@0``.
    """
    if isinstance(action, Odometer):
        def odo(m):
            parts = [f"[{d}]@L{k}" for k, d in enumerate(m.group(1), start=1)]
            return parts[0] if len(parts) == 1 else "(" + " & ".join(parts) + ")"
        return _BARE_CYLINDER.sub(odo, text)
    if isinstance(action, (FullShift, Subshift, FiniteAction)):
        return _BARE_CYLINDER.sub(lambda m: f"[{m.group(1)}]@0", text)
    return text


def _alphabet(action):
    return alphabet_of(action) if isinstance(action, (FullShift, Subshift)) else None


def parse_clopen_arg(action, text: str, flag: str) -> C.ClopenExpr:
    if text is None:
        raise InputError(f"{flag} is required")
    return C.parse_clopen(expand_shorthand(action, text), _alphabet(action))


def parse_type_arg(action, text: str, flag: str) -> C.TypeExpr:
    if text is None:
        raise InputError(f"{flag} is required")
    return C.parse_type(expand_shorthand(action, text), _alphabet(action))


def budget_of(args) -> SearchBudget:
    return SearchBudget(args.wordlen, args.depth, args.nodes, args.time_cap)


def parse_vector(text: str, n: int | None = None) -> tuple[int, ...]:
    v = tuple(int(x) for x in text.replace(",", " ").split())
    if n is not None and len(v) != n:
        raise InputError(f"vector {text!r} needs {n} entries")
    return v


# --------------------------------------------------------------------------
# DOT export


def emit_dot(witness) -> str:
    """The matching graph of a witness; left nodes ``l*``, right nodes ``r*``.

    Matched edges are drawn bold.  A witness without matching data (search
    backend, or the empty witness) yields the graph of its pieces.
    """
    lines = ["graph witness {", "  rankdir=LR;"]
    graph = getattr(witness, "graph", None) if witness else None
    if graph is None and witness:
        graph = {"left": [f"a{p.copy}:{C.to_text(p.clopen)}" for p in witness.pieces],
                 "right": [f"b{p.to_copy}:{C.to_text(p.clopen)}+{p.word}" for p in witness.pieces],
                 "edges": [(i, i) for i in range(len(witness.pieces))],
                 "matched": [(i, i) for i in range(len(witness.pieces))]}
    if graph:
        for i, name in enumerate(graph["left"]):
            lines.append(f'  l{i} [label="{name}"];')
        for j, name in enumerate(graph["right"]):
            lines.append(f'  r{j} [label="{name}"];')
        matched = {tuple(e) for e in graph["matched"]}
        for i, j in sorted(tuple(e) for e in graph["edges"]):
            style = ' [style=bold, color=red]' if (i, j) in matched else ""
            lines.append(f"  l{i} -- r{j}{style};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# commands (each returns (verdict, result dict, config dict))


def _witness_result(action, a, b, w) -> tuple[str, dict]:
    if w:
        ok, msg = verify_witness(action, a, b, w)
        if not ok:
            raise InvariantViolation(f"emitted witness fails re-verification: {msg}")
        return "witness", {"witness": w.to_dict(), "verified": True,
                           "max_word_length": w.max_word_length}
    return "unknown", {"exhausted": w.to_dict()}


def cmd_compare(args, action):
    if args.A == "all" and args.B == "all":
        from .sweeps import comparison_sweep

        rep = comparison_sweep(action, args.depth, budget_of(args), jobs=args.jobs)
        d = rep.to_dict()
        d.pop("seconds")
        return ("complete" if rep.complete else "incomplete"), d, {"A": "all", "B": "all"}
    A, B = parse_clopen_arg(action, args.A, "--A"), parse_clopen_arg(action, args.B, "--B")
    rep = comparison_gap(action, A, B, args.depth)
    result = {"gap": rep.to_dict()}
    if rep.value is not None and rep.value < 0:
        w = subequidecompose(action, A, B, budget_of(args))
        args._witness = w
        verdict, extra = _witness_result(action, A, B, w)
        result.update(extra)
    else:
        verdict = rep.verdict or "premise-not-certified"
    return verdict, result, {"A": C.to_text(A), "B": C.to_text(B)}


def cmd_equidecompose(args, action):
    A, B = parse_clopen_arg(action, args.A, "--A"), parse_clopen_arg(action, args.B, "--B")
    w = equidecompose(action, A, B, budget_of(args))
    args._witness = w
    verdict, result = _witness_result(action, A, B, w)
    return verdict, result, {"A": C.to_text(A), "B": C.to_text(B), "mode": "equi"}


def cmd_type_leq(args, action):
    a, b = parse_type_arg(action, args.A, "--A"), parse_type_arg(action, args.B, "--B")
    w = type_leq(action, a, b, budget_of(args))
    args._witness = w
    verdict, result = _witness_result(action, a, b, w)
    return verdict, result, {"A": str(a), "B": str(b), "mode": "sub"}


def cmd_measures(args, action):
    A = parse_clopen_arg(action, args.A, "--A")
    config = {"A": C.to_text(A)}
    result = {"mu_A": uniquely_ergodic_up_to(action, A, args.depth)}
    if args.B is not None:
        B = parse_clopen_arg(action, args.B, "--B")
        config["B"] = C.to_text(B)
        result["gap"] = comparison_gap(action, A, B, args.depth).to_dict()
    result["order_unit"] = order_unit_test(action, A, budget_of(args)).to_dict()
    verdict = result["order_unit"]["verdict"]
    return verdict, result, config


def cmd_paradox(args, action):
    b = parse_type_arg(action, args.A, "--A")
    res = paradox_search(action, b, max_n=args.bound, budget=budget_of(args))
    if res:
        args._witness = res.witness
        n = res.n
        verdict, extra = _witness_result(action, (n + 1) * b, n * b, res.witness)
        return "paradox", {"n": n, **extra}, {"A": str(b), "max_n": args.bound}
    return "none-found", res.to_dict(), {"A": str(b), "max_n": args.bound}


def cmd_monoid_check(args, action):
    from .monoid_lab import MonoidPresentation, check_property, parse_relation, verify_verdict

    if args.gens is None:
        raise InputError("--gens is required")
    try:
        rels = [parse_relation(r) for r in args.rel or ()]
        unit = parse_vector(args.unit, args.gens) if args.unit else None
        x = parse_vector(args.x, args.gens) if args.x else None
        p = MonoidPresentation(args.gens, tuple(rels), unit)
        v = check_property(p, args.property, args.bound, x=x, unit=unit)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if v.verdict == "fails" and not verify_verdict(p, v):
        raise InvariantViolation("counterexample fails re-verification")
    config = {"gens": args.gens, "relations": [r for r in args.rel or ()],
              "property": args.property, "bound": args.bound, "unit": args.unit, "x": args.x}
    return v.verdict, v.to_dict(), config


def cmd_coinvariants(args, action):
    from .monoid_lab import coinvariants

    g = coinvariants(action, args.depth)
    if not g:
        return "refused", {"reason": g.reason}, {}
    return "group", g.to_dict(), {}


def cmd_zsubset(args, action):
    from .zsubset import density_bounds, parse_zsubset, verify_zwitness, zsubset_equidecompose

    if args.A is None or args.B is None or args.shifts is None:
        raise InputError("--A, --B and --shifts are required")
    try:
        A, B = parse_zsubset(args.A), parse_zsubset(args.B)
        S = [int(s) for s in args.shifts.split(",")]
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    res = zsubset_equidecompose(A, B, S, args.window)
    result = res.to_dict()
    lo_a, hi_a = density_bounds(A, args.window)
    lo_b, hi_b = density_bounds(B, args.window)
    result["density_A"] = [frac_str(lo_a), frac_str(hi_a)]
    result["density_B"] = [frac_str(lo_b), frac_str(hi_b)]
    if result["verdict"] == "witness":
        result["verified"] = verify_zwitness(A, B, S, res)
    elif result["verdict"] == "hall-violation":
        result["verified"] = res.recount(B) == res.neighbourhood < len(res.F)
    return result["verdict"], result, {"A": str(A), "B": str(B), "shifts": sorted(set(S)),
                                       "window": args.window}


def cmd_unit_ladder(args, action):
    from .unit_systems import ample_ladder_step, orbit_system

    As, Bs = args.A_list or [], args.B_list or []
    if len(As) != len(Bs):
        raise InputError("give --A and --B the same number of times")
    start = orbit_system(action, args.depth, trivial=not args.orbits)
    equalities = []
    for a_text, b_text in zip(As, Bs):
        A, B = parse_clopen_arg(action, a_text, "--A"), parse_clopen_arg(action, b_text, "--B")
        w = equidecompose(action, A, B, budget_of(args))
        if not w:
            return "unknown", {"unresolved": [C.to_text(A), C.to_text(B)],
                               "exhausted": w.to_dict()}, {"A": As, "B": Bs}
        equalities.append((A, B, w))
    step = ample_ladder_step(start, equalities)
    from .unit_systems import verify_unit_system

    check = verify_unit_system(step.system)
    if not check.ok:
        raise InvariantViolation(f"unit system fails verification: {check.problems}")
    result = step.to_dict()
    result["verification"] = check.to_dict()
    return "unit-system", result, {"A": As, "B": Bs, "start": "orbits" if args.orbits else "trivial"}


def cmd_krieger(args, action):
    from .unit_systems import (CompatibilityOracle, KriegerError, conjugate_construct,
                               orbit_system)

    h_action = resolve_action(args.h_action) if args.h_action else action
    levels = [int(x) for x in args.levels.split(",")] if args.levels else \
        list(range(0, args.depth + 1))
    ladder = [orbit_system(action, lv) for lv in levels]
    H = CompatibilityOracle(h_action, max_word_length=args.wordlen, max_nodes=args.nodes,
                            time_cap=args.time_cap)
    config = {"levels": levels, "h_action": action_to_dict(h_action)}
    try:
        rep = conjugate_construct(H, ladder, len(levels) - 1)
    except KriegerError as exc:
        return "obstructed", {"error": str(exc), "pair": list(exc.pair) if exc.pair else None}, config
    if not rep.ok:
        raise InvariantViolation("conjugation failed its independent re-verification")
    return "conjugated", rep.to_dict(), config


COMMANDS = {
    "compare": cmd_compare, "equidecompose": cmd_equidecompose, "type-leq": cmd_type_leq,
    "measures": cmd_measures, "paradox": cmd_paradox, "monoid-check": cmd_monoid_check,
    "coinvariants": cmd_coinvariants, "zsubset": cmd_zsubset, "unit-ladder": cmd_unit_ladder,
    "krieger": cmd_krieger,
}
NEEDS_ACTION = {"compare", "equidecompose", "type-leq", "measures", "paradox", "coinvariants",
                "unit-ladder", "krieger"}


# --------------------------------------------------------------------------
# replay


def replay(report: dict) -> dict:
    """Re-verify the witness in a report with ``space_model`` primitives only."""
    cmd = report.get("command")
    config = report.get("config", {})
    result = report.get("result", {})
    if cmd in ("compare", "equidecompose", "type-leq", "paradox"):
        if "witness" not in result:
            raise InputError("report carries no witness to replay")
        action = action_from_dict(config["action"])
        alphabet = _alphabet(action)
        a, b = C.parse_type(config["A"], alphabet), C.parse_type(config.get("B", config["A"]),
                                                                 alphabet)
        if cmd == "paradox":
            n = int(result["n"])
            a, b = (n + 1) * a, n * a
        w = EquidecompositionWitness.from_dict(result["witness"])
        ok, msg = verify_witness(action, a, b, w)
        return {"replay": ok, "reason": msg}
    if cmd == "zsubset":
        from .zsubset import ProgressionUnion, ZWitness, parse_zsubset, verify_zwitness

        A, B = parse_zsubset(config["A"]), parse_zsubset(config["B"])
        S = config["shifts"]
        if result["verdict"] == "hall-violation":
            F = result["F"]
            count = len({x + s for x in F for s in S if x + s in B})
            ok = all(x in A for x in F) and count == result["neighbourhood"] < len(F)
            return {"replay": ok, "reason": "Hall recount"}
        if result["verdict"] == "witness":
            pieces = []
            for p in result["pieces"]:
                terms = []
                for part in p["set"].split(","):
                    m_str, _, r_str = part.strip().partition("n")
                    terms.append((int(m_str or 1), int(r_str or 0)))
                pieces.append((int(p["shift"]), ProgressionUnion(tuple(terms))))
            w = ZWitness(tuple(pieces), int(result["period"]), result["mode"])
            return {"replay": verify_zwitness(A, B, S, w), "reason": "periodic re-check"}
    raise InputError(f"nothing to replay for command {cmd!r}")


# --------------------------------------------------------------------------
# driver


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="clopen-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"clopen-lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--action", help="action spec: path, name under specs/, builtin or inline YAML")
        if name == "unit-ladder":
            p.add_argument("--A", dest="A_list", action="append", help="clopen U (repeatable)")
            p.add_argument("--B", dest="B_list", action="append", help="clopen V (repeatable)")
            p.add_argument("--orbits", action="store_true",
                           help="start from the generators' orbit system instead of the trivial one")
        else:
            p.add_argument("--A")
            p.add_argument("--B")
        p.add_argument("--depth", type=int, default=3)
        p.add_argument("--wordlen", type=int, default=4)
        p.add_argument("--nodes", type=int, default=200_000)
        p.add_argument("--time-cap", type=float, default=30.0)
        p.add_argument("--bound", type=int, default=3)
        p.add_argument("--shifts")
        p.add_argument("--window", type=int, default=4096)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--verify", metavar="REPORT", help="replay the witness in a JSON report")
        p.add_argument("--json-out", metavar="PATH")
        p.add_argument("--dot", metavar="PATH", help="write the witness matching graph as DOT")
        p.add_argument("--no-timing", action="store_true", help="omit timing (byte-stable output)")
        if name == "monoid-check":
            p.add_argument("--gens", type=int)
            p.add_argument("--rel", action="append", help='relation such as "2 0 = 0 2"')
            p.add_argument("--property", default="cancellative")
            p.add_argument("--unit")
            p.add_argument("--x")
        if name == "krieger":
            p.add_argument("--h-action", help="action whose full group realizes the conjugation")
            p.add_argument("--levels", help="comma-separated ladder levels (default 0..depth)")
    return ap


def parse_args(argv=None):
    """Parse ``argv``; ``--shifts -1,0,1`` is accepted despite the leading minus."""
    argv = list(sys.argv[1:] if argv is None else argv)
    for i, tok in enumerate(argv[:-1]):
        if tok == "--shifts":
            argv[i:i + 2] = [f"--shifts={argv[i + 1]}", ""]
    return build_parser().parse_args([t for t in argv if t != ""])


def run(argv=None) -> tuple[int, dict]:
    return _run(parse_args(argv))


def _run(args) -> tuple[int, dict]:
    args._witness = None
    start = time.perf_counter()
    try:
        if args.verify:
            report = json.loads(Path(args.verify).read_text())
            out = {"schema": SCHEMA, "version": __version__, "command": args.command,
                   "config": {"verify": args.verify}, "verdict": "replay",
                   "result": replay(report)}
            code = 0 if out["result"]["replay"] else 3
            return code, out
        action = resolve_action(args.action) if args.command in NEEDS_ACTION else None
        verdict, result, config = COMMANDS[args.command](args, action)
    except (InputError, SpecError, C.ClopenSyntaxError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        return 2, {"schema": SCHEMA, "version": __version__, "command": args.command,
                   "error": str(exc), "exit": 2}
    except (InvariantViolation, AssertionError) as exc:
        return 3, {"schema": SCHEMA, "version": __version__, "command": args.command,
                   "error": str(exc), "exit": 3}
    except ValueError as exc:
        return 2, {"schema": SCHEMA, "version": __version__, "command": args.command,
                   "error": str(exc), "exit": 2}
    full_config = {"depth": args.depth, "wordlen": args.wordlen, "nodes": args.nodes,
                   "time_cap": args.time_cap, "bound": args.bound, "window": args.window,
                   "jobs": args.jobs}
    if action is not None:
        full_config["action"] = action_to_dict(action)
    full_config.update(config)
    out = {"schema": SCHEMA, "version": __version__, "command": args.command,
           "config": full_config, "verdict": verdict, "result": result}
    if not args.no_timing:
        out["timing"] = {"seconds": round(time.perf_counter() - start, 4)}
    if args.dot:
        Path(args.dot).write_text(emit_dot(args._witness))
    return 0, out


def _default(x):
    if isinstance(x, Fraction):
        return frac_str(x)
    if isinstance(x, (set, frozenset, tuple)):
        return list(x)
    return str(x)


def main(argv=None) -> int:
    args = parse_args(argv)
    code, out = _run(args)
    text = json.dumps(out, sort_keys=True, indent=2, default=_default)
    if args.json_out:
        Path(args.json_out).write_text(text + "\n")
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
