"""Exhaustive pair sweeps: comparison premise versus subequidecomposition.

For every ordered pair of clopen sets at one level, the exact comparison
gap ``max mu(A) - mu(B)`` is computed on the level's measure polytope; for
each pair with a negative gap a witness of ``A <= B`` is searched for and
re-verified.  The polytope is built once and LP optima are shared between
pairs with the same indicator difference.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

from .equidecomp import SearchBudget, subequidecompose, verify_witness
from .partition_engine import level_partition
from .space_model import space_for
from .states_lp import OPTIMAL, InvariantViolation, _polytope, frac_str, optimise


@dataclass
class SweepReport:
    level: int
    pairs: int
    premise_pairs: int
    successes: int
    failures: list = field(default_factory=list)  # [(A, B)] as clopen text
    max_word_length: int = 0
    max_depth: int = 0
    seconds: float = 0.0
    budget: dict = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.premise_pairs == self.successes

    def to_dict(self) -> dict:
        d = asdict(self)
        d["complete"] = self.complete
        return d


def _witness_depth(sp, w) -> int:
    depth = 0
    for p in w.pieces:
        win = sp.evaluate(p.clopen).canonical().window
        depth = max([depth] + [x for x in win if isinstance(x, int)])
    return depth


def _chunk(args):
    action, level, budget, masks_a = args
    sp = space_for(action)
    part = level_partition(action, level)
    n = len(part)
    poly = _polytope(action, part.window)
    exprs = [part.region_of([i for i in range(n) if m >> i & 1]).to_expr() for m in range(1 << n)]
    out = {"pairs": 0, "premise": 0, "ok": 0, "fail": [], "wl": 0, "depth": 0}
    for ma in masks_a:
        for mb in range(1 << n):
            out["pairs"] += 1
            c = [(ma >> i & 1) - (mb >> i & 1) for i in range(n)]
            res, _ = optimise(poly, c, maximize=True)
            if res.status != OPTIMAL:
                raise InvariantViolation(f"measure polytope is {res.status}")
            if res.value >= 0:
                continue
            out["premise"] += 1
            A, B = exprs[ma], exprs[mb]
            w = subequidecompose(action, A, B, budget)
            if w and verify_witness(action, A, B, w)[0]:
                out["ok"] += 1
                out["wl"] = max(out["wl"], w.max_word_length)
                out["depth"] = max(out["depth"], _witness_depth(sp, w))
            else:
                from . import clopen as C

                out["fail"].append((C.to_text(A), C.to_text(B), frac_str(res.value)))
    return out


def comparison_sweep(action, level: int, budget: SearchBudget | None = None,
                     jobs: int = 1) -> SweepReport:
    """All ordered pairs of level-``level`` clopens (needs an exact measure polytope)."""
    budget = budget or SearchBudget(8, 6)
    n = len(level_partition(action, level))
    if n > 10:
        raise ValueError(f"{2 ** (2 * n)} pairs is too many for an exhaustive sweep")
    start = time.perf_counter()
    masks = list(range(1 << n))
    jobs = max(1, int(jobs))
    chunks = [(action, level, budget, masks[k::jobs]) for k in range(jobs)]
    if jobs == 1:
        parts = [_chunk(chunks[0])]
    else:
        with ProcessPoolExecutor(jobs) as ex:
            parts = list(ex.map(_chunk, chunks))
    rep = SweepReport(level, 0, 0, 0, budget=budget.to_dict())
    for p in parts:
        rep.pairs += p["pairs"]
        rep.premise_pairs += p["premise"]
        rep.successes += p["ok"]
        rep.failures += p["fail"]
        rep.max_word_length = max(rep.max_word_length, p["wl"])
        rep.max_depth = max(rep.max_depth, p["depth"])
    rep.failures.sort()
    rep.seconds = round(time.perf_counter() - start, 3)
    return rep
