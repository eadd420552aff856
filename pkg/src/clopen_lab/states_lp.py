"""Invariant-measure polytopes at finite resolution and what they certify.

Variables are the masses of the atoms of one window.  Invariance is
imposed as ``mu(C) = mu(g^-1 C)`` for every generator ``g`` and every atom
``C`` of the largest sub-window whose translate stays inside the window;
for one-dimensional shifts these are the usual block consistency
equations ``sum_a p(wa) = sum_a p(aw)``.

A polytope is tagged EXACT when its points are exactly the marginals of
invariant probability measures, and OUTER when it may be larger.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from . import clopen as C
from .actions import FiniteGroup, FreeAbelian, FullShift, GroupWord, Subshift, SYMBOLS, AT_MOST_ONE_ONE
from .equidecomp import EquidecompositionWitness, SearchBudget, type_leq
from .lp import INFEASIBLE, OPTIMAL, merge_equal_variables, solve_lp
from .space_model import Region, _OdometerFactor, _ShiftFactor, _FiniteFactor, apply_word, is_empty, space_for

EXACT = "EXACT"
OUTER = "OUTER"


class InvariantViolation(RuntimeError):
    """Two results that cannot both hold were produced."""


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def generators(schema) -> list:
    if isinstance(schema, FreeAbelian):
        return [tuple(1 if i == j else 0 for j in range(schema.rank)) for i in range(schema.rank)]
    if isinstance(schema, FiniteGroup):
        return list(range(1, schema.order))
    raise TypeError(f"unknown group schema {schema!r}")


# --------------------------------------------------------------------------
# polytopes


@dataclass(frozen=True)
class MeasurePolytope:
    action: object
    window: tuple
    n_vars: int
    A_eq: tuple  # invariance rows, then the total-mass row last
    b_eq: tuple
    tag: str

    @property
    def invariance_rows(self):
        return self.A_eq[:-1], self.b_eq[:-1]

    def indicator(self, region: Region) -> list[int]:
        mask = region.at(self.window)
        return [(mask >> i) & 1 for i in range(self.n_vars)]

    def contains_point(self, x) -> bool:
        return all(v >= 0 for v in x) and all(
            sum(a * v for a, v in zip(row, x)) == bi for row, bi in zip(self.A_eq, self.b_eq))


def _tag(action, sp, window) -> str:
    if sp.exact:
        return EXACT
    if len(sp.factors) != 1:
        return OUTER
    f = sp.factors[0]
    if f.d != 1 or f.builtin == AT_MOST_ONE_ONE:
        return OUTER
    if not f.forbidden:
        return EXACT
    length = 0 if f.is_empty_window(window[0]) else window[0][1] - window[0][0] + 1
    longest = max(len(p) for p in f.forbidden)
    return EXACT if length >= longest else OUTER


@lru_cache(maxsize=256)
def _polytope(action, window) -> MeasurePolytope:
    sp = space_for(action)
    n = len(sp.atoms(window))
    rows = []
    seen = set()
    for g in generators(sp.schema):
        sub = sp.overlap_window(window, g)
        ginv = sp.schema.inverse(g)
        for j in range(len(sp.atoms(sub))):
            atom = Region(sp, sub, 1 << j)
            lhs = atom.at(window)
            rhs = atom.translate(ginv).at(window)
            if lhs == rhs:
                continue
            row = [((lhs >> i) & 1) - ((rhs >> i) & 1) for i in range(n)]
            key = tuple(row)
            if key not in seen and tuple(-v for v in row) not in seen:
                seen.add(key)
                rows.append(key)
    rows.append(tuple([1] * n))
    b = tuple([0] * (len(rows) - 1) + [1])
    return MeasurePolytope(action, window, n, tuple(rows), b, _tag(action, sp, window))


def build_polytope(action, depth) -> MeasurePolytope:
    sp = space_for(action)
    return _polytope(action, sp.depth_window(depth))


@lru_cache(maxsize=256)
def _reduced(poly: MeasurePolytope):
    return merge_equal_variables(poly.n_vars, poly.A_eq, poly.b_eq)


@lru_cache(maxsize=4096)
def _solve_reduced(poly: MeasurePolytope, objective: tuple, maximize: bool):
    red = _reduced(poly)
    return solve_lp(list(objective), red.A_eq, red.b_eq, maximize=maximize)


def optimise(poly: MeasurePolytope, c, maximize=True):
    """Exact optimum of ``c.x`` over the polytope, with the full vertex."""
    red = _reduced(poly)
    res = _solve_reduced(poly, red.objective(c), maximize)
    x = red.expand(res.x) if res.status == OPTIMAL else None
    return res, x


# --------------------------------------------------------------------------
# reports


@dataclass
class StateReport:
    status: str  # "optimal" or "infeasible"
    value: Fraction | None
    vertex: list[Fraction] | None
    window: tuple
    tag: str
    verdict: str = ""
    certificate_ok: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self, with_vertex=False) -> dict:
        d = {"status": self.status, "value": None if self.value is None else frac_str(self.value),
             "window": repr(self.window), "tag": self.tag, "verdict": self.verdict,
             "certificate_ok": self.certificate_ok}
        if with_vertex and self.vertex is not None:
            d["vertex"] = [frac_str(v) for v in self.vertex]
        d.update(self.extra)
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), sort_keys=True)


def _common_window(sp, regions, depth):
    """A window covering ``depth`` and all regions, after moving shift regions to the origin."""
    w = sp.depth_window(depth)
    regions = [r.canonical() for r in regions]
    hull = sp.empty_window
    for r in regions:
        hull = sp.hull(hull, r.window)
    shift = None
    for i, f in enumerate(sp.factors):
        if isinstance(f, _ShiftFactor) and not f.is_empty_window(hull[i]):
            lo = hull[i][0]
            shift = tuple(-x for x in (lo if f.d == 2 else (lo,)))
    if shift is not None:
        # the (diagonal) action lets the shift coordinates start at the origin
        regions = [r.translate(shift) for r in regions]
        hull = sp.empty_window
        for r in regions:
            hull = sp.hull(hull, r.canonical().window)
    return sp.hull(w, hull), regions


def _verify(res, poly, x) -> bool:
    return res.verify() and x is not None and poly.contains_point(x)


def comparison_gap(action, A: C.ClopenExpr, B: C.ClopenExpr, depth) -> StateReport:
    """Exact ``max mu(A) - mu(B)`` over the polytope."""
    sp = space_for(action)
    window, (ra, rb) = _common_window(sp, [sp.evaluate(A), sp.evaluate(B)], depth)
    poly = _polytope(action, window)
    c = [a - b for a, b in zip(poly.indicator(ra), poly.indicator(rb))]
    res, x = optimise(poly, c, maximize=True)
    if res.status != OPTIMAL:
        raise InvariantViolation(f"measure polytope is {res.status} at window {window}")
    value = res.value
    if value < 0:
        verdict = "comparison-premise-certified"
    elif poly.tag == EXACT:
        verdict = "premise-fails"
    else:
        verdict = "inconclusive"
    return StateReport(res.status, value, x, window, poly.tag, verdict, _verify(res, poly, x))


def unique_ergodicity_gap(action, A: C.ClopenExpr, depth) -> tuple[Fraction, Fraction, str]:
    sp = space_for(action)
    window, (ra,) = _common_window(sp, [sp.evaluate(A)], depth)
    poly = _polytope(action, window)
    c = poly.indicator(ra)
    lo, _ = optimise(poly, c, maximize=False)
    hi, _ = optimise(poly, c, maximize=True)
    return lo.value, hi.value, poly.tag


def uniquely_ergodic_up_to(action, A: C.ClopenExpr, depth_cap: int) -> dict:
    """Report ``[min, max]`` of ``mu(A)`` at every depth up to the cap."""
    rows = []
    for d in range(1, depth_cap + 1):
        lo, hi, tag = unique_ergodicity_gap(action, A, d)
        rows.append({"depth": d, "min": frac_str(lo), "max": frac_str(hi), "tag": tag})
    flag = all(r["min"] == r["max"] and r["tag"] == EXACT for r in rows)
    return {"intervals": rows, "uniquely-ergodic-up-to-depth": depth_cap if flag else None}


# --------------------------------------------------------------------------
# order units


@dataclass(frozen=True)
class CoveringCertificate:
    words: tuple[GroupWord, ...]

    def to_dict(self):
        return {"verdict": "order-unit", "covering": [str(w) for w in self.words]}


@dataclass(frozen=True)
class ZeroMeasureState:
    """An invariant measure giving ``B`` mass zero."""

    kind: str  # "lp-vertex" (EXACT polytope) or "periodic-orbit"
    window: tuple | None = None
    vertex: tuple | None = None
    orbit: str | None = None  # period word of the shift coordinate

    def to_dict(self):
        d = {"verdict": "not-an-order-unit", "kind": self.kind}
        if self.vertex is not None:
            d["vertex"] = [frac_str(v) for v in self.vertex]
            d["window"] = repr(self.window)
        if self.orbit is not None:
            d["orbit"] = self.orbit
        return d


@dataclass(frozen=True)
class OrderUnitExhausted:
    budget: dict

    def __bool__(self):
        return False

    def to_dict(self):
        return {"verdict": "unknown", "budget": self.budget}


def verify_covering(action, B: C.ClopenExpr, cert: CoveringCertificate) -> bool:
    images = [apply_word(action, w, B) for w in cert.words]
    return is_empty(action, C.Complement(C.union(*images)) if images else C.FULL)


def _periodic_words(f: _ShiftFactor, max_period: int):
    """Cyclic words whose periodic configuration lies in the 1-d subshift."""
    from itertools import product as iproduct

    for p in range(1, max_period + 1):
        for u in iproduct(range(f.k), repeat=p):
            if f.builtin == AT_MOST_ONE_ONE:
                if any(u):
                    continue
            elif f.forbidden:
                longest = max(len(x) for x in f.forbidden)
                reps = -(-longest // p) + 1
                if not f._locally_ok_1d(u * (reps + 1)):
                    continue
            yield u


def _periodic_zero_state(sp, region: Region, max_period: int) -> ZeroMeasureState | None:
    """Periodic orbit on the shift factor times uniform measures elsewhere."""
    idx = [i for i, f in enumerate(sp.factors) if isinstance(f, _ShiftFactor)]
    if len(idx) != 1 or sp.factors[idx[0]].d != 1:
        return None
    si = idx[0]
    f = sp.factors[si]
    w = region.canonical().window
    sw = w[si]
    atoms = sp.atoms(w)
    shift_parts = {atoms[i][si] for i in region.canonical().atom_indices()}
    for u in _periodic_words(f, max_period):
        p = len(u)
        if f.is_empty_window(sw):
            return None if shift_parts else ZeroMeasureState("periodic-orbit", orbit="".join(SYMBOLS[s] for s in u))
        length = sw[1] - sw[0] + 1
        pats = {tuple(u[(sw[0] + s + t) % p] for t in range(length)) for s in range(p)}
        if not pats & shift_parts:
            return ZeroMeasureState("periodic-orbit", orbit="".join(SYMBOLS[s] for s in u))
    return None


def order_unit_test(action, B: C.ClopenExpr, budget: SearchBudget | None = None, max_period: int = 6):
    budget = budget or SearchBudget()
    sp = space_for(action)
    rb = sp.evaluate(B)
    if rb.is_empty():
        raise ValueError("B must be nonempty")
    # covering by translates
    cover, chosen = sp.empty(), []
    for word in sp.schema.ball_words(budget.max_word_length):
        img = rb.translate(sp.element(word))
        if not img.issubset(cover):
            cover = cover | img
            chosen.append(word)
            if cover.is_full():
                return CoveringCertificate(tuple(chosen))
    # a measure vanishing on B
    for d in range(0, budget.max_depth + 1):
        window, (r,) = _common_window(sp, [rb], d)
        try:
            poly = _polytope(action, window)
        except Exception:
            break
        if poly.tag == EXACT:
            res, x = optimise(poly, poly.indicator(r), maximize=False)
            if res.status == OPTIMAL and res.value == 0:
                return ZeroMeasureState("lp-vertex", window, tuple(x))
            if res.status == OPTIMAL:
                break  # every invariant measure charges B at this exact resolution
    z = _periodic_zero_state(sp, rb, max_period)
    if z is not None:
        return z
    return OrderUnitExhausted(budget.to_dict())


def verify_zero_state(action, B: C.ClopenExpr, z: ZeroMeasureState) -> bool:
    sp = space_for(action)
    rb = sp.evaluate(B)
    if z.kind == "lp-vertex":
        poly = _polytope(action, z.window)
        if poly.tag != EXACT or not poly.contains_point(z.vertex):
            return False
        return sum(v for v, b in zip(z.vertex, poly.indicator(rb)) if b) == 0
    # periodic orbit: recompute the patterns it shows on B's window
    si = next(i for i, f in enumerate(sp.factors) if isinstance(f, _ShiftFactor))
    f = sp.factors[si]
    u = tuple(SYMBOLS.index(s) for s in z.orbit)
    if u not in set(_periodic_words(f, len(u))):
        return False
    c = rb.canonical()
    sw = c.window[si]
    if f.is_empty_window(sw):
        return c.is_empty()
    length = sw[1] - sw[0] + 1
    pats = {tuple(u[(sw[0] + s + t) % len(u)] for t in range(length)) for s in range(len(u))}
    atoms = sp.atoms(c.window)
    return not any(atoms[i][si] in pats for i in c.atom_indices())


# --------------------------------------------------------------------------
# normalised states and paradoxes


def normalised_state(action, b: C.TypeExpr, depth):
    """LP feasibility of an invariant (unnormalised) measure with ``mu(b) = 1``."""
    sp = space_for(action)
    regions = [sp.evaluate(e) for e in b.clopens()]
    window, regions = _common_window(sp, regions, depth)
    poly = _polytope(action, window)
    weight = [0] * poly.n_vars
    for r in regions:
        for i, v in enumerate(poly.indicator(r)):
            weight[i] += v
    rows, rhs = poly.invariance_rows
    res = solve_lp([0] * poly.n_vars, list(rows) + [weight], list(rhs) + [1], maximize=True)
    return res, poly


@dataclass(frozen=True)
class ParadoxWitness:
    n: int
    witness: EquidecompositionWitness

    def to_dict(self):
        return {"verdict": "paradox", "n": self.n, "witness": self.witness.to_dict()}


@dataclass(frozen=True)
class NoneFound:
    budget: dict
    max_n: int
    normalised_state: str  # "feasible-EXACT", "feasible-OUTER", "infeasible", "not-checked"

    def __bool__(self):
        return False

    def to_dict(self):
        return {"verdict": "none-found", "max_n": self.max_n, "budget": self.budget,
                "normalised_state": self.normalised_state}


def paradox_search(action, b: C.TypeExpr, max_n: int = 3, budget: SearchBudget | None = None,
                   depth=None):
    """Look for ``(n + 1) b <= n b``; cross-checks against normalised states."""
    budget = budget or SearchBudget()
    if b.is_zero():
        raise ValueError("b must be nonzero")
    depth = budget.max_depth if depth is None else depth
    res, poly = normalised_state(action, b, depth)
    state = "infeasible" if res.status == INFEASIBLE else f"feasible-{poly.tag}"
    for n in range(1, max_n + 1):
        w = type_leq(action, (n + 1) * b, n * b, budget)
        if w:
            if state == f"feasible-{EXACT}":
                raise InvariantViolation(
                    f"paradox (n={n}) found while an exact state normalised at b exists")
            return ParadoxWitness(n, w)
    return NoneFound(budget.to_dict(), max_n, state)
