"""Finitely presented commutative monoids and finite-resolution type monoids.

The word problem is handled by bounded congruence exploration: starting
from a vector, every relation is applied in both directions while the
total degree stays within a cap.  A class is *closed* when no member has a
move beyond the cap; a closed class is the full congruence class, which is
what makes negative answers exact.  Every decided query is returned as a
:class:`Fact` whose certificate (a rewrite chain, or a closed class) is
re-checked by :func:`verify_fact` without reusing search state.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product as iproduct

from .actions import FiniteAction, GroupWord
from .partition_engine import Refusal, invariant_partition, level_partition
from .snf import AbelianGroup, quotient_group

Vec = tuple[int, ...]

PROPERTIES = (
    "almost-unperforated",
    "cancellative",
    "conical",
    "directly-finite",
    "order-unit",
    "refinement",
    "simple",
    "stably-finite",
    "unperforated",
    "unperforated-eq",
    "weak-comparability",
)

HOLDS = "holds-within-bound"
FAILS = "fails"
UNKNOWN = "unknown"


# --------------------------------------------------------------------------
# vectors


def add(a: Vec, b: Vec) -> Vec:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: Vec, b: Vec) -> Vec:
    return tuple(x - y for x, y in zip(a, b))


def scale(n: int, a: Vec) -> Vec:
    return tuple(n * x for x in a)


def geq(a: Vec, b: Vec) -> bool:
    return all(x >= y for x, y in zip(a, b))


def deg(a: Vec) -> int:
    return sum(a)


def unit_vector(g: int, i: int) -> Vec:
    return tuple(int(j == i) for j in range(g))


def zero(g: int) -> Vec:
    return (0,) * g


def vectors(g: int, max_degree: int, min_degree: int = 0) -> list[Vec]:
    """All vectors of ``N^g`` with degree in range, by degree then lexicographically."""
    out = []

    def rec(prefix, left, slots):
        if slots == 1:
            out.append(prefix + (left,))
            return
        for v in range(left, -1, -1):
            rec(prefix + (v,), left - v, slots - 1)

    for d in range(min_degree, max_degree + 1):
        if g == 0:
            if d == 0:
                out.append(())
            continue
        layer_start = len(out)
        rec((), d, g)
        out[layer_start:] = sorted(out[layer_start:], reverse=True)
    return out


def below(a: Vec) -> list[Vec]:
    """All vectors ``x <= a`` coordinatewise."""
    return [tuple(v) for v in iproduct(*[range(x + 1) for x in a])]


# --------------------------------------------------------------------------
# presentations


@dataclass(frozen=True)
class MonoidPresentation:
    gens: int
    relations: tuple[tuple[Vec, Vec], ...] = ()
    unit: Vec | None = None

    def __post_init__(self):
        if self.gens < 0:
            raise ValueError("generator count must be >= 0")
        canon = set()
        for l, r in self.relations:
            l, r = tuple(int(x) for x in l), tuple(int(x) for x in r)
            if len(l) != self.gens or len(r) != self.gens or min(l + r, default=0) < 0:
                raise ValueError(f"relation {l} = {r} does not live in N^{self.gens}")
            if l != r:
                canon.add((max(l, r), min(l, r)))
        object.__setattr__(self, "relations", tuple(sorted(canon)))
        if self.unit is not None:
            u = tuple(int(x) for x in self.unit)
            if len(u) != self.gens or min(u, default=0) < 0:
                raise ValueError("unit must be a vector of N^gens")
            object.__setattr__(self, "unit", u)

    @classmethod
    def free(cls, g: int, unit: Vec | None = None) -> MonoidPresentation:
        return cls(g, (), unit)

    @property
    def max_relation_degree(self) -> int:
        return max((max(deg(l), deg(r)) for l, r in self.relations), default=0)

    def moves(self, v: Vec):
        """Yield ``(relation index, direction, result)`` for every rewrite of ``v``."""
        for k, (l, r) in enumerate(self.relations):
            if geq(v, l):
                yield k, 1, add(sub(v, l), r)
            if geq(v, r):
                yield k, -1, add(sub(v, r), l)

    def to_text(self) -> str:
        lines = [f"gens: {self.gens}"]
        for l, r in self.relations:
            lines.append("rel: " + " ".join(map(str, l)) + " = " + " ".join(map(str, r)))
        if self.unit is not None:
            lines.append("unit: " + " ".join(map(str, self.unit)))
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> MonoidPresentation:
        gens, rels, unit = None, [], None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition(":")
            if not sep:
                raise ValueError(f"line {lineno}: expected 'key: value'")
            key = key.strip()
            if key == "gens":
                gens = int(value)
            elif key == "rel":
                rels.append(parse_relation(value))
            elif key == "unit":
                unit = tuple(int(x) for x in value.split())
            else:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
        if gens is None:
            raise ValueError("presentation needs a 'gens:' line")
        return cls(gens, tuple(rels), unit)


def parse_relation(text: str) -> tuple[Vec, Vec]:
    left, sep, right = text.partition("=")
    if not sep:
        raise ValueError(f"relation {text!r} needs '='")
    return tuple(int(x) for x in left.split()), tuple(int(x) for x in right.split())


def simplify(p: MonoidPresentation) -> tuple[MonoidPresentation, tuple[int, ...]]:
    """Identify generators related by ``e_i = e_j``; returns the map old -> new index."""
    parent = list(range(p.gens))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for l, r in p.relations:
        if deg(l) == 1 and deg(r) == 1:
            a, b = find(l.index(1)), find(r.index(1))
            if a != b:
                parent[max(a, b)] = min(a, b)
    roots = sorted({find(i) for i in range(p.gens)})
    idx = {r: k for k, r in enumerate(roots)}
    gmap = tuple(idx[find(i)] for i in range(p.gens))

    def push(v):
        out = [0] * len(roots)
        for i, x in enumerate(v):
            out[gmap[i]] += x
        return tuple(out)

    rels = tuple((push(l), push(r)) for l, r in p.relations)
    unit = push(p.unit) if p.unit is not None else None
    return MonoidPresentation(len(roots), rels, unit), gmap


# --------------------------------------------------------------------------
# bounded congruence exploration


@dataclass(frozen=True)
class ClassExploration:
    start: Vec
    members: dict  # vector -> (parent vector, relation index, direction) or None
    closed: bool

    def chain_to(self, target: Vec) -> list[tuple[Vec, int, int, Vec]]:
        steps = []
        v = target
        while self.members[v] is not None:
            parent, k, d = self.members[v]
            steps.append((parent, k, d, v))
            v = parent
        return steps[::-1]


@lru_cache(maxsize=200_000)
def explore_class(p: MonoidPresentation, v: Vec, cap: int) -> ClassExploration:
    """Breadth-first congruence class of ``v`` among vectors of degree <= ``cap``."""
    cap = max(cap, deg(v))
    members = {v: None}
    closed = True
    queue = deque([v])
    while queue:
        u = queue.popleft()
        for k, d, w in p.moves(u):
            if deg(w) > cap:
                closed = False
                continue
            if w not in members:
                members[w] = (u, k, d)
                queue.append(w)
    return ClassExploration(v, members, closed)


@dataclass(frozen=True)
class Fact:
    """A decided query ``a <= b`` or ``a = b`` with its certificate."""

    kind: str  # "leq" or "eq"
    a: Vec
    b: Vec
    value: bool | None
    chain: tuple = ()  # rewrite steps (from, relation index, direction, to)
    cls: tuple = ()  # a closed class (for negative answers)
    side: str = ""  # which element the closed class contains: "a" or "b"

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "a": list(self.a), "b": list(self.b), "value": self.value}
        if self.chain:
            d["chain"] = [[list(s), k, di, list(t)] for s, k, di, t in self.chain]
        if self.cls:
            d["class"] = [list(v) for v in self.cls]
            d["side"] = self.side
        return d


def leq(p: MonoidPresentation, a: Vec, b: Vec, cap: int) -> Fact:
    """``a <= b``: some member of the class of ``b`` dominates ``a``."""
    ex = explore_class(p, b, cap)
    for m in ex.members:
        if geq(m, a):
            return Fact("leq", a, b, True, chain=tuple(ex.chain_to(m)))
    if ex.closed:
        return Fact("leq", a, b, False, cls=tuple(sorted(ex.members)), side="b")
    return Fact("leq", a, b, None)


def eq(p: MonoidPresentation, a: Vec, b: Vec, cap: int) -> Fact:
    if a == b:
        return Fact("eq", a, b, True)
    ex = explore_class(p, a, cap)
    if b in ex.members:
        return Fact("eq", a, b, True, chain=tuple(ex.chain_to(b)))
    if ex.closed:
        return Fact("eq", a, b, False, cls=tuple(sorted(ex.members)), side="a")
    ey = explore_class(p, b, cap)
    if ey.closed:
        return Fact("eq", a, b, False, cls=tuple(sorted(ey.members)), side="b")
    return Fact("eq", a, b, None)


def _apply(p, v, k, d):
    l, r = p.relations[k]
    src, dst = (l, r) if d == 1 else (r, l)
    if not geq(v, src):
        return None
    return add(sub(v, src), dst)


def _chain_ok(p, start, chain) -> Vec | None:
    v = start
    for s, k, d, t in chain:
        s, t = tuple(s), tuple(t)
        if s != v or not 0 <= k < len(p.relations) or _apply(p, v, k, d) != t:
            return None
        v = t
    return v


def _closed_ok(p, cls) -> bool:
    members = {tuple(v) for v in cls}
    for v in members:
        for _, _, w in p.moves(v):
            if w not in members:
                return False
    return True


def verify_fact(p: MonoidPresentation, fact: Fact) -> bool:
    """Independent re-check of a decided query."""
    if fact.value is None:
        return False
    if fact.kind == "leq":
        if fact.value:
            end = _chain_ok(p, fact.b, fact.chain)
            return end is not None and geq(end, fact.a)
        return fact.b in set(fact.cls) and _closed_ok(p, fact.cls) and \
            not any(geq(v, fact.a) for v in fact.cls)
    if fact.kind == "eq":
        if fact.value:
            return _chain_ok(p, fact.a, fact.chain) == fact.b
        inside, outside = (fact.a, fact.b) if fact.side == "a" else (fact.b, fact.a)
        return inside in set(fact.cls) and outside not in set(fact.cls) and _closed_ok(p, fact.cls)
    return False


class CongruenceTable:
    """Components of the bounded rewriting graph on all vectors of degree <= cap."""

    def __init__(self, p: MonoidPresentation, cap: int):
        self.p, self.cap = p, cap
        self.vectors = vectors(p.gens, cap)
        index = {v: i for i, v in enumerate(self.vectors)}
        parent = list(range(len(self.vectors)))
        open_ = [False] * len(self.vectors)

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, v in enumerate(self.vectors):
            for _, _, w in p.moves(v):
                j = index.get(w)
                if j is None:
                    open_[i] = True
                else:
                    a, b = find(i), find(j)
                    if a != b:
                        parent[max(a, b)] = min(a, b)
        self.comp = {v: find(i) for i, v in enumerate(self.vectors)}
        self.closed = {}
        self.members: dict[int, list[Vec]] = {}
        for i, v in enumerate(self.vectors):
            c = self.comp[v]
            self.members.setdefault(c, []).append(v)
            self.closed[c] = self.closed.get(c, True) and not open_[i]

    def same(self, a: Vec, b: Vec) -> bool | None:
        ca, cb = self.comp[a], self.comp[b]
        if ca == cb:
            return True
        if self.closed[ca] or self.closed[cb]:
            return False
        return None


# --------------------------------------------------------------------------
# faces ({0, inf}-valued homomorphisms)


def face_closure(p: MonoidPresentation, support) -> frozenset[int]:
    """Smallest generator set ``F`` containing ``support`` with
    ``supp(l) <= F  <=>  supp(r) <= F`` for every relation."""
    F = set(support)
    changed = True
    while changed:
        changed = False
        for l, r in p.relations:
            sl = {i for i, x in enumerate(l) if x}
            sr = {i for i, x in enumerate(r) if x}
            if sl <= F and not sr <= F:
                F |= sr
                changed = True
            elif sr <= F and not sl <= F:
                F |= sl
                changed = True
    return frozenset(F)


def verify_face(p: MonoidPresentation, F) -> bool:
    F = set(F)
    for l, r in p.relations:
        sl = {i for i, x in enumerate(l) if x}
        sr = {i for i, x in enumerate(r) if x}
        if (sl <= F) != (sr <= F):
            return False
    return True


def support(v: Vec) -> frozenset[int]:
    return frozenset(i for i, x in enumerate(v) if x)


# --------------------------------------------------------------------------
# verdicts


@dataclass
class PropertyVerdict:
    property: str
    verdict: str
    bound: int
    certificate: dict = field(default_factory=dict)
    examined: int = 0
    undecided: int = 0
    note: str = ""

    def to_dict(self) -> dict:
        return {"property": self.property, "verdict": self.verdict, "bound": self.bound,
                "certificate": _jsonable(self.certificate), "examined": self.examined,
                "undecided": self.undecided, "note": self.note}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _jsonable(x):
    if isinstance(x, Fact):
        return x.to_dict()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, frozenset):
        return sorted(x)
    return x


class _Tally:
    def __init__(self):
        self.examined = 0
        self.undecided = 0


def _finish(name, bound, tally, note="") -> PropertyVerdict:
    verdict = UNKNOWN if tally.undecided else HOLDS
    return PropertyVerdict(name, verdict, bound, {}, tally.examined, tally.undecided, note)


def _fail(name, bound, tally, params, facts, note="") -> PropertyVerdict:
    return PropertyVerdict(name, FAILS, bound, {"params": params, "facts": list(facts)},
                           tally.examined, tally.undecided, note)


def _implication(name, bound, tally, params, premise, conclusion):
    """Shared shape for ``premise => conclusion``; returns a failing verdict or None."""
    tally.examined += 1
    if conclusion().value is True:
        return None
    prem = premise()
    if prem.value is False:
        return None
    concl = conclusion()
    if prem.value is True and concl.value is False:
        return _fail(name, bound, tally, params, [prem, concl])
    tally.undecided += 1
    return None


def check_property(p: MonoidPresentation, prop: str, bound: int, x: Vec | None = None,
                   unit: Vec | None = None) -> PropertyVerdict:
    """Bounded search for a counterexample to ``prop``.

    Quantified elements range over vectors of degree <= ``bound``, and all
    vectors formed from them (``n x``, ``x + y`` ...) also stay within
    ``bound``; congruence classes are explored up to degree ``bound`` plus
    the largest relation degree.
    """
    if bound <= 0:
        raise ValueError("bound must be positive")
    if prop not in PROPERTIES:
        raise ValueError(f"unknown property {prop!r}; choose from {', '.join(PROPERTIES)}")
    unit = unit if unit is not None else p.unit
    g = p.gens
    cap = bound + p.max_relation_degree
    O = zero(g)
    t = _Tally()
    vs = vectors(g, bound)

    if prop in ("unperforated", "almost-unperforated", "unperforated-eq"):
        n_from = 1 if prop == "almost-unperforated" else 2
        for n in range(n_from, bound + 1):
            m = n + 1 if prop == "almost-unperforated" else n
            for a in vs:
                if m * deg(a) > bound:
                    continue
                for b in vs:
                    if n * deg(b) > bound or a == b:
                        continue
                    if prop == "unperforated-eq":
                        res = _implication(prop, bound, t, {"n": n, "x": a, "y": b},
                                           lambda: eq(p, scale(n, a), scale(n, b), cap),
                                           lambda: eq(p, a, b, cap))
                    else:
                        res = _implication(prop, bound, t, {"n": n, "x": a, "y": b},
                                           lambda: leq(p, scale(m, a), scale(n, b), cap),
                                           lambda: leq(p, a, b, cap))
                    if res:
                        return res
        return _finish(prop, bound, t)

    if prop == "cancellative":
        table = CongruenceTable(p, bound)
        for c, members in table.members.items():
            if not table.closed[c]:
                t.undecided += 1
            for m1, m2 in combinations(members, 2):
                for a in below(tuple(min(u, v) for u, v in zip(m1, m2))):
                    y, z = sub(m1, a), sub(m2, a)
                    t.examined += 1
                    concl = eq(p, y, z, cap)
                    if concl.value is False:
                        prem = eq(p, m1, m2, cap)
                        return _fail(prop, bound, t, {"x": a, "y": y, "z": z}, [prem, concl])
                    if concl.value is None:
                        t.undecided += 1
        return _finish(prop, bound, t)

    if prop in ("directly-finite", "stably-finite"):
        if prop == "directly-finite":
            if x is None:
                raise ValueError("directly-finite needs an element x")
            candidates = [tuple(x)]
        else:
            candidates = vs
        for a in candidates:
            ex = explore_class(p, a, cap)
            if not ex.closed:
                t.undecided += 1
            for m in ex.members:
                if m == a or not geq(m, a):
                    continue
                y = sub(m, a)
                t.examined += 1
                nz = eq(p, y, O, cap)
                if nz.value is False:
                    prem = eq(p, add(y, a), a, cap)
                    return _fail(prop, bound, t, {"x": a, "y": y}, [prem, nz])
                if nz.value is None:
                    t.undecided += 1
        return _finish(prop, bound, t)

    if prop == "conical":
        ex = explore_class(p, O, cap)
        if not ex.closed:
            t.undecided += 1
        for m in ex.members:
            if m == O:
                continue
            for u in below(m):
                if u == O:
                    continue
                t.examined += 1
                nz = eq(p, u, O, cap)
                if nz.value is False:
                    prem = eq(p, m, O, cap)
                    return _fail(prop, bound, t, {"u": u, "v": sub(m, u)}, [prem, nz])
                if nz.value is None:
                    t.undecided += 1
        return _finish(prop, bound, t)

    if prop == "order-unit":
        if x is None:
            raise ValueError("order-unit needs an element x")
        x = tuple(x)
        F = face_closure(p, support(x))
        t.examined += 1
        if len(F) < g:
            y = unit_vector(g, min(set(range(g)) - F))
            return _fail(prop, bound, t, {"x": x, "y": y, "face": sorted(F)}, [],
                         "y <= n x fails for every n: a {0, inf}-valued state vanishes on x only")
        return PropertyVerdict(prop, HOLDS, bound, {"face": sorted(F)}, 1, 0,
                               "every generator lies in the face generated by x")

    if prop == "simple":
        if unit is None:
            raise ValueError("simple needs a designated order unit")
        for i in range(g):
            e = unit_vector(g, i)
            t.examined += 1
            F = face_closure(p, {i})
            if len(F) == g:
                continue
            nz = eq(p, e, O, cap)
            if nz.value is False:
                j = min(set(range(g)) - F)
                return _fail(prop, bound, t, {"a": e, "y": unit_vector(g, j), "face": sorted(F)}, [nz],
                             "a nonzero generator that is not an order unit")
            if nz.value is None:
                t.undecided += 1
        return _finish(prop, bound, t)

    if prop == "weak-comparability":
        if unit is None:
            raise ValueError("weak-comparability needs a designated order unit")
        unit = tuple(unit)
        simple = check_property(p, "simple", bound, unit=unit)
        if simple.verdict != HOLDS:
            return PropertyVerdict(prop, UNKNOWN, bound, {"simple": simple.to_dict()}, 0, 1,
                                   "the property is defined for simple monoids only")
        for a in vs:
            if a == O or eq(p, a, O, cap).value is not False:
                continue
            good_k = None
            for k in range(1, bound + 1):
                ok, undecided = True, False
                for b in vs:
                    if b == O or k * deg(b) > cap:
                        continue
                    t.examined += 1
                    concl = leq(p, b, a, cap)
                    if concl.value is True:
                        continue
                    prem = leq(p, scale(k, b), unit, cap)
                    if prem.value is False:
                        continue
                    if prem.value is True and concl.value is False:
                        ok = False
                        break
                    undecided = True
                if ok and not undecided:
                    good_k = k
                    break
            if good_k is None:
                t.undecided += 1
        return _finish(prop, bound, t, "k searched up to the bound")

    if prop == "refinement":
        top = min(bound, 3)
        small = vectors(g, top)
        for a1, a2 in combinations(small, 2):
            s = add(a1, a2)
            ex = explore_class(p, s, cap)
            splits = set()
            for m in ex.members:
                for b1 in below(m):
                    b2 = sub(m, b1)
                    if deg(b1) <= top and deg(b2) <= top:
                        splits.add((min(b1, b2), max(b1, b2)))
            for b1, b2 in sorted(splits):
                t.examined += 1
                found = _refine(p, (a1, a2), (b1, b2), cap)
                if found is None:
                    t.undecided += 1
                elif found is False:
                    return _fail(prop, bound, t, {"a": [a1, a2], "b": [b1, b2]},
                                 [eq(p, s, add(b1, b2), cap)],
                                 "all involved classes are closed and no refinement matrix exists")
        return _finish(prop, bound, t, "2x2 refinements, summands of degree <= 3")

    raise AssertionError(prop)


def _refine(p, a, b, cap):
    """Search ``c_ij`` with ``a_i = c_i1 + c_i2`` and ``b_j = c_1j + c_2j``.

    Returns the matrix, ``False`` if provably none exists, ``None`` if unknown.
    """
    exs = [explore_class(p, v, cap) for v in (*a, *b)]
    definite = all(e.closed for e in exs)
    ea1, ea2, eb1, eb2 = exs
    for m1 in ea1.members:
        for c11 in below(m1):
            c12 = sub(m1, c11)
            for n1 in eb1.members:
                if not geq(n1, c11):
                    continue
                c21 = sub(n1, c11)
                for m2 in ea2.members:
                    if not geq(m2, c21):
                        continue
                    c22 = sub(m2, c21)
                    if add(c12, c22) in eb2.members:
                        return ((c11, c12), (c21, c22))
    return False if definite else None


def verify_verdict(p: MonoidPresentation, v: PropertyVerdict) -> bool:
    """Re-check a failing verdict from its parameters and facts alone."""
    if v.verdict != FAILS:
        return True
    prm = v.certificate["params"]
    facts = v.certificate["facts"]
    g = p.gens
    O = zero(g)

    def expect(*shape):
        if len(facts) != len(shape):
            return False
        for f, (kind, a, b, val) in zip(facts, shape):
            if (f.kind, f.value) != (kind, val) or {f.a, f.b} != {tuple(a), tuple(b)}:
                return False
            if not verify_fact(p, f):
                return False
        return True

    name = v.property
    if name in ("unperforated", "almost-unperforated"):
        n, x, y = prm["n"], prm["x"], prm["y"]
        m = n + 1 if name == "almost-unperforated" else n
        return expect(("leq", scale(m, x), scale(n, y), True), ("leq", x, y, False))
    if name == "unperforated-eq":
        n, x, y = prm["n"], prm["x"], prm["y"]
        return expect(("eq", scale(n, x), scale(n, y), True), ("eq", x, y, False))
    if name == "cancellative":
        x, y, z = prm["x"], prm["y"], prm["z"]
        return expect(("eq", add(x, y), add(x, z), True), ("eq", y, z, False))
    if name in ("directly-finite", "stably-finite"):
        x, y = prm["x"], prm["y"]
        return expect(("eq", add(y, x), x, True), ("eq", y, O, False))
    if name == "conical":
        u, w = prm["u"], prm["v"]
        return expect(("eq", add(u, w), O, True), ("eq", u, O, False))
    if name == "order-unit":
        F = set(prm["face"])
        return verify_face(p, F) and support(tuple(prm["x"])) <= F and \
            not support(tuple(prm["y"])) <= F and deg(prm["y"]) > 0
    if name == "simple":
        F = set(prm["face"])
        return verify_face(p, F) and support(tuple(prm["a"])) <= F and \
            not support(tuple(prm["y"])) <= F and expect(("eq", prm["a"], O, False))
    if name == "refinement":
        a1, a2 = map(tuple, prm["a"])
        b1, b2 = map(tuple, prm["b"])
        if not expect(("eq", add(a1, a2), add(b1, b2), True)):
            return False
        cap = max(deg(add(a1, a2)), 3) + p.max_relation_degree + 3
        return _refine(p, (a1, a2), (b1, b2), 10 ** 6) is False or \
            _refine(p, (a1, a2), (b1, b2), cap) is False
    return False


def monoid_leq(p: MonoidPresentation, a: Vec, b: Vec, bound: int) -> Fact:
    """``a <= b`` decided by congruence exploration up to degree ``bound``."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    return leq(p, tuple(a), tuple(b), bound)


# --------------------------------------------------------------------------
# quotients and groups


@dataclass(frozen=True)
class Quotient:
    presentation: MonoidPresentation  # V_b on the generators of U_b
    generators: tuple[int, ...]  # original indices kept
    collapsed: tuple[tuple[Vec, Vec], ...]  # detected u <= v <= u pairs (new coordinates)
    exhausted: bool  # some pair could not be decided within the bound


def antisymmetric_quotient(p: MonoidPresentation, b: Vec, bound: int) -> Quotient:
    """Restrict to elements below multiples of ``b`` and identify ``u <= v <= u`` pairs."""
    b = tuple(b)
    if not any(b):
        raise ValueError("b must be nonzero")
    keep = sorted(face_closure(p, support(b)))
    pos = {i: k for k, i in enumerate(keep)}

    def restrict(v):
        return tuple(v[i] for i in keep)

    rels = [(restrict(l), restrict(r)) for l, r in p.relations
            if support(l) <= set(keep) and support(r) <= set(keep)]
    q = MonoidPresentation(len(keep), tuple(rels))
    cap = bound + q.max_relation_degree
    collapsed, exhausted = [], False
    vs = [v for v in vectors(len(keep), bound) if any(v)]
    for u, v in combinations(vs, 2):
        f1, f2 = leq(q, u, v, cap), leq(q, v, u, cap)
        if f1.value and f2.value:
            collapsed.append((u, v))
        elif f1.value is None or f2.value is None:
            exhausted = True
    out = MonoidPresentation(len(keep), tuple(rels) + tuple(collapsed))
    del pos
    return Quotient(out, tuple(keep), tuple(collapsed), exhausted)


@dataclass(frozen=True)
class GrothendieckReport:
    group: AbelianGroup
    injective: bool | None  # on classes of degree <= bound
    witness: tuple | None  # (y, z, Fact y != z) with equal images

    def to_dict(self) -> dict:
        d = {"group": self.group.describe(), "rank": self.group.rank,
             "torsion": list(self.group.torsion), "injective_within_bound": self.injective}
        if self.witness:
            y, z, fact = self.witness
            d["non_injective"] = {"y": list(y), "z": list(z), "fact": fact.to_dict()}
        return d


def grothendieck(p: MonoidPresentation, bound: int = 3) -> GrothendieckReport:
    G = quotient_group(p.gens, [sub(l, r) for l, r in p.relations])
    cap = bound + p.max_relation_degree
    undecided = False
    by_image: dict = {}
    for v in vectors(p.gens, bound):
        by_image.setdefault(G.coordinates(v), []).append(v)
    for vs in by_image.values():
        for y, z in combinations(vs, 2):
            f = eq(p, y, z, cap)
            if f.value is False:
                return GrothendieckReport(G, False, (y, z, f))
            if f.value is None:
                undecided = True
    return GrothendieckReport(G, None if undecided else True, None)


def pi_criterion(p: MonoidPresentation, bound: int = 3) -> dict:
    """Injectivity into the Grothendieck group versus cancellativity, at one bound."""
    g = grothendieck(p, bound)
    c = check_property(p, "cancellative", bound)
    cancel = {FAILS: False, HOLDS: True}.get(c.verdict)
    agree = None if g.injective is None or cancel is None else (g.injective == cancel)
    return {"injective": g.injective, "cancellative": cancel, "agree": agree,
            "group": g.group.describe()}


# --------------------------------------------------------------------------
# dynamical inputs


@dataclass(frozen=True)
class CoinvariantsGroup:
    rank: int
    torsion: tuple[int, ...]
    boundary: tuple[tuple[int, ...], ...]

    def describe(self) -> str:
        parts = ["Z"] * self.rank + [f"Z/{t}" for t in self.torsion]
        return " + ".join(parts) if parts else "0"

    def to_dict(self) -> dict:
        return {"rank": self.rank, "torsion": list(self.torsion), "group": self.describe(),
                "boundary_rows": len(self.boundary)}


def _generator_words(schema) -> list[GroupWord]:
    from .states_lp import generators

    return [schema.canonical_word(g) for g in generators(schema)]


def coinvariants(action, depth) -> CoinvariantsGroup | Refusal:
    """``Z^atoms`` modulo ``e_a - e_(g a)`` for the generators, via Smith normal form."""
    from .space_model import space_for

    sp = space_for(action)
    words = _generator_words(sp.schema) or [GroupWord()]
    inv = invariant_partition(action, words, depth)
    if isinstance(inv, Refusal):
        return Refusal("coinvariants need an invariant partition; shift actions only admit "
                       "a sequence of window approximations")
    n = len(inv.partition)
    rows = []
    for w in words:
        perm = inv.permutation(w)
        for a in range(n):
            if perm[a] != a:
                row = [0] * n
                row[a] += 1
                row[perm[a]] -= 1
                rows.append(tuple(row))
    G = quotient_group(n, rows)
    return CoinvariantsGroup(G.rank, G.torsion, tuple(rows))


@dataclass
class TypeMonoidSnapshot:
    action: object
    window: tuple
    word_length: int
    atom_labels: list[str]
    presentation: MonoidPresentation  # on atom generators
    reduced: MonoidPresentation  # generators identified along relations e_a = e_b
    generator_map: tuple[int, ...]
    backend: str  # "exact" or "oracle"

    def element(self, counts) -> Vec:
        out = [0] * self.reduced.gens
        for i, c in enumerate(counts):
            out[self.generator_map[i]] += c
        return tuple(out)

    def equal(self, u, v, bound: int | None = None) -> bool | None:
        a, b = self.element(u), self.element(v)
        cap = (bound or max(deg(a), deg(b))) + self.reduced.max_relation_degree
        return eq(self.reduced, a, b, cap).value


def resolution_type_monoid(action, depth, L: int = 1, budget=None) -> TypeMonoidSnapshot:
    """Atom generators with ``e_a = e_(g a)`` for words of length <= L."""
    from .space_model import space_for

    sp = space_for(action)
    words = sp.schema.ball_words(L)
    part = level_partition(action, depth)
    n = len(part)
    labels = [part.label(i) for i in range(n)]
    unit = (1,) * n
    inv = invariant_partition(action, words, depth)
    rels = []
    if not isinstance(inv, Refusal):
        for w in words:
            perm = inv.permutation(w)
            for a in range(n):
                if perm[a] != a:
                    rels.append((unit_vector(n, a), unit_vector(n, perm[a])))
        backend = "exact"
    else:
        from .equidecomp import SearchBudget, equidecompose

        budget = budget or SearchBudget(L, 1, 20_000, 5.0)
        for a, b in combinations(range(n), 2):
            if equidecompose(action, part.atom_expr(a), part.atom_expr(b), budget):
                rels.append((unit_vector(n, a), unit_vector(n, b)))
        backend = "oracle"
    p = MonoidPresentation(n, tuple(rels), unit)
    reduced, gmap = simplify(p)
    return TypeMonoidSnapshot(action, part.window, L, labels, p, reduced, gmap, backend)


def finite_action_presentation(fa: FiniteAction) -> MonoidPresentation:
    """Point generators with ``e_x = e_(g x)``; the unit is the whole space."""
    m = len(fa.points)
    rels = []
    for row in fa.action_table:
        for x in range(m):
            if row[x] != x:
                rels.append((unit_vector(m, x), unit_vector(m, row[x])))
    return MonoidPresentation(m, tuple(rels), (1,) * m)


@dataclass(frozen=True)
class FiniteTypeSemigroup:
    """Closed form: a type is its vector of per-orbit counts."""

    action: FiniteAction
    orbits: tuple[tuple[int, ...], ...]

    def element(self, counts) -> Vec:
        """Per-orbit counts of a multiset of points (``counts[x]`` copies of point ``x``)."""
        return tuple(sum(counts[x] for x in orb) for orb in self.orbits)

    def of_subset(self, subset) -> Vec:
        counts = [0] * len(self.action.points)
        for x in subset:
            counts[x] += 1
        return self.element(counts)

    def equal(self, u, v) -> bool:
        return self.element(u) == self.element(v)

    def leq(self, u, v) -> bool:
        return geq(self.element(v), self.element(u))

    def presentation(self) -> MonoidPresentation:
        return MonoidPresentation.free(len(self.orbits), tuple(len(o) for o in self.orbits))


def finite_action_type_semigroup(fa: FiniteAction) -> FiniteTypeSemigroup:
    return FiniteTypeSemigroup(fa, tuple(fa.orbits()))


def brute_force_leq(fa: FiniteAction, A, B, equi: bool = False) -> bool:
    """Decide ``[A] <= [B]`` (or ``=``) by trying every group element on every point of ``A``.

    Pieces of a clopen partition of a finite set can be taken to be points,
    so this enumerates all partitions with all assignments.
    """
    A, B = sorted(A), set(B)
    if len(A) > len(B) or (equi and len(A) != len(B)):
        return False
    table = fa.action_table
    for choice in iproduct(range(len(table)), repeat=len(A)):
        images = {table[g][x] for g, x in zip(choice, A)}
        if len(images) == len(A) and images <= B:
            return True
    return False
