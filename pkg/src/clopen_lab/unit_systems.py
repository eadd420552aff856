"""Finite unit systems, the ample-group ladder and Krieger's extension lemma.

Everything happens on an *ambient* partition: the atoms of an exact space
(odometer, finite action) at a fixed depth.  A full-group element is stored
as a :class:`PartialMap` -- for each ambient atom, the group element that
moves it -- so equality of homeomorphisms is a table comparison.

A unit system is a finite algebra (a partition of the ambient atoms) whose
group is the product of the symmetric groups on its orbits; this is
exactly what closing a group of atom permutations under piecewise gluing
gives.  Its realization is a coherent family of *units*: for each atom a
full-group map from the base atom of its orbit onto it.  A permutation
``p`` is then realized on atom ``a`` by ``unit[p(a)] o unit[a]^-1``, and the
realization is faithful by construction.  :func:`verify_unit_system`
re-checks this from the tables alone through the Coxeter relations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

from . import clopen as C
from .actions import FiniteGroup, FreeAbelian, GroupWord
from .equidecomp import SearchBudget, equidecompose, verify_witness
from .partition_engine import FinitePartition
from .space_model import Region, apply_word, equivalent, space_for

ENUMERATION_CAP = 50_000


class UnitSystemError(ValueError):
    """An axiom or consistency failure, naming the offending pair."""

    def __init__(self, message, pair=None):
        super().__init__(message if pair is None else f"{message} (offending pair {pair})")
        self.pair = pair


class KriegerError(UnitSystemError):
    pass


# --------------------------------------------------------------------------
# ambient atoms and full-group maps


@dataclass(frozen=True)
class Ambient:
    """The atoms of an exact space at one depth."""

    action: object
    depth: int

    @cached_property
    def space(self):
        sp = space_for(self.action)
        if not sp.exact:
            raise UnitSystemError("unit systems need an exact space (odometers, finite actions)")
        return sp

    @cached_property
    def window(self):
        return self.space.depth_window(self.depth)

    @cached_property
    def size(self) -> int:
        return len(self.space.atoms(self.window))

    @cached_property
    def partition(self) -> FinitePartition:
        return FinitePartition(self.action, self.window)

    @cached_property
    def schema(self):
        return self.space.schema

    @cached_property
    def all(self) -> frozenset[int]:
        return frozenset(range(self.size))

    def perm(self, g) -> tuple[int, ...]:
        return self.space.act_window(g, self.window)[1]

    def expr(self, atoms) -> C.ClopenExpr:
        return self.partition.region_of(atoms).canonical().to_expr()

    def atoms_of(self, e: C.ClopenExpr) -> frozenset[int]:
        return self.partition.evaluate(e)

    def label(self, atoms) -> str:
        return C.to_text(self.expr(atoms))

    def parents(self, coarse: Ambient) -> tuple[int, ...]:
        return self.space.projection(self.window, coarse.window)

    def normalise(self, c: int, g, image: int):
        """The representative group element moving atom ``c`` to ``image``.

        Odometer actions are free, so the element is unique.  On finite
        actions atoms are points and only the image matters; the smallest
        group element doing the job is used.
        """
        if isinstance(self.schema, FiniteGroup) and self.depth >= 1:
            for h in range(self.schema.order):
                if self.perm(h)[c] == image:
                    return h
        return g

    def compatible(self, other: Ambient) -> bool:
        return self.window == other.window and self.size == other.size


@dataclass(frozen=True)
class PartialMap:
    """``x -> g_c x`` on each ambient atom ``c`` of the domain."""

    ambient: Ambient
    table: tuple[tuple[int, object, int], ...]  # (atom, element, image atom), sorted

    @classmethod
    def from_elements(cls, ambient: Ambient, elements: dict) -> PartialMap:
        rows = []
        for c, g in sorted(elements.items()):
            image = ambient.perm(g)[c]
            rows.append((c, ambient.normalise(c, g, image), image))
        return cls(ambient, tuple(rows))

    @classmethod
    def identity(cls, ambient: Ambient, atoms) -> PartialMap:
        e = ambient.schema.identity()
        return cls.from_elements(ambient, {c: e for c in atoms})

    @cached_property
    def _rows(self) -> dict:
        return {c: (g, d) for c, g, d in self.table}

    @property
    def domain(self) -> frozenset[int]:
        return frozenset(c for c, _, _ in self.table)

    @property
    def image(self) -> frozenset[int]:
        return frozenset(d for _, _, d in self.table)

    def __call__(self, atoms) -> frozenset[int]:
        rows = self._rows
        return frozenset(rows[c][1] for c in atoms)

    def is_bijection(self) -> bool:
        return len(self.image) == len(self.table)

    def is_total(self) -> bool:
        return self.domain == self.ambient.all and self.is_bijection()

    def restrict(self, atoms) -> PartialMap:
        atoms = set(atoms)
        return PartialMap(self.ambient, tuple(r for r in self.table if r[0] in atoms))

    def union(self, other: PartialMap) -> PartialMap:
        if self.domain & other.domain or self.image & other.image:
            raise UnitSystemError("cannot glue maps with overlapping domains or images")
        return PartialMap(self.ambient, tuple(sorted(self.table + other.table)))

    def then(self, other: PartialMap) -> PartialMap:
        """``other o self``: apply ``self`` first."""
        rows = other._rows
        mul = self.ambient.schema.multiply
        out = {}
        for c, g, d in self.table:
            if d not in rows:
                raise UnitSystemError("composition leaves the domain", (c, d))
            h, _ = rows[d]
            out[c] = mul(h, g)
        return PartialMap.from_elements(self.ambient, out)

    def inverse(self) -> PartialMap:
        inv = self.ambient.schema.inverse
        return PartialMap.from_elements(self.ambient, {d: inv(g) for c, g, d in self.table})

    def lift(self, fine: Ambient) -> PartialMap:
        if fine == self.ambient:
            return self
        parents = fine.parents(self.ambient)
        rows = self._rows
        return PartialMap.from_elements(
            fine, {f: rows[p][0] for f, p in enumerate(parents) if p in rows})

    def __eq__(self, other):
        return isinstance(other, PartialMap) and self.ambient == other.ambient and \
            self.table == other.table

    def __hash__(self):
        return hash(self.table)

    def pieces(self) -> list[tuple[C.ClopenExpr, GroupWord]]:
        """Group the table by element: one clopen piece per word."""
        by_g: dict = {}
        for c, g, _ in self.table:
            by_g.setdefault(g, []).append(c)
        schema = self.ambient.schema
        return [(self.ambient.expr(atoms), schema.canonical_word(g))
                for g, atoms in sorted(by_g.items(), key=lambda kv: min(kv[1]))]

    def max_word_length(self) -> int:
        return max((len(w) for _, w in self.pieces()), default=0)

    def verify_words(self) -> bool:
        """Re-derive each piece's image with ``apply_word`` and compare."""
        act = self.ambient.action
        for piece, word in self.pieces():
            atoms = self.ambient.atoms_of(piece)
            target = self.ambient.expr(self(atoms))
            if not equivalent(act, apply_word(act, word, piece), target):
                return False
        return True

    def to_dict(self) -> list[dict]:
        return [{"clopen": C.to_text(p), "word": str(w)} for p, w in self.pieces()]


def _transposition(n: int, a: int, b: int) -> tuple[int, ...]:
    p = list(range(n))
    p[a], p[b] = b, a
    return tuple(p)


def _compose(p, q) -> tuple[int, ...]:
    """``p o q`` on indices."""
    return tuple(p[i] for i in q)


def _closure(gens, n: int, cap: int = ENUMERATION_CAP) -> set | None:
    ident = tuple(range(n))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = _compose(g, p)
                if q not in seen:
                    seen.add(q)
                    if len(seen) > cap:
                        return None
                    nxt.append(q)
        frontier = nxt
    return seen


def _orbits(gens, n: int) -> list[list[int]]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in gens:
        for i, j in enumerate(g):
            a, b = find(i), find(j)
            if a != b:
                parent[max(a, b)] = min(a, b)
    out: dict[int, list[int]] = {}
    for i in range(n):
        out.setdefault(find(i), []).append(i)
    return sorted(out.values())


# --------------------------------------------------------------------------
# unit systems


@dataclass(frozen=True)
class UnitSystem:
    """A finite algebra with the full product of symmetric groups on its orbits.

    ``orbits[k][0]`` is the base atom of orbit ``k``; ``units[a]`` maps the
    base atom of ``a``'s orbit onto ``a`` (``None`` for an abstract system).
    """

    ambient: Ambient
    atoms: tuple[frozenset[int], ...]
    orbits: tuple[tuple[int, ...], ...]
    units: tuple[PartialMap, ...] | None = None
    generated_order: int | None = None

    @property
    def n(self) -> int:
        return len(self.atoms)

    @cached_property
    def orbit_of(self) -> dict[int, int]:
        return {a: k for k, o in enumerate(self.orbits) for a in o}

    @cached_property
    def atom_of(self) -> dict[int, int]:
        return {c: i for i, s in enumerate(self.atoms) for c in s}

    @property
    def order(self) -> int:
        return math.prod(math.factorial(len(o)) for o in self.orbits)

    @property
    def realized(self) -> bool:
        return self.units is not None

    def contains(self, perm) -> bool:
        return len(perm) == self.n and all(self.orbit_of[perm[a]] == self.orbit_of[a]
                                           for a in range(self.n))

    def transposition(self, a: int, b: int) -> tuple[int, ...]:
        return _transposition(self.n, a, b)

    def generators(self) -> list[tuple[int, ...]]:
        """Adjacent transpositions along each orbit (in stored order)."""
        return [self.transposition(o[k], o[k + 1]) for o in self.orbits for k in range(len(o) - 1)]

    def elements(self):
        if self.order > ENUMERATION_CAP:
            raise UnitSystemError(f"group of order {self.order} is too large to enumerate")
        return sorted(_closure(self.generators(), self.n))

    def atom_labels(self) -> list[str]:
        return [self.ambient.label(s) for s in self.atoms]

    def realize(self, perm) -> PartialMap:
        if not self.realized:
            raise UnitSystemError("this unit system carries no realization")
        if not self.contains(perm):
            raise UnitSystemError("permutation does not preserve the orbits", tuple(perm))
        out = None
        for a in range(self.n):
            piece = self.units[a].inverse().then(self.units[perm[a]])
            out = piece if out is None else out.union(piece)
        return out

    def induced(self, f: PartialMap) -> tuple[int, ...] | None:
        """The atom permutation of a total map, if it maps atoms onto atoms."""
        out = []
        for s in self.atoms:
            img = f(s)
            i = self.atom_of[min(img)]
            if self.atoms[i] != img:
                return None
            out.append(i)
        return tuple(out)

    def lift(self, fine: Ambient) -> UnitSystem:
        if fine == self.ambient:
            return self
        parents = fine.parents(self.ambient)
        atoms = [frozenset(f for f, p in enumerate(parents) if p in s) for s in self.atoms]
        units = None if self.units is None else tuple(u.lift(fine) for u in self.units)
        return UnitSystem(fine, tuple(atoms), self.orbits, units, self.generated_order)

    def refines(self, coarse: UnitSystem) -> dict[int, int]:
        """Map from own atoms to the coarse atom containing them (raises if not a refinement)."""
        coarse = coarse.lift(self.ambient) if coarse.ambient.depth < self.ambient.depth else coarse
        out = {}
        for i, s in enumerate(self.atoms):
            j = coarse.atom_of[min(s)]
            if not s <= coarse.atoms[j]:
                raise UnitSystemError("algebra does not refine", (self.ambient.label(s),
                                                                  coarse.ambient.label(coarse.atoms[j])))
            out[i] = j
        return out

    def same_as(self, other: UnitSystem) -> bool:
        """Same algebra and same group (realizations may differ)."""
        return set(self.atoms) == set(other.atoms) and \
            {frozenset(self.atoms[a] for a in o) for o in self.orbits} == \
            {frozenset(other.atoms[a] for a in o) for o in other.orbits}

    def to_dict(self) -> dict:
        d = {"atoms": self.atom_labels(), "orbits": [list(o) for o in self.orbits],
             "order": self.order, "depth": self.ambient.depth}
        if self.generated_order is not None:
            d["generated_order"] = self.generated_order
        if self.units is not None:
            d["units"] = [u.to_dict() for u in self.units]
            d["generators"] = [{"perm": list(t), "realization": self.realize(t).to_dict()}
                               for t in self.generators()]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _canonical_system(ambient, atoms, orbit_lists, units_by_atom, generated_order=None):
    """Sort atoms by least ambient atom and renumber orbits and units."""
    order = sorted(range(len(atoms)), key=lambda i: min(atoms[i]))
    new_index = {old: k for k, old in enumerate(order)}
    new_atoms = tuple(atoms[i] for i in order)
    orbits = []
    for o in orbit_lists:
        base, rest = new_index[o[0]], sorted(new_index[a] for a in o[1:])
        orbits.append((base,) + tuple(rest))
    orbits.sort(key=lambda o: min(o))
    units = None
    if units_by_atom is not None:
        units = tuple(units_by_atom[i] for i in order)
    return UnitSystem(ambient, new_atoms, tuple(orbits), units, generated_order)


def _units_by_bfs(ambient, atoms, orbit_lists, maps) -> dict[int, PartialMap]:
    """Units along a breadth-first tree of the given total bijections."""
    atom_of = {c: i for i, s in enumerate(atoms) for c in s}
    units = {}
    for o in orbit_lists:
        base = o[0]
        units[base] = PartialMap.identity(ambient, atoms[base])
        queue = [base]
        while queue:
            a = queue.pop(0)
            for f in maps:
                img = f(atoms[a])
                b = atom_of[min(img)]
                if b in units or atoms[b] != img:
                    continue
                units[b] = units[a].then(f.restrict(atoms[a]))
                queue.append(b)
        missing = [a for a in o if a not in units]
        if missing:
            raise UnitSystemError("realizations do not connect the orbit", (base, missing[0]))
    return units


def build_unit_system(p: FinitePartition, perms, realizations=None) -> UnitSystem:
    """Close ``perms`` under composition and piecewise gluing; check the axioms.

    ``realizations`` (optional) gives one total full-group map per
    permutation; each must induce its permutation, and together they must
    act faithfully on the atoms.
    """
    sp = p.space
    depth = max((x for x in p.window if isinstance(x, int)), default=0)
    ambient = Ambient(p.action, depth)
    if ambient.window != p.window:
        raise UnitSystemError("unit systems are built on level partitions")
    n = ambient.size
    perms = [tuple(int(x) for x in q) for q in perms]
    for q in perms:
        if sorted(q) != list(range(n)):
            raise UnitSystemError(f"not a permutation of the {n} atoms", q)
    group = _closure(perms, n)
    generated = len(group) if group is not None else None
    orbit_lists = _orbits(perms, n)
    atoms = tuple(frozenset([i]) for i in range(n))
    units = None
    if realizations is not None:
        realizations = [r.lift(ambient) if r.ambient != ambient else r for r in realizations]
        if len(realizations) != len(perms):
            raise UnitSystemError("one realization per permutation is required")
        for k, (q, r) in enumerate(zip(perms, realizations)):
            if not r.is_total():
                raise UnitSystemError("realization is not a total bijection", (k, q))
            for a in range(n):
                if r({a}) != {q[a]}:
                    raise UnitSystemError("realization does not leave the algebra invariant as stated",
                                          (q, a))
        by_atom = _units_by_bfs(ambient, atoms, orbit_lists, realizations)
        units = tuple(by_atom[i] for i in range(n))
    us = _canonical_system(ambient, atoms, orbit_lists, units, generated)
    if realizations is not None:
        for q, r in zip(perms, realizations):
            coherent = us.realize(q)
            if coherent != r:
                bad = next(c for (c, g, d), (_, h, _) in zip(coherent.table, r.table) if g != h)
                raise UnitSystemError("two group elements induce the same permutation (not faithful)",
                                      (q, sp.atoms(ambient.window)[bad]))
    return us


def orbit_system(action, depth, trivial: bool = False) -> UnitSystem:
    """Level-``depth`` atoms; orbits of the generators, realized along forward steps.

    With ``trivial=True`` every atom is its own orbit (the identity group).
    """
    from .states_lp import generators

    ambient = Ambient(action, depth)
    n = ambient.size
    atoms = tuple(frozenset([i]) for i in range(n))
    if trivial:
        orbit_lists = [[i] for i in range(n)]
        maps = []
    else:
        gens = generators(ambient.schema)
        maps = [PartialMap.from_elements(ambient, {c: g for c in range(n)}) for g in gens]
        orbit_lists = _orbits([ambient.perm(g) for g in gens], n)
    by_atom = _units_by_bfs(ambient, atoms, orbit_lists, maps)
    return _canonical_system(ambient, atoms, orbit_lists, [by_atom[i] for i in range(n)])


def dyadic_ladder(levels=(1, 2, 3)) -> list[UnitSystem]:
    from .actions import odometer

    return [orbit_system(odometer(2), n) for n in levels]


@dataclass
class Verification:
    ok: bool
    checks: dict = field(default_factory=dict)
    problems: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": self.checks, "problems": self.problems}


def verify_unit_system(us: UnitSystem) -> Verification:
    """Re-check the axioms from the tables alone.

    * the atoms partition the ambient atoms, the orbits partition the atoms;
    * each realized generator is a total bijection inducing its transposition
      (the group leaves the algebra invariant) and its pieces re-verify with
      ``apply_word``;
    * the realized generators satisfy the Coxeter relations of the product of
      symmetric groups, so ``g -> g|A`` is an isomorphism (faithfulness);
    * the generated permutation group has the order of the closure.
    """
    problems = []
    checks = {}
    covered = sorted(c for s in us.atoms for c in s)
    checks["atoms_partition"] = covered == list(range(us.ambient.size)) and all(us.atoms)
    if not checks["atoms_partition"]:
        problems.append("atoms do not partition the space")
    flat = sorted(a for o in us.orbits for a in o)
    checks["orbits_partition"] = flat == list(range(us.n))
    gens = us.generators()
    if us.order <= ENUMERATION_CAP:
        closed = _closure(gens, us.n)
        checks["closure_order"] = closed is not None and len(closed) == us.order
    if us.realized:
        real = {}
        inv_ok = words_ok = True
        for t in gens:
            r = us.realize(t)
            real[t] = r
            if not r.is_total() or us.induced(r) != t:
                inv_ok = False
                problems.append(f"generator {t} does not act as stated")
            if not r.verify_words():
                words_ok = False
                problems.append(f"generator {t} pieces fail apply_word re-check")
        checks["invariance"] = inv_ok
        checks["words"] = words_ok
        ident = PartialMap.identity(us.ambient, range(us.ambient.size))
        cox = True
        for s in gens:
            if real[s].then(real[s]) != ident:
                cox = False
                problems.append(f"generator {s} is not an involution")
        for s, t in combinations(gens, 2):
            st = real[t].then(real[s])
            power = 3 if len(set(i for i in range(us.n) if s[i] != i) &
                               set(i for i in range(us.n) if t[i] != i)) else 2
            acc = st
            for _ in range(power - 1):
                acc = acc.then(st)
            if acc != ident:
                cox = False
                problems.append(f"Coxeter relation fails for {s}, {t}")
        checks["coxeter_faithful"] = cox
        for i, o in enumerate(us.orbits):
            for a in o:
                u = us.units[a]
                if u.domain != us.atoms[o[0]] or u.image != us.atoms[a]:
                    problems.append(f"unit for atom {a} has the wrong domain or image")
    ok = not problems and all(checks.values())
    return Verification(ok, checks, problems)


# --------------------------------------------------------------------------
# compatibility oracles


class CompatibilityOracle:
    """Finds full-group maps ``U -> V`` through budgeted equidecomposition searches.

    Positive answers are witnesses re-verified with ``verify_witness``.
    """

    def __init__(self, action, max_word_length: int = 4, max_nodes: int = 200_000,
                 time_cap: float = 10.0, name: str = "full group"):
        self.action = action
        self.max_word_length = max_word_length
        self.max_nodes = max_nodes
        self.time_cap = time_cap
        self.name = name
        self.log: list[dict] = []
        self._cache: dict = {}

    def _budget(self, ambient) -> SearchBudget:
        return SearchBudget(self.max_word_length, ambient.depth, self.max_nodes, self.time_cap)

    def ambient(self, depth) -> Ambient:
        return Ambient(self.action, depth)

    def map_onto(self, depth: int, U, V) -> PartialMap | None:
        amb = self.ambient(depth)
        U, V = frozenset(U), frozenset(V)
        key = (depth, U, V)
        if key in self._cache:
            return self._cache[key]
        if len(U) != len(V) and isinstance(amb.schema, FreeAbelian) is False and False:
            return None
        if U == V:
            out = PartialMap.identity(amb, U)
        elif not U or not V:
            out = None
        else:
            A, B = amb.expr(U), amb.expr(V)
            res = equidecompose(self.action, A, B, self._budget(amb))
            out = None
            if res:
                ok, msg = verify_witness(self.action, A, B, res)
                if not ok:
                    raise UnitSystemError(f"oracle witness failed re-verification: {msg}")
                elements = {}
                for piece in res.pieces:
                    g = amb.space.element(piece.word)
                    for c in amb.atoms_of(piece.clopen):
                        elements[c] = g
                out = PartialMap.from_elements(amb, elements)
                if out.domain != U or out.image != V:
                    raise UnitSystemError("oracle witness is not measurable at the ambient depth")
            self.log.append({"oracle": self.name, "from": amb.label(U), "to": amb.label(V),
                             "found": out is not None,
                             "witness": res.to_dict() if res else res.to_dict()})
        self._cache[key] = out
        return out

    def element_mapping(self, depth: int, U, V) -> PartialMap | None:
        """A total full-group element ``g`` with ``g U = V``."""
        amb = self.ambient(depth)
        f = self.map_onto(depth, U, V)
        if f is None:
            return None
        h = self.map_onto(depth, amb.all - frozenset(U), amb.all - frozenset(V))
        return None if h is None else f.union(h)


class LadderOracle:
    """Answers ``exists lambda in Lambda with lambda U = V`` from a ladder of unit systems."""

    def __init__(self, ladder: list[UnitSystem], name: str = "ladder group"):
        self.ladder = ladder
        self.name = name
        self.log: list[dict] = []

    def element_mapping(self, depth: int, U, V) -> PartialMap | None:
        U, V = frozenset(U), frozenset(V)
        for us in self.ladder:
            if us.ambient.depth > depth:
                continue
            fine = Ambient(us.ambient.action, depth)
            lus = us.lift(fine)
            perm = _transporter(lus, U, V, lambda a: lus.orbit_of[a])
            if perm is not None:
                out = lus.realize(perm) if lus.realized else None
                self.log.append({"oracle": self.name, "level": us.ambient.depth, "found": True})
                return out
        self.log.append({"oracle": self.name, "found": False})
        return None


def _transporter(us: UnitSystem, U, V, type_of) -> tuple[int, ...] | None:
    """A group element mapping the union ``U`` onto ``V`` by matching atoms of equal type."""
    inside_u = [a for a, s in enumerate(us.atoms) if s <= U]
    inside_v = [a for a, s in enumerate(us.atoms) if s <= V]
    if sum(len(us.atoms[a]) for a in inside_u) != len(U) or \
            sum(len(us.atoms[a]) for a in inside_v) != len(V):
        return None
    rest_u = [a for a in range(us.n) if a not in inside_u]
    rest_v = [a for a in range(us.n) if a not in inside_v]
    perm = [None] * us.n
    for src, dst in ((inside_u, inside_v), (rest_u, rest_v)):
        buckets: dict = {}
        for a in sorted(dst):
            buckets.setdefault(type_of(a), []).append(a)
        for a in sorted(src):
            bucket = buckets.get(type_of(a))
            if not bucket:
                return None
            perm[a] = bucket.pop(0)
    return tuple(perm)


# --------------------------------------------------------------------------
# the ample ladder


@dataclass
class LadderStep:
    system: UnitSystem
    previous: UnitSystem
    extensions: dict  # previous generator -> extending permutation of the new atoms
    transporters: list  # (U label, V label, permutation, realization dict)
    log: list

    def to_dict(self) -> dict:
        return {"system": self.system.to_dict(),
                "extensions": [{"from": list(k), "to": list(v)} for k, v in self.extensions.items()],
                "transporters": [{"U": u, "V": v, "perm": list(p), "realization": r}
                                 for u, v, p, r in self.transporters],
                "log": self.log}


def _depth_of(region: Region) -> int:
    w = region.canonical().window
    return max((x for x in w if isinstance(x, int)), default=0)


def ample_ladder_step(current: UnitSystem, equalities) -> LadderStep:
    """Refine ``current`` along equidecomposition witnesses of ``[U] = [V]``.

    The algebra is refined by the witness pieces and their images until
    every witness map and every current generator maps atoms onto atoms;
    atoms joined by these maps have equal type and the new group permutes
    atoms of equal type.  Returns extensions of the current generators and,
    for each equality, a realized group element mapping ``U`` onto ``V``.
    """
    equalities = list(equalities)
    if not equalities:
        ident = {t: t for t in current.generators()}
        return LadderStep(current, current, ident, [], ["no equalities: system unchanged"])
    action = current.ambient.action
    sp = current.ambient.space
    depth = current.ambient.depth
    for U, V, w in equalities:
        if w.mode != "equi":
            raise UnitSystemError("ladder steps need equality witnesses (mode 'equi')")
        ok, msg = verify_witness(action, U, V, w)
        if not ok:
            raise UnitSystemError(f"inconsistent witness for {C.to_text(U)} = {C.to_text(V)}: {msg}")
        for p in w.pieces:
            depth = max(depth, _depth_of(sp.evaluate(p.clopen)),
                        _depth_of(sp.evaluate(apply_word(action, p.word, p.clopen))))
        depth = max(depth, _depth_of(sp.evaluate(U)), _depth_of(sp.evaluate(V)))
    amb = Ambient(action, depth)
    cur = current.lift(amb)
    log = [f"ambient depth {depth}, {amb.size} ambient atoms"]
    maps = []
    sets = [frozenset(s) for s in cur.atoms]
    for U, V, w in equalities:
        elements = {}
        for p in w.pieces:
            g = sp.element(p.word)
            piece = amb.atoms_of(p.clopen)
            sets.append(piece)
            for c in piece:
                elements[c] = g
        f = PartialMap.from_elements(amb, elements)
        maps.append(f)
        sets += [amb.atoms_of(U), amb.atoms_of(V), f.image]
    if cur.realized:
        maps += [cur.realize(t) for t in cur.generators()]
    # partition refinement to stability
    block = {c: tuple(c in s for s in sets) for c in range(amb.size)}
    while True:
        key = {c: (block[c],) + tuple(block[f({c}).__iter__().__next__()] if c in f.domain else None
                                      for f in maps) for c in range(amb.size)}
        if len(set(key.values())) == len(set(block.values())):
            break
        block = key
    groups: dict = {}
    for c in range(amb.size):
        groups.setdefault(block[c], set()).add(c)
    atoms = sorted((frozenset(s) for s in groups.values()), key=min)
    atom_of = {c: i for i, s in enumerate(atoms) for c in s}
    # types: atoms joined by the maps
    parent = list(range(len(atoms)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for f in maps:
        for i, s in enumerate(atoms):
            if s <= f.domain:
                j = atom_of[min(f(s))]
                if atoms[j] != f(s):
                    raise UnitSystemError("refinement is not stable under a witness map",
                                          (amb.label(s), amb.label(f(s))))
                a, b = find(i), find(j)
                if a != b:
                    parent[max(a, b)] = min(a, b)
    classes: dict = {}
    for i in range(len(atoms)):
        classes.setdefault(find(i), []).append(i)
    orbit_lists = sorted(classes.values())
    gluing = []
    for f in maps:
        for i, s in enumerate(atoms):
            if s <= f.domain:
                gluing.append(f.restrict(s))
    units = _units_from_pieces(amb, atoms, orbit_lists, gluing)
    new = _canonical_system(amb, atoms, orbit_lists, [units[i] for i in range(len(atoms))])
    log.append(f"refined to {new.n} atoms in {len(new.orbits)} types; group order {new.order}")
    # extensions of the current generators
    type_of = lambda a: new.orbit_of[a]
    inside = new.refines(cur)
    extensions = {}
    for t in cur.generators():
        perm = [None] * new.n
        for A in range(cur.n):
            src = sorted(a for a in range(new.n) if inside[a] == A)
            dst: dict = {}
            for b in sorted(a for a in range(new.n) if inside[a] == t[A]):
                dst.setdefault(type_of(b), []).append(b)
            for a in src:
                bucket = dst.get(type_of(a))
                if not bucket:
                    raise UnitSystemError("generator does not extend: type multisets differ",
                                          (amb.label(cur.atoms[A]), amb.label(cur.atoms[t[A]])))
                perm[a] = bucket.pop(0)
        perm = tuple(perm)
        assert new.contains(perm)
        extensions[t] = perm
    transporters = []
    for U, V, _ in equalities:
        su, sv = amb.atoms_of(U), amb.atoms_of(V)
        perm = _transporter(new, su, sv, type_of)
        if perm is None:
            raise UnitSystemError("no group element maps U onto V", (C.to_text(U), C.to_text(V)))
        r = new.realize(perm)
        if r(su) != sv or not r.verify_words():
            raise UnitSystemError("transporter realization fails re-verification",
                                  (C.to_text(U), C.to_text(V)))
        transporters.append((C.to_text(U), C.to_text(V), perm, r.to_dict()))
    return LadderStep(new, current, extensions, transporters, log)


def _units_from_pieces(amb, atoms, orbit_lists, pieces) -> dict[int, PartialMap]:
    """Units along a breadth-first tree of atom-to-atom maps (used in both directions)."""
    atom_of = {c: i for i, s in enumerate(atoms) for c in s}
    edges: dict[int, list] = {}
    for f in pieces:
        a, b = atom_of[min(f.domain)], atom_of[min(f.image)]
        edges.setdefault(a, []).append((b, f))
        edges.setdefault(b, []).append((a, f.inverse()))
    units = {}
    for o in orbit_lists:
        base = o[0]
        units[base] = PartialMap.identity(amb, atoms[base])
        queue = [base]
        while queue:
            a = queue.pop(0)
            for b, f in edges.get(a, ()):
                if b not in units:
                    units[b] = units[a].then(f)
                    queue.append(b)
    return units


def run_ladder(system: UnitSystem, steps) -> list[LadderStep]:
    out = []
    for equalities in steps:
        st = ample_ladder_step(system, equalities)
        out.append(st)
        system = st.system
    return out


def ladder_embeds(steps: list[LadderStep]) -> bool:
    """Each step's extension map is an injective homomorphism on generated groups.

    Checked by comparing the closures: the extension of a product of
    generators, restricted to the old atoms, is that product.
    """
    for st in steps:
        prev = st.previous.lift(st.system.ambient)
        inside = st.system.refines(prev)
        for t, e in st.extensions.items():
            for a in range(st.system.n):
                if inside[e[a]] != t[inside[a]]:
                    return False
            if not st.system.contains(e):
                return False
    return True


# --------------------------------------------------------------------------
# Krieger's extension lemma


@dataclass
class KriegerResult:
    system: UnitSystem  # C'
    psi: tuple[int, ...]  # atom of A' -> atom of C'
    verification: dict
    generators: list  # the lemma's generators with their realizations
    log: list

    def to_dict(self) -> dict:
        return {"system": self.system.to_dict(), "psi": list(self.psi),
                "verification": self.verification, "generators": self.generators,
                "log": self.log}


def _induced_on(us: UnitSystem, f: PartialMap):
    perm = us.induced(f)
    if perm is None:
        raise UnitSystemError("map does not permute the atoms")
    return perm


def krieger_extend(A: UnitSystem, Cs: UnitSystem, phi, A_prime: UnitSystem,
                   oracle: CompatibilityOracle) -> KriegerResult:
    """Extend ``phi: A -> C`` to ``psi: A' -> C'`` following Krieger's construction.

    ``phi[a]`` is the atom of ``C`` assigned to atom ``a`` of ``A``.  The
    hypotheses are checked first; every "there exists g in G" step goes
    through ``oracle``; failures name the atom pair.
    """
    if not (A.realized and Cs.realized and A_prime.realized):
        raise KriegerError("Krieger extension needs realized unit systems")
    phi = tuple(phi)
    log = []
    depth = A_prime.ambient.depth
    amb_a = A_prime.ambient
    amb_c = Ambient(oracle.action, depth)
    if not amb_a.compatible(amb_c):
        raise KriegerError("the two sides do not share an ambient partition")
    A = A.lift(amb_a)
    Cs = Cs.lift(Ambient(Cs.ambient.action, depth))
    if sorted(phi) != list(range(Cs.n)) or len(phi) != A.n:
        raise KriegerError("phi is not a bijection between the atoms")
    # A' refines A, and Delta sits inside Delta'
    inside = A_prime.refines(A)
    delta_perm = {}
    for t in A.generators():
        r = A.realize(t)
        perm = A_prime.induced(r)
        if perm is None or A_prime.realize(perm) != r:
            raise KriegerError("A' does not extend the group of A", t)
        delta_perm[t] = perm
    # hypothesis (2): Lambda = phi Delta phi^-1, compared through orbits of full symmetric groups
    conj = {frozenset(phi[a] for a in o) for o in A.orbits}
    if conj != {frozenset(o) for o in Cs.orbits}:
        raise KriegerError("hypothesis (2) fails: phi does not carry orbits onto orbits")
    # hypothesis (1) and the maps g_rho
    g_of = {}
    for a in range(A.n):
        g = oracle.element_mapping(depth, A.atoms[a], Cs.atoms[phi[a]])
        if g is None:
            raise KriegerError("hypothesis (1): no element of G maps the atom onto its image",
                               (amb_a.label(A.atoms[a]), amb_c.label(Cs.atoms[phi[a]])))
        g_of[a] = g
    psi_sets: dict[int, frozenset] = {}
    for o in A.orbits:
        rep = o[0]
        for b in range(A_prime.n):
            if inside[b] == rep:
                psi_sets[b] = g_of[rep](A_prime.atoms[b])
        for a in o[1:]:
            t = A.transposition(a, rep)
            dperm = A_prime.induced(A.realize(t))
            lam = Cs.realize(Cs.transposition(phi[a], phi[rep]))
            for b in range(A_prime.n):
                if inside[b] == a:
                    psi_sets[b] = lam(psi_sets[dperm[b]])
    covered = sorted(c for s in psi_sets.values() for c in s)
    if covered != list(range(amb_c.size)):
        raise KriegerError("the images do not partition the space")
    log.append(f"psi defined on {len(psi_sets)} atoms")
    # sigma: Delta-orbits on atoms of A'; xi: Delta'-orbits
    sigmas = _orbits(list(delta_perm.values()), A_prime.n) if delta_perm else \
        [[b] for b in range(A_prime.n)]
    sigma_of = {b: k for k, s in enumerate(sigmas) for b in s}
    E = [min(s) for s in sigmas]
    bridge = {}
    lam_of = {}
    units_by_atom: dict[int, PartialMap] = {}
    generators_report = []
    for xi in A_prime.orbits:
        in_xi = sorted({sigma_of[b] for b in xi}, key=lambda k: E[k])
        s0 = in_xi[0]
        base_set = psi_sets[E[s0]]
        for k in in_xi:
            if k == s0:
                g = PartialMap.identity(amb_c, base_set)
            else:
                g = oracle.map_onto(depth, base_set, psi_sets[E[k]])
                if g is None:
                    raise KriegerError("no element of G maps one atom onto the other",
                                       (amb_c.label(base_set), amb_c.label(psi_sets[E[k]])))
                swap = g.union(g.inverse()).union(
                    PartialMap.identity(amb_c, amb_c.all - base_set - psi_sets[E[k]]))
                generators_report.append({"kind": "g(xi,sigma)", "map": swap.to_dict()})
            bridge[k] = g
            for b in sigmas[k]:
                if b == E[k]:
                    lam = PartialMap.identity(amb_c, psi_sets[b])
                else:
                    t = A.transposition(inside[E[k]], inside[b])
                    full = Cs.realize(_conjugate(phi, t))
                    if full(psi_sets[E[k]]) != psi_sets[b]:
                        raise KriegerError("lambda does not carry the representative onto the atom",
                                           (E[k], b))
                    lam_of[(k, b)] = full
                    generators_report.append({"kind": "lambda(sigma,E)", "map": full.to_dict()})
                    lam = full.restrict(psi_sets[E[k]])
                units_by_atom[b] = g.then(lam)
    # C' in canonical order; the base of each orbit is psi(E_sigma(xi))
    atoms_c = [psi_sets[b] for b in range(A_prime.n)]
    orbit_lists = []
    for xi in A_prime.orbits:
        in_xi = sorted({sigma_of[b] for b in xi}, key=lambda k: E[k])
        base = E[in_xi[0]]
        orbit_lists.append([base] + sorted(b for b in xi if b != base))
    Cp = _canonical_system(amb_c, atoms_c, orbit_lists, [units_by_atom[b] for b in range(A_prime.n)])
    index_c = {s: i for i, s in enumerate(Cp.atoms)}
    psi = tuple(index_c[psi_sets[b]] for b in range(A_prime.n))
    # the lemma's generators belong to the realized group
    member = True
    for (k, b), lam in lam_of.items():
        perm = Cp.induced(lam)
        member &= perm is not None and Cp.contains(perm) and Cp.realize(perm) == lam
    log.append(f"C' has {Cp.n} atoms, {len(Cp.orbits)} orbits, group order {Cp.order}")
    verification = verify_krieger(A, Cs, phi, A_prime, Cp, psi,
                                  CompatibilityOracle(oracle.action, oracle.max_word_length,
                                                      oracle.max_nodes, oracle.time_cap,
                                                      oracle.name + " (replay)"))
    verification["lemma_generators_in_group"] = member
    return KriegerResult(Cp, psi, verification, generators_report, log)


def _conjugate(phi, t) -> tuple[int, ...]:
    """``phi o t o phi^-1`` as a permutation of the atoms of the target."""
    n = len(phi)
    out = [None] * n
    for a in range(n):
        out[phi[a]] = phi[t[a]]
    return tuple(out)


def _group_from(gens, n):
    closed = _closure(gens, n)
    return closed


def verify_krieger(A, Cs, phi, A_prime, Cp, psi, oracle) -> dict:
    """Independent re-check of the lemma's conclusions from tables and fresh oracle calls."""
    out = {}
    out["unit_system"] = verify_unit_system(Cp).ok
    # psi extends phi
    inside = A_prime.refines(A)
    ext = True
    for a in range(A.n):
        union = frozenset().union(*[Cp.atoms[psi[b]] for b in range(A_prime.n) if inside[b] == a])
        ext &= union == Cs.atoms[phi[a]]
    out["psi_extends_phi"] = ext
    out["psi_bijective"] = sorted(psi) == list(range(Cp.n))
    # condition (1): each atom B of A' is moved onto psi(B) by an element of G
    depth = A_prime.ambient.depth
    cond1 = True
    for b in range(A_prime.n):
        g = oracle.element_mapping(depth, A_prime.atoms[b], Cp.atoms[psi[b]])
        cond1 &= g is not None and g.is_total() and g(A_prime.atoms[b]) == Cp.atoms[psi[b]] \
            and g.verify_words()
    out["condition_1"] = cond1
    # condition (2): Lambda'|C' = psi Delta'|A' psi^-1, by table comparison
    lam_gens = [Cp.induced(Cp.realize(t)) for t in Cp.generators()]
    del_gens = [_conjugate(psi, A_prime.induced(A_prime.realize(t))) for t in A_prime.generators()]
    if Cp.order <= ENUMERATION_CAP and A_prime.order <= ENUMERATION_CAP:
        out["condition_2"] = _closure(lam_gens, Cp.n) == _closure(del_gens, Cp.n)
        out["condition_2_method"] = "enumerated groups"
    else:
        out["condition_2"] = _orbits(lam_gens, Cp.n) == _orbits(del_gens, Cp.n)
        out["condition_2_method"] = "orbits of full symmetric products"
    # C' refines C and Lambda sits inside Lambda'
    inside_c = Cp.refines(Cs)
    sub = True
    for t in Cs.generators():
        r = Cs.realize(t)
        perm = Cp.induced(r)
        sub &= perm is not None and Cp.realize(perm) == r
    out["refines_C"] = bool(inside_c) and sub
    out["ok"] = all(v for k, v in out.items() if isinstance(v, bool))
    return out


# --------------------------------------------------------------------------
# the back-and-forth conjugation


@dataclass
class ConjugationReport:
    phi: tuple[int, ...]
    system: UnitSystem
    steps: list
    conjugated: list  # per generator: permutation and its H-realization
    ok: bool

    def to_dict(self) -> dict:
        return {"phi": list(self.phi), "system": self.system.to_dict(), "steps": self.steps,
                "conjugated": self.conjugated, "ok": self.ok}


def realize_in(oracle: CompatibilityOracle, us: UnitSystem) -> UnitSystem:
    """The same algebra and orbits, with units found by the oracle's group."""
    depth = us.ambient.depth
    amb = oracle.ambient(depth)
    units = []
    for a in range(us.n):
        base = us.orbits[us.orbit_of[a]][0]
        f = oracle.map_onto(depth, us.atoms[base], us.atoms[a])
        if f is None:
            raise KriegerError("no element of H maps one atom onto the other",
                               (amb.label(us.atoms[base]), amb.label(us.atoms[a])))
        units.append(f)
    return UnitSystem(amb, us.atoms, us.orbits, tuple(units))


def conjugate_construct(H: CompatibilityOracle, ladder: list[UnitSystem], depth: int) -> ConjugationReport:
    """Run ``depth`` alternating extension steps along ``ladder``.

    Forth steps extend ``phi`` with Krieger's construction using ``H``; back
    steps confirm with the ladder's own group that every new atom is moved
    onto its image by an element of the ladder (compatibility on the other
    side).  At the end each generator of the last ladder group is conjugated
    by ``phi`` and its realization in ``H`` is re-verified.
    """
    if depth < 0 or depth >= len(ladder):
        raise ValueError(f"depth must be in [0, {len(ladder) - 1}]")
    lam_oracle = LadderOracle(ladder)
    Cs = realize_in(H, ladder[0])
    phi = tuple(range(ladder[0].n))
    steps = []
    for k in range(depth):
        res = krieger_extend(ladder[k], Cs, phi, ladder[k + 1], H)
        back = True
        d = ladder[k + 1].ambient.depth
        for b in range(ladder[k + 1].n):
            f = lam_oracle.element_mapping(d, res.system.atoms[res.psi[b]], ladder[k + 1].atoms[b])
            back &= f is not None or not ladder[k + 1].realized
        steps.append({"step": k, "forth": res.verification, "back_compatible": back,
                      "log": res.log})
        Cs, phi = res.system, res.psi
    last = ladder[depth]
    conj = []
    ok = all(s["forth"]["ok"] and s["back_compatible"] for s in steps)
    d = Cs.ambient.depth
    for t in last.generators():
        perm = _conjugate(phi, t)
        if not Cs.contains(perm):
            ok = False
            conj.append({"perm": list(perm), "in_group": False})
            continue
        r = Cs.realize(perm)
        good = r.is_total() and r.verify_words() and Cs.induced(r) == perm
        # an independent H-element with the same action on the atoms, from oracle witnesses
        w = None
        for a in range(Cs.n):
            f = H.map_onto(d, Cs.atoms[a], Cs.atoms[perm[a]])
            if f is None:
                w = None
                break
            w = f if w is None else w.union(f)
        witnessed = w is not None and w.is_total() and Cs.induced(w) == perm and w.verify_words()
        ok &= good and witnessed
        conj.append({"perm": list(perm), "in_group": True, "verified": good,
                     "coherent_max_word_length": r.max_word_length(),
                     "witnessed": witnessed,
                     "max_word_length": w.max_word_length() if w is not None else None,
                     "witness": w.to_dict() if w is not None else None})
    return ConjugationReport(phi, Cs, steps, conj, ok)
