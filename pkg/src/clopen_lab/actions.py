"""Finitely described group actions on symbolic spaces, and group words.

An action is one of

* ``FullShift``   -- the full ``k``-shift over ``Z`` or ``Z^2``
* ``Subshift``    -- a shift-invariant subspace given by forbidden patterns
  or by the builtin ``at-most-one-one`` predicate
* ``Odometer``    -- the adding machine on ``prod Z/b_i``
* ``FiniteAction``-- a finite group acting on finitely many points
* ``Product``     -- diagonal action of a shared group on a product

Action specs are read from YAML documents with the fields ``kind``,
``alphabet``, ``dimension``, ``forbidden``, ``base``, ``points``,
``group_table``, ``action_table`` and ``factors``.
"""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product as iproduct
from pathlib import Path
from typing import Iterator, Sequence, Union

import yaml

SYMBOLS = string.digits + string.ascii_lowercase + string.ascii_uppercase
AT_MOST_ONE_ONE = "at-most-one-one"
BUILTIN_PREDICATES = (AT_MOST_ONE_ONE,)


class SpecError(ValueError):
    """Malformed action spec, word, or schema mismatch."""


# --------------------------------------------------------------------------
# groups and words


@dataclass(frozen=True)
class GroupWord:
    """A word in the generators of an acting group.

    ``letters`` is a tuple of ``(generator, exponent)`` pairs with exponent
    ``+1`` or ``-1``; the empty word is the identity.  The word
    ``l1 l2 ... lk`` acts as ``l1(l2(...lk(x)))``.
    """

    letters: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for g, e in self.letters:
            if g < 0 or e not in (1, -1):
                raise SpecError(f"bad letter ({g}, {e})")

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other: GroupWord) -> GroupWord:
        return GroupWord(self.letters + other.letters)

    def inverse(self) -> GroupWord:
        return GroupWord(tuple((g, -e) for g, e in reversed(self.letters)))

    def __str__(self):
        if not self.letters:
            return "e"
        out = []
        i = 0
        while i < len(self.letters):
            g, e = self.letters[i]
            j = i
            while j < len(self.letters) and self.letters[j] == (g, e):
                j += 1
            power = (j - i) * e
            out.append(f"g{g}" if power == 1 else f"g{g}^{power}")
            i = j
        return " ".join(out)

    @classmethod
    def parse(cls, text: str) -> GroupWord:
        text = text.strip()
        if text in ("", "e", "id"):
            return cls()
        letters = []
        for tok in text.split():
            m = re.fullmatch(r"g(\d+)(?:\^(-?\d+))?", tok)
            if not m:
                raise SpecError(f"bad word token {tok!r}")
            g = int(m.group(1))
            p = int(m.group(2)) if m.group(2) is not None else 1
            letters.extend([(g, 1 if p > 0 else -1)] * abs(p))
        return cls(tuple(letters))

    @classmethod
    def power(cls, generator: int, n: int) -> GroupWord:
        return cls(((generator, 1 if n > 0 else -1),) * abs(n))


IDENTITY = GroupWord()


class GroupSchema:
    """Abstract acting group: ``Z^d`` or a finite group by table."""

    def evaluate(self, word: GroupWord):
        raise NotImplementedError

    def canonical_word(self, element) -> GroupWord:
        raise NotImplementedError

    def normal_form(self, word: GroupWord):
        return self.evaluate(word)

    def ball(self, radius: int) -> list:
        """Group elements of word length <= radius, length-lex, identity first."""
        raise NotImplementedError

    def ball_words(self, radius: int) -> list[GroupWord]:
        return [self.canonical_word(g) for g in self.ball(radius)]


@dataclass(frozen=True)
class FreeAbelian(GroupSchema):
    rank: int

    def evaluate(self, word):
        v = [0] * self.rank
        for g, e in word.letters:
            if g >= self.rank:
                raise SpecError(f"generator g{g} not in Z^{self.rank}")
            v[g] += e
        return tuple(v)

    def identity(self):
        return (0,) * self.rank

    def multiply(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def inverse(self, a):
        return tuple(-x for x in a)

    def length(self, a) -> int:
        return sum(abs(x) for x in a)

    def canonical_word(self, element):
        letters = []
        for g, n in enumerate(element):
            letters.extend([(g, 1 if n > 0 else -1)] * abs(n))
        return GroupWord(tuple(letters))

    def ball(self, radius):
        out = []
        for r in range(radius + 1):
            layer = [v for v in iproduct(range(-r, r + 1), repeat=self.rank)
                     if self.length(v) == r]
            # length-lex on canonical words: positive exponents first
            layer.sort(key=lambda v: tuple((abs(x), -x) for x in v))
            out.extend(layer)
        return out


@dataclass(frozen=True)
class FiniteGroup(GroupSchema):
    """Finite group by multiplication table; element 0 is the identity.

    Generators are the group elements themselves: letter ``(g, 1)`` is the
    element ``g`` and ``(g, -1)`` its inverse.
    """

    table: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.table)
        if n == 0 or any(len(row) != n for row in self.table):
            raise SpecError("group_table must be square and nonempty")
        if any(not all(0 <= x < n for x in row) for row in self.table):
            raise SpecError("group_table entries out of range")
        if tuple(self.table[0]) != tuple(range(n)) or any(self.table[g][0] != g for g in range(n)):
            raise SpecError("element 0 must be the identity of group_table")
        for row in self.table:
            if sorted(row) != list(range(n)):
                raise SpecError("group_table rows must be permutations")
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    if self.table[self.table[a][b]][c] != self.table[a][self.table[b][c]]:
                        raise SpecError("group_table is not associative")

    @property
    def order(self) -> int:
        return len(self.table)

    def identity(self):
        return 0

    def multiply(self, a, b):
        return self.table[a][b]

    def inverse(self, a):
        return self.table[a].index(0)

    def evaluate(self, word):
        x = 0
        for g, e in word.letters:
            if g >= self.order:
                raise SpecError(f"generator g{g} not in group of order {self.order}")
            x = self.table[x][g if e == 1 else self.inverse(g)]
        return x

    def length(self, a) -> int:
        return 0 if a == 0 else 1

    def canonical_word(self, element):
        return IDENTITY if element == 0 else GroupWord(((element, 1),))

    def ball(self, radius):
        return [0] if radius == 0 else list(range(self.order))


# --------------------------------------------------------------------------
# action specs


@dataclass(frozen=True)
class FullShift:
    alphabet: int = 2
    dimension: int = 1

    def __post_init__(self):
        if not 2 <= self.alphabet <= len(SYMBOLS):
            raise SpecError("alphabet size must be between 2 and 62")
        if self.dimension not in (1, 2):
            raise SpecError("dimension must be 1 or 2")


@dataclass(frozen=True)
class Subshift:
    """Shift-invariant subspace.

    ``forbidden`` holds patterns (strings for ``d=1``; tuples of row strings
    for ``d=2``), or ``builtin`` names a window-decidable predicate.
    """

    alphabet: int = 2
    dimension: int = 1
    forbidden: tuple = ()
    builtin: str | None = None

    def __post_init__(self):
        if not 2 <= self.alphabet <= len(SYMBOLS):
            raise SpecError("alphabet size must be between 2 and 62")
        if self.dimension not in (1, 2):
            raise SpecError("dimension must be 1 or 2")
        if self.builtin is not None:
            if self.builtin not in BUILTIN_PREDICATES:
                raise SpecError(f"unknown builtin predicate {self.builtin!r}")
            if self.alphabet != 2:
                raise SpecError(f"{self.builtin} needs alphabet 2")
        elif not self.forbidden:
            raise SpecError("subshift needs forbidden patterns or a builtin")
        allowed = set(SYMBOLS[: self.alphabet])
        for pat in self.forbidden:
            rows = (pat,) if self.dimension == 1 else pat
            for row in rows:
                if not row or set(row) - allowed:
                    raise SpecError(f"bad forbidden pattern {pat!r}")


@dataclass(frozen=True)
class Odometer:
    """Adding machine with digit bases ``prefix`` then ``base`` repeated."""

    base: tuple[int, ...] = (2,)
    prefix: tuple[int, ...] = ()

    def __post_init__(self):
        if not self.base or any(b < 2 for b in self.base + self.prefix):
            raise SpecError("odometer bases must be >= 2")
        if any(b > len(SYMBOLS) for b in self.base + self.prefix):
            raise SpecError("odometer bases must be <= 62")

    def base_at(self, level: int) -> int:
        """Base of digit ``level`` (levels start at 1)."""
        if level <= len(self.prefix):
            return self.prefix[level - 1]
        return self.base[(level - 1 - len(self.prefix)) % len(self.base)]

    def modulus(self, level: int) -> int:
        return math.prod(self.base_at(i) for i in range(1, level + 1))


@dataclass(frozen=True)
class FiniteAction:
    points: tuple[str, ...]
    group_table: tuple[tuple[int, ...], ...]
    action_table: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        group = FiniteGroup(self.group_table)
        m = len(self.points)
        if m == 0 or len(set(self.points)) != m:
            raise SpecError("points must be distinct and nonempty")
        for p in self.points:
            if len(p) != 1 or p not in SYMBOLS:
                raise SpecError(f"point names must be single alphanumerics, got {p!r}")
        if len(self.action_table) != group.order:
            raise SpecError("action_table needs one row per group element")
        for row in self.action_table:
            if sorted(row) != list(range(m)):
                raise SpecError("each group element must act bijectively")
        if tuple(self.action_table[0]) != tuple(range(m)):
            raise SpecError("identity must act trivially")
        for g in range(group.order):
            for h in range(group.order):
                gh = group.multiply(g, h)
                for x in range(m):
                    if self.action_table[gh][x] != self.action_table[g][self.action_table[h][x]]:
                        raise SpecError("action_table is not a left action")

    @cached_property
    def group(self) -> FiniteGroup:
        return FiniteGroup(self.group_table)

    def orbits(self) -> list[tuple[int, ...]]:
        seen, out = set(), []
        for x in range(len(self.points)):
            if x in seen:
                continue
            orb = tuple(sorted({row[x] for row in self.action_table}))
            seen.update(orb)
            out.append(orb)
        return out


@dataclass(frozen=True)
class Product:
    factors: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.factors) < 1:
            raise SpecError("product needs at least one factor")
        schemas = {group_schema(f) for f in self.factors}
        if len(schemas) != 1:
            raise SpecError("product factors must share the acting group")
        if any(isinstance(f, Product) for f in self.factors):
            raise SpecError("nested products are not supported")
        kinds = [coordinate_kind(f) for f in self.factors]
        if not all(k == "finite" for k in kinds) and len(set(kinds)) != len(kinds):
            raise SpecError("at most one shift factor and one odometer factor per product")


ActionSpec = Union[FullShift, Subshift, Odometer, FiniteAction, Product]


def coordinate_kind(action) -> str:
    if isinstance(action, (FullShift, Subshift)):
        return "shift2" if action.dimension == 2 else "shift1"
    if isinstance(action, Odometer):
        return "odometer"
    if isinstance(action, FiniteAction):
        return "finite"
    raise SpecError(f"no coordinate kind for {type(action).__name__}")


def group_schema(action) -> GroupSchema:
    if isinstance(action, (FullShift, Subshift)):
        return FreeAbelian(action.dimension)
    if isinstance(action, Odometer):
        return FreeAbelian(1)
    if isinstance(action, FiniteAction):
        return action.group
    if isinstance(action, Product):
        return group_schema(action.factors[0])
    raise SpecError(f"not an action spec: {action!r}")


def alphabet_of(action) -> str:
    if isinstance(action, (FullShift, Subshift)):
        return SYMBOLS[: action.alphabet]
    raise SpecError("only shifts have an alphabet")


# --------------------------------------------------------------------------
# loading


def _table(value, name) -> tuple[tuple[int, ...], ...]:
    try:
        return tuple(tuple(int(x) for x in row) for row in value)
    except TypeError as exc:
        raise SpecError(f"{name} must be a list of integer lists") from exc


def action_from_dict(doc: dict):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise SpecError("action spec needs a 'kind' field")
    kind = str(doc["kind"]).lower().replace("_", "").replace("-", "")
    known = {"kind", "alphabet", "dimension", "forbidden", "base", "prefix",
             "points", "group_table", "action_table", "factors"}
    unknown = set(doc) - known
    if unknown:
        raise SpecError(f"unknown fields {sorted(unknown)}")
    if kind == "fullshift":
        return FullShift(int(doc.get("alphabet", 2)), int(doc.get("dimension", 1)))
    if kind == "subshift":
        dim = int(doc.get("dimension", 1))
        forb = doc.get("forbidden", ())
        if isinstance(forb, str):
            return Subshift(int(doc.get("alphabet", 2)), dim, (), forb)
        pats = tuple(str(p) if dim == 1 else tuple(str(r) for r in p) for p in forb)
        return Subshift(int(doc.get("alphabet", 2)), dim, pats, None)
    if kind == "odometer":
        base = doc.get("base", [2])
        base = (int(base),) if isinstance(base, int) else tuple(int(b) for b in base)
        return Odometer(base, tuple(int(b) for b in doc.get("prefix", ())))
    if kind in ("finite", "finiteaction"):
        pts = doc.get("points")
        if isinstance(pts, int):
            pts = tuple(SYMBOLS[i] for i in range(pts))
        elif pts is None:
            raise SpecError("finite action needs 'points'")
        else:
            pts = tuple(str(p) for p in pts)
        return FiniteAction(pts, _table(doc.get("group_table", [[0]]), "group_table"),
                            _table(doc.get("action_table", [list(range(len(pts)))]), "action_table"))
    if kind == "product":
        return Product(tuple(action_from_dict(f) for f in doc.get("factors", ())))
    raise SpecError(f"unknown action kind {doc['kind']!r}")


def action_to_dict(action) -> dict:
    if isinstance(action, FullShift):
        return {"kind": "fullshift", "alphabet": action.alphabet, "dimension": action.dimension}
    if isinstance(action, Subshift):
        forb = action.builtin if action.builtin else [
            p if action.dimension == 1 else list(p) for p in action.forbidden]
        return {"kind": "subshift", "alphabet": action.alphabet,
                "dimension": action.dimension, "forbidden": forb}
    if isinstance(action, Odometer):
        d = {"kind": "odometer", "base": list(action.base)}
        if action.prefix:
            d["prefix"] = list(action.prefix)
        return d
    if isinstance(action, FiniteAction):
        return {"kind": "finite", "points": list(action.points),
                "group_table": [list(r) for r in action.group_table],
                "action_table": [list(r) for r in action.action_table]}
    if isinstance(action, Product):
        return {"kind": "product", "factors": [action_to_dict(f) for f in action.factors]}
    raise SpecError(f"not an action spec: {action!r}")


def loads_action(text: str):
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"cannot parse action spec: {exc}") from exc
    return action_from_dict(doc)


def load_action(path: str | Path):
    return loads_action(Path(path).read_text())


def dumps_action(action) -> str:
    return yaml.safe_dump(action_to_dict(action), sort_keys=False)


# --------------------------------------------------------------------------
# a few standard systems


def odometer(base: int | Sequence[int] = 2) -> Odometer:
    return Odometer((base,) if isinstance(base, int) else tuple(base))


def cyclic_group_table(n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple((a + b) % n for b in range(n)) for a in range(n))


def finite_action(points: Sequence[str] | int, group_table, action_table) -> FiniteAction:
    if isinstance(points, int):
        points = tuple(SYMBOLS[i] for i in range(points))
    return FiniteAction(tuple(points), _table(group_table, "group_table"),
                        _table(action_table, "action_table"))


def swap_action(names: str = "xy") -> FiniteAction:
    """``Z/2`` swapping two points."""
    return finite_action(tuple(names), cyclic_group_table(2), [[0, 1], [1, 0]])


def trivial_action(n: int) -> FiniteAction:
    return finite_action(n, [[0]], [list(range(n))])


def one_point_compactification_example() -> Product:
    """``(Z u {inf}) x 2^omega`` with ``Z`` translating and the odometer."""
    return Product((Subshift(2, 1, (), AT_MOST_ONE_ONE), Odometer((2,))))


def iter_words(schema: GroupSchema, radius: int) -> Iterator[GroupWord]:
    yield from schema.ball_words(radius)
