"""Clopen expression language.

Grammar (whitespace between tokens is ignored)::

    expr := term (('|' | '&') term)*
    term := '~'? atom
    atom := '(' expr ')' | cyl | 'empty' | 'full'
    cyl  := '[' symbol+ ']' '@' coord | '[' digit ']' '@' 'L' level
    coord := int | '(' int ',' int ')'

Binary operators associate to the left with equal precedence.  A shift
cylinder ``[01]@3`` fixes symbol 0 at coordinate 3 and symbol 1 at 4; in
dimension 2 the symbols run along the first axis.  ``[d]@Lk`` fixes digit
``d`` at odometer level ``k``.  For finite actions ``[x]@i`` is the point
``x`` of finite factor ``i``.

Type expressions are ``+``-separated summands, each optionally prefixed by
a multiplicity ``k*``; summands get consecutive copy indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .actions import SYMBOLS


class ClopenSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.column = col


@dataclass(frozen=True)
class Empty:
    pass


@dataclass(frozen=True)
class Full:
    pass


@dataclass(frozen=True)
class Cylinder:
    """Symbols placed from ``at`` along the first axis."""

    symbols: str
    at: tuple[int, ...]


@dataclass(frozen=True)
class DigitCylinder:
    digit: str
    level: int


@dataclass(frozen=True)
class Complement:
    inner: "ClopenExpr"


@dataclass(frozen=True)
class Union_:
    left: "ClopenExpr"
    right: "ClopenExpr"


@dataclass(frozen=True)
class Intersection:
    left: "ClopenExpr"
    right: "ClopenExpr"


ClopenExpr = Union[Empty, Full, Cylinder, DigitCylinder, Complement, Union_, Intersection]

EMPTY = Empty()
FULL = Full()


def union(*parts: ClopenExpr) -> ClopenExpr:
    parts = [p for p in parts if p != EMPTY]
    if not parts:
        return EMPTY
    out = parts[0]
    for p in parts[1:]:
        out = Union_(out, p)
    return out


def intersection(*parts: ClopenExpr) -> ClopenExpr:
    parts = [p for p in parts if p != FULL]
    if not parts:
        return FULL
    out = parts[0]
    for p in parts[1:]:
        out = Intersection(out, p)
    return out


def difference(a: ClopenExpr, b: ClopenExpr) -> ClopenExpr:
    return Intersection(a, Complement(b))


# --------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, text: str, alphabet: str | None):
        self.text = text
        self.pos = 0
        self.alphabet = alphabet

    def error(self, msg, pos=None):
        raise ClopenSyntaxError(msg, self.text, self.pos if pos is None else pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def integer(self) -> int:
        self.skip()
        start = self.pos
        if self.peek() == "-":
            self.pos += 1
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        tok = self.text[start:self.pos]
        if tok in ("", "-"):
            self.error("expected integer", start)
        return int(tok)

    def parse(self) -> ClopenExpr:
        e = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return e

    def expr(self) -> ClopenExpr:
        e = self.term()
        while self.peek() in ("|", "&"):
            op = self.peek()
            self.pos += 1
            r = self.term()
            e = Union_(e, r) if op == "|" else Intersection(e, r)
        return e

    def term(self) -> ClopenExpr:
        if self.peek() == "~":
            self.pos += 1
            return Complement(self.atom())
        return self.atom()

    def atom(self) -> ClopenExpr:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            e = self.expr()
            self.expect(")")
            return e
        if ch == "[":
            return self.cyl()
        for word, node in (("empty", EMPTY), ("full", FULL)):
            if self.text.startswith(word, self.pos):
                self.pos += len(word)
                return node
        self.error("expected '(' or '['" if ch else "unexpected end of input")

    def cyl(self) -> ClopenExpr:
        self.expect("[")
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] in SYMBOLS:
            self.pos += 1
        syms = self.text[start:self.pos]
        if not syms:
            self.error("expected symbol")
        self.expect("]")
        self.expect("@")
        if self.peek() == "L":
            self.pos += 1
            level = self.integer()
            if len(syms) != 1:
                self.error("digit cylinder takes one digit", start)
            if level < 1:
                self.error("levels start at 1")
            return DigitCylinder(syms, level)
        if self.alphabet is not None:
            bad = [s for s in syms if s not in self.alphabet]
            if bad:
                self.error(f"unknown symbol {bad[0]!r} for alphabet {self.alphabet!r}", start)
        if self.peek() == "(":
            self.pos += 1
            x = self.integer()
            self.expect(",")
            y = self.integer()
            self.expect(")")
            return Cylinder(syms, (x, y))
        return Cylinder(syms, (self.integer(),))


def parse_clopen(text: str, alphabet: str | None = None) -> ClopenExpr:
    """Parse a clopen expression; ``alphabet`` restricts shift symbols."""
    return _Parser(text, alphabet).parse()


# --------------------------------------------------------------------------
# printer


def _coord(at):
    return str(at[0]) if len(at) == 1 else f"({at[0]},{at[1]})"


def to_text(e: ClopenExpr) -> str:
    """Canonical printer; ``parse_clopen(to_text(e)) == e``."""
    if isinstance(e, Empty):
        return "empty"
    if isinstance(e, Full):
        return "full"
    if isinstance(e, Cylinder):
        return f"[{e.symbols}]@{_coord(e.at)}"
    if isinstance(e, DigitCylinder):
        return f"[{e.digit}]@L{e.level}"
    if isinstance(e, Complement):
        inner = e.inner
        if isinstance(inner, (Union_, Intersection, Complement)):
            return f"~({to_text(inner)})"
        return "~" + to_text(inner)
    if isinstance(e, (Union_, Intersection)):
        op = " | " if isinstance(e, Union_) else " & "
        right = to_text(e.right)
        if isinstance(e.right, (Union_, Intersection)):
            right = f"({right})"
        return to_text(e.left) + op + right
    raise TypeError(f"not a clopen expression: {e!r}")


def max_level(e: ClopenExpr) -> int:
    if isinstance(e, DigitCylinder):
        return e.level
    if isinstance(e, Complement):
        return max_level(e.inner)
    if isinstance(e, (Union_, Intersection)):
        return max(max_level(e.left), max_level(e.right))
    return 0


# --------------------------------------------------------------------------
# type expressions


@dataclass(frozen=True)
class TypeExpr:
    """A bounded clopen subset of ``X x N``: ``(copy, clopen)`` summands."""

    summands: tuple[tuple[int, ClopenExpr], ...] = ()

    def __post_init__(self):
        copies = [c for c, _ in self.summands]
        if any(c < 0 for c in copies) or copies != sorted(set(copies)):
            raise ValueError("copy indices must be strictly increasing and >= 0")

    @classmethod
    def of(cls, *clopens: ClopenExpr) -> TypeExpr:
        return cls(tuple(enumerate(clopens)))

    def __add__(self, other: TypeExpr) -> TypeExpr:
        return TypeExpr.of(*self.clopens(), *other.clopens())

    def __rmul__(self, n: int) -> TypeExpr:
        return TypeExpr.of(*(self.clopens() * n))

    def clopens(self) -> list[ClopenExpr]:
        return [e for _, e in self.summands]

    def is_zero(self) -> bool:
        return not self.summands

    def __str__(self):
        if not self.summands:
            return "zero"
        return " + ".join(f"({to_text(e)})" if isinstance(e, (Union_, Intersection)) else to_text(e)
                          for _, e in self.summands)


ZERO = TypeExpr()


def _split_top(text: str, sep: str) -> list[str]:
    depth, parts, cur = 0, [], []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def parse_type(text: str, alphabet: str | None = None) -> TypeExpr:
    """Parse ``"2*[0]@L1 + [1]@L1"`` style type expressions."""
    text = text.strip()
    if text in ("", "0", "zero"):
        return ZERO
    clopens = []
    for part in _split_top(text, "+"):
        part = part.strip()
        mult = 1
        head, star, rest = part.partition("*")
        if star and head.strip().isdigit():
            mult, part = int(head), rest
        if mult < 0:
            raise ValueError("negative multiplicity")
        clopens.extend([parse_clopen(part, alphabet)] * mult)
    return TypeExpr.of(*clopens)
