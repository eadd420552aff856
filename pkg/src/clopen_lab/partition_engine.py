"""Finite partitions into atoms and how group words move them."""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import clopen as C
from .actions import GroupWord
from .space_model import AtomCapError, Region, Space, space_for

__all__ = [
    "AtomCapError",
    "AtomImage",
    "FinitePartition",
    "Refusal",
    "atom_image",
    "invariant_partition",
    "level_partition",
]


@dataclass(frozen=True)
class FinitePartition:
    """The atoms of one window; atom order is the canonical lexicographic one."""

    action: object
    window: tuple

    @property
    def space(self) -> Space:
        return space_for(self.action)

    @property
    def atoms(self) -> tuple:
        return self.space.atoms(self.window)

    def __len__(self):
        return len(self.atoms)

    def atom_region(self, i: int) -> Region:
        return self.space.atom_region(self.window, i)

    def atom_expr(self, i: int) -> C.ClopenExpr:
        return self.space.atom_expr(self.window, self.atoms[i])

    def label(self, i: int) -> str:
        return C.to_text(self.atom_expr(i))

    def evaluate(self, e: C.ClopenExpr) -> frozenset[int]:
        """Atom set of ``e``; the window must determine ``e``."""
        r = self.space.evaluate(e)
        if not self.space.contains(self.window, r.window):
            r = r.canonical()
            if not self.space.contains(self.window, r.window):
                raise ValueError(f"{C.to_text(e)} is not determined at window {self.window}")
        return frozenset(Region(self.space, r.window, r.mask).atom_indices(self.window))

    def region_of(self, atoms) -> Region:
        mask = 0
        for i in atoms:
            mask |= 1 << i
        return Region(self.space, self.window, mask)

    def to_json(self) -> str:
        return json.dumps([self.label(i) for i in range(len(self))])


def level_partition(action, depth, atom_cap: int | None = None) -> FinitePartition:
    """Canonical partition at an integer depth (or an explicit window tuple)."""
    sp = space_for(action)
    w = sp.depth_window(depth)
    if atom_cap is not None:
        count = sp.atom_count(w)
        if count > atom_cap:
            raise AtomCapError(f"window {w} has {count} atoms, cap is {atom_cap}")
    sp.atoms(w)
    return FinitePartition(action, w)


@dataclass(frozen=True)
class Refusal:
    """No finite window algebra is invariant under the requested words."""

    reason: str

    def __bool__(self):
        return False


@dataclass(frozen=True)
class InvariantPartition:
    partition: FinitePartition
    permutations: dict  # str(word) -> tuple atom permutation

    def permutation(self, word: GroupWord) -> tuple[int, ...]:
        return self.permutations[str(word)]


def invariant_partition(action, words, depth) -> InvariantPartition | Refusal:
    words = list(words)
    if not words:
        raise ValueError("word set must be nonempty")
    sp = space_for(action)
    identity = sp.schema.evaluate(GroupWord())
    if not sp.exact and any(sp.element(w) != identity for w in words):
        return Refusal("shift actions admit no invariant finite partition; use the piece-search backend")
    part = level_partition(action, depth)
    perms = {}
    for w in words:
        g = sp.element(w)
        if g == identity:
            perms[str(w)] = tuple(range(len(part)))
            continue
        new_w, perm = sp.act_window(g, part.window)
        assert new_w == part.window
        perms[str(w)] = perm
    return InvariantPartition(part, perms)


@dataclass(frozen=True)
class AtomImage:
    source: int
    word: GroupWord
    atom: int | None  # image atom in the exact case
    cylinder: C.ClopenExpr | None = None  # translated cylinder in the shift case
    window: tuple | None = None
    refined: tuple[int, ...] | None = None  # atoms of a caller-supplied finer partition


def atom_image(action, word: GroupWord, p: FinitePartition, atom: int,
               finer: FinitePartition | None = None) -> AtomImage:
    if not 0 <= atom < len(p):
        raise IndexError(f"atom {atom} not in partition of {len(p)} atoms")
    sp = p.space
    g = sp.element(word)
    new_w, perm = sp.act_window(g, p.window)
    if new_w == p.window:
        return AtomImage(atom, word, perm[atom])
    img = Region(sp, new_w, 1 << perm[atom])
    refined = None
    if finer is not None:
        if not sp.contains(finer.window, new_w):
            raise ValueError("finer partition does not cover the translated window")
        refined = tuple(img.atom_indices(finer.window))
    return AtomImage(atom, word, None, sp.atom_expr(new_w, sp.atoms(new_w)[perm[atom]]), new_w, refined)
