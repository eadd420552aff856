"""Bounded search for (sub)equidecompositions of clopen sets and of types.

Two backends:

* **matching** -- when the acting group permutes the atoms of a window
  (odometers, finite actions), pieces are atoms, edges join an atom of
  ``A`` to every atom of ``B`` reachable by a word of the ball, and a
  maximum bipartite matching decides the window exactly.
* **piece search** -- for shifts, atoms of a window around ``A`` are
  assigned (word, target copy) pairs depth-first with forward checking;
  images are cylinders on translated windows and every disjointness and
  containment test is an exact region computation.

Neither backend ever claims that no witness exists: running out of budget
returns :class:`Exhausted`.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

from . import clopen as C
from .actions import GroupWord
from .matching import max_matching
from .space_model import AtomCapError, Region, apply_word, is_empty, space_for


@dataclass(frozen=True)
class SearchBudget:
    max_word_length: int = 4
    max_depth: int = 4
    max_nodes: int = 200_000
    time_cap: float = 30.0

    def __post_init__(self):
        if self.max_word_length < 0 or self.max_depth < 0:
            raise ValueError("word length and depth bounds must be >= 0")
        if self.max_nodes <= 0 or self.time_cap <= 0:
            raise ValueError("node and time caps must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Piece:
    copy: int
    to_copy: int
    clopen: C.ClopenExpr
    word: GroupWord

    def to_dict(self) -> dict:
        return {"copy": self.copy, "to_copy": self.to_copy,
                "clopen": C.to_text(self.clopen), "word": str(self.word)}


@dataclass(frozen=True)
class EquidecompositionWitness:
    """Pieces of ``a`` (per copy) and the words moving them into ``b``."""

    pieces: tuple[Piece, ...]
    mode: str = "sub"  # "sub": images inside b, "equi": images exactly b
    budget: dict = field(default_factory=dict)
    backend: str = ""
    graph: dict | None = None  # matching data for DOT export

    def __bool__(self):
        return True

    @property
    def max_word_length(self) -> int:
        return max((len(p.word) for p in self.pieces), default=0)

    def to_dict(self) -> dict:
        return {"pieces": [p.to_dict() for p in self.pieces], "mode": self.mode,
                "budget": self.budget, "backend": self.backend}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> EquidecompositionWitness:
        pieces = tuple(Piece(int(p.get("copy", 0)), int(p.get("to_copy", p.get("copy", 0))),
                             C.parse_clopen(p["clopen"]), GroupWord.parse(p["word"]))
                       for p in doc["pieces"])
        return cls(pieces, doc.get("mode", "sub"), doc.get("budget", {}), doc.get("backend", ""))


@dataclass(frozen=True)
class Exhausted:
    """The budget ran out; this is not a claim that no witness exists."""

    budget: dict
    searched: dict
    reason: str = "budget exhausted"

    def __bool__(self):
        return False

    def to_dict(self) -> dict:
        return {"exhausted": True, "budget": self.budget, "searched": self.searched,
                "reason": self.reason}


# --------------------------------------------------------------------------
# verification -- uses only apply_word and is_empty


def _as_type(x) -> C.TypeExpr:
    if isinstance(x, C.TypeExpr):
        return x
    return C.TypeExpr.of(x)


def verify_witness(action, a, b, witness: EquidecompositionWitness) -> tuple[bool, str]:
    """Re-check a witness from scratch; returns ``(ok, reason)``."""
    a, b = _as_type(a), _as_type(b)
    a_map = dict(a.summands)
    b_map = dict(b.summands)
    pieces = list(witness.pieces)
    images = []
    for p in pieces:
        if p.copy not in a_map:
            return False, f"piece on copy {p.copy} which a does not use"
        if p.to_copy not in b_map:
            return False, f"image on copy {p.to_copy} which b does not use"
        if is_empty(action, p.clopen):
            return False, f"empty piece {C.to_text(p.clopen)}"
        images.append(apply_word(action, p.word, p.clopen))
    for c, ac in a_map.items():
        mine = [p.clopen for p in pieces if p.copy == c]
        for i in range(len(mine)):
            for j in range(i + 1, len(mine)):
                if not is_empty(action, C.Intersection(mine[i], mine[j])):
                    return False, f"pieces overlap on copy {c}"
        cover = C.union(*mine)
        if not is_empty(action, C.Union_(C.difference(ac, cover), C.difference(cover, ac))):
            return False, f"pieces do not partition copy {c}"
    for t, bt in b_map.items():
        mine = [img for p, img in zip(pieces, images) if p.to_copy == t]
        for i in range(len(mine)):
            for j in range(i + 1, len(mine)):
                if not is_empty(action, C.Intersection(mine[i], mine[j])):
                    return False, f"images overlap on copy {t}"
        cover = C.union(*mine)
        if not is_empty(action, C.difference(cover, bt)):
            return False, f"images leave copy {t} of b"
        if witness.mode == "equi" and not is_empty(action, C.difference(bt, cover)):
            return False, f"images do not cover copy {t} of b"
    return True, "ok"


# --------------------------------------------------------------------------
# search


class _Clock:
    def __init__(self, budget: SearchBudget):
        self.budget = budget
        self.start = time.monotonic()
        self.nodes = 0

    def out(self) -> bool:
        return self.nodes >= self.budget.max_nodes or \
            time.monotonic() - self.start > self.budget.time_cap


def _group_pieces(sp, window, assignment, a_copies) -> tuple[Piece, ...]:
    """Merge atom-level assignments ``(copy, atom) -> (word, to_copy)`` into pieces."""
    groups: dict = {}
    for (c, i), (word_idx, word, t) in assignment.items():
        groups.setdefault((c, t, word_idx, word), 0)
        groups[(c, t, word_idx, word)] |= 1 << i
    pieces = []
    for (c, t, _, word), mask in sorted(groups.items(), key=lambda kv: kv[0][:3]):
        pieces.append(Piece(a_copies[c], t, Region(sp, window, mask).to_expr(), word))
    return tuple(pieces)


def _windows(sp, base, max_depth, exact: bool):
    """Candidate windows, each containing ``base``, growing with depth."""
    seen = []
    for d in range(max_depth + 1):
        w = sp.hull(base, sp.depth_window(d)) if exact else sp.expand(base, d)
        if w not in seen:
            seen.append(w)
            yield d, w


def _matching_slice(sp, window, words, a_regions, b_regions, mode):
    """Matching at one window; returns ``(assignment, graph)`` or ``None``."""
    left = [(c, i) for c, r in enumerate(a_regions) for i in r.atom_indices(window)]
    right = [(t, j) for t, r in b_regions for j in r.atom_indices(window)]
    if len(left) > len(right) or (mode == "equi" and len(left) != len(right)):
        return None
    by_atom: dict[int, list[int]] = {}
    for k, (t, j) in enumerate(right):
        by_atom.setdefault(j, []).append(k)
    perms = []
    for word in words:
        w2, perm = sp.act_window(sp.element(word), window)
        perms.append(perm)
    adj, label = [], {}
    for li, (c, i) in enumerate(left):
        nbrs = []
        for wi, perm in enumerate(perms):
            for k in by_atom.get(perm[i], ()):
                if (li, k) not in label:
                    label[(li, k)] = wi
                    nbrs.append(k)
        adj.append(nbrs)
    m = max_matching(len(left), len(right), adj)
    if not m.is_left_perfect():
        return None
    assignment = {}
    for li, k in enumerate(m.left_to_right):
        wi = label[(li, k)]
        assignment[left[li]] = (wi, words[wi], right[k][0])
    atoms = sp.atoms(window)
    names = lambda i: C.to_text(sp.atom_expr(window, atoms[i]))
    graph = {
        "left": [f"a{c}:{names(i)}" for c, i in left],
        "right": [f"b{t}:{names(j)}" for t, j in right],
        "edges": sorted((li, k) for li, nb in enumerate(adj) for k in nb),
        "matched": sorted((li, k) for li, k in enumerate(m.left_to_right)),
    }
    return assignment, graph


def _search_pieces(sp, window, words, a_regions, b_regions, mode, clock):
    """Depth-first assignment of (word, target copy) to each atom of ``a``."""
    left = [(c, i) for c, r in enumerate(a_regions) for i in r.atom_indices(window)]
    b_map = dict(b_regions)
    atom_r = {}
    for c, i in left:
        atom_r[(c, i)] = Region(sp, window, 1 << i)
    # options: (word index, target copy, image region)
    options = {}
    for key in left:
        opts = []
        for wi, word in enumerate(words):
            img = atom_r[key].translate(sp.element(word))
            for t, bt in b_regions:
                if img.issubset(bt):
                    opts.append((wi, t, img))
        options[key] = opts
    if any(not o for o in options.values()):
        return None
    assignment = {}
    used: dict[int, list[Region]] = {t: [] for t, _ in b_regions}

    def feasible(opt):
        wi, t, img = opt
        return all(img.isdisjoint(u) for u in used[t])

    def dfs(remaining):
        if clock.out():
            raise TimeoutError
        if not remaining:
            if mode == "equi":
                for t, bt in b_regions:
                    cover = sp.empty()
                    for r in used[t]:
                        cover = cover | r
                    if cover != bt:
                        return False
            return True
        # most constrained atom first
        best, best_opts = None, None
        for key in remaining:
            opts = [o for o in options[key] if feasible(o)]
            if best_opts is None or len(opts) < len(best_opts):
                best, best_opts = key, opts
                if not opts:
                    return False
        rest = [k for k in remaining if k != best]
        for opt in best_opts:
            clock.nodes += 1
            wi, t, img = opt
            assignment[best] = (wi, words[wi], t)
            used[t].append(img)
            if dfs(rest):
                return True
            used[t].pop()
            del assignment[best]
        return False

    if dfs(left):
        return dict(assignment), None
    return None


def type_leq(action, a, b, budget: SearchBudget | None = None, mode: str = "sub"):
    """Search for a witness of ``[a] <= [b]`` (or ``[a] = [b]`` with ``mode="equi"``)."""
    budget = budget or SearchBudget()
    if mode not in ("sub", "equi"):
        raise ValueError("mode must be 'sub' or 'equi'")
    a, b = _as_type(a), _as_type(b)
    sp = space_for(action)
    a_copies = [c for c, _ in a.summands]
    a_regions = [sp.evaluate(e) for _, e in a.summands]
    b_regions = [(t, sp.evaluate(e)) for t, e in b.summands]
    bd = budget.to_dict()
    if all(r.is_empty() for r in a_regions):
        if mode == "sub" or all(r.is_empty() for _, r in b_regions):
            return EquidecompositionWitness((), mode, bd, "trivial")
    base = sp.empty_window
    for r in a_regions + [r for _, r in b_regions]:
        base = sp.hull(base, r.canonical().window)
    clock = _Clock(budget)
    backend = "matching" if sp.exact else "piece-search"
    searched = {"backend": backend, "word_length": None, "depth": None, "window": None}
    if not sp.exact:
        # for shifts, pieces live on windows around a only
        base = sp.empty_window
        for r in a_regions:
            base = sp.hull(base, r.canonical().window)
    try:
        for L in range(budget.max_word_length + 1):
            words = sp.schema.ball_words(L)
            for d, window in _windows(sp, base, budget.max_depth, sp.exact):
                if clock.out():
                    return Exhausted(bd, searched, "node or time cap reached")
                try:
                    sp.atoms(window)
                except AtomCapError as exc:
                    searched["atom_cap"] = str(exc)
                    break
                regs = [Region(sp, window, r.at(window)) if sp.contains(window, r.window)
                        else r for r in a_regions]
                if sp.exact:
                    clock.nodes += 1
                    found = _matching_slice(sp, window, words, regs, b_regions, mode)
                else:
                    found = _search_pieces(sp, window, words, regs, b_regions, mode, clock)
                searched.update(word_length=L, depth=d, window=repr(window), nodes=clock.nodes)
                if found is not None:
                    assignment, graph = found
                    pieces = _group_pieces(sp, window, assignment, a_copies)
                    return EquidecompositionWitness(pieces, mode, bd, backend, graph)
    except TimeoutError:
        searched["nodes"] = clock.nodes
        return Exhausted(bd, searched, "node or time cap reached")
    searched["nodes"] = clock.nodes
    return Exhausted(bd, searched)


def subequidecompose(action, A: C.ClopenExpr, B: C.ClopenExpr, budget: SearchBudget | None = None):
    return type_leq(action, C.TypeExpr.of(A), C.TypeExpr.of(B), budget, "sub")


def equidecompose(action, A: C.ClopenExpr, B: C.ClopenExpr, budget: SearchBudget | None = None):
    return type_leq(action, C.TypeExpr.of(A), C.TypeExpr.of(B), budget, "equi")


# --------------------------------------------------------------------------
# greedy exhaustion


@dataclass(frozen=True)
class ExhaustionStep:
    word: GroupWord
    piece: C.ClopenExpr
    image: C.ClopenExpr
    residual: C.ClopenExpr


def exhaustion_compare(action, A: C.ClopenExpr, B: C.ClopenExpr, words, depth=None) -> list[ExhaustionStep]:
    """Greedy pieces ``A_n = (A - earlier pieces) & g_n^-1 (B - earlier images)``.

    Computed exactly; ``depth`` only fixes the resolution at which ``A`` is
    first evaluated.
    """
    sp = space_for(action)
    residual = sp.evaluate(A)
    if depth is not None:
        residual = residual.refine(sp.depth_window(depth))
    free = sp.evaluate(B)
    steps = []
    for word in words:
        g = sp.element(word)
        piece = residual & free.translate(sp.schema.inverse(g))
        image = piece.translate(g)
        residual = residual - piece
        free = free - image
        steps.append(ExhaustionStep(word, piece.to_expr(), image.to_expr(), residual.to_expr()))
    return steps


def exhaustion_witness(action, A, B, words) -> EquidecompositionWitness | None:
    steps = exhaustion_compare(action, A, B, words)
    if not steps or steps[-1].residual != C.EMPTY:
        return None
    pieces = tuple(Piece(0, 0, s.piece, s.word) for s in steps if s.piece != C.EMPTY)
    return EquidecompositionWitness(pieces, "sub", {}, "greedy")


# --------------------------------------------------------------------------
# composition


def compose_witnesses(action, first: EquidecompositionWitness,
                      second: EquidecompositionWitness) -> EquidecompositionWitness:
    """From ``[a] <= [b]`` and ``[b] <= [c]`` build ``[a] <= [c]``; word lengths add."""
    sp = space_for(action)
    pieces = []
    for p in first.pieces:
        g = sp.element(p.word)
        pr = sp.evaluate(p.clopen)
        for q in second.pieces:
            if q.copy != p.to_copy:
                continue
            part = pr & sp.evaluate(q.clopen).translate(sp.schema.inverse(g))
            if part.is_empty():
                continue
            pieces.append(Piece(p.copy, q.to_copy, part.to_expr(), q.word * p.word))
    mode = "equi" if first.mode == second.mode == "equi" else "sub"
    return EquidecompositionWitness(tuple(pieces), mode, {}, "composed")
