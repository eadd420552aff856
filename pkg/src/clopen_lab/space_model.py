"""Exact semantics of clopen expressions.

A *window* fixes finitely many coordinates of the space (a box of cells for
shifts, a level for odometers, the point set for finite actions).  The
atoms of a window are the allowed patterns on it; a clopen set known at a
window is a bitmask over those atoms.  Atoms are only ever globally
admissible patterns, so a region is empty iff its mask is zero.

Every action is handled as a product of factors (a plain action is a
one-factor product); windows and atoms of the product are tuples.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product as iproduct

from . import clopen as C
from .actions import (
    AT_MOST_ONE_ONE,
    SYMBOLS,
    FiniteAction,
    FullShift,
    GroupWord,
    Odometer,
    Product,
    SpecError,
    Subshift,
    group_schema,
)

DEFAULT_ATOM_CAP = 2 ** 16


class AtomCapError(RuntimeError):
    """The requested resolution exceeds the configured atom-count cap."""


# --------------------------------------------------------------------------
# factor systems


class _Factor:
    exact = True  # atoms at each window are permuted by the acting group

    def atoms(self, w) -> tuple:
        raise NotImplementedError

    def hull(self, a, b):
        raise NotImplementedError

    def restrict(self, atom, big, small):
        raise NotImplementedError

    def shrink_steps(self, w) -> list:
        raise NotImplementedError

    def act(self, g, w):
        """Return ``(w', images)``: atom ``i`` of ``w`` maps to atom ``images[i]`` of ``w'``."""
        raise NotImplementedError

    def atom_expr(self, w, atom) -> C.ClopenExpr:
        raise NotImplementedError


class _ShiftFactor(_Factor):
    exact = False

    def __init__(self, action: FullShift | Subshift):
        self.action = action
        self.k = action.alphabet
        self.d = action.dimension
        self.builtin = getattr(action, "builtin", None)
        forb = getattr(action, "forbidden", ())
        self.forbidden = [tuple(SYMBOLS.index(s) for s in p) for p in forb] if self.d == 1 else \
            [tuple(tuple(SYMBOLS.index(s) for s in row) for row in p) for p in forb]
        # emptiness is exact except for 2-d subshifts given by forbidden patterns
        self.exact_emptiness = not (self.d == 2 and self.forbidden)
        self.empty_window = (0, -1) if self.d == 1 else ((0, 0), (-1, -1))
        if self.d == 1 and self.forbidden:
            self._build_graph()

    # windows ---------------------------------------------------------------
    def cells(self, w):
        if self.d == 1:
            return [(x,) for x in range(w[0], w[1] + 1)]
        (x0, y0), (x1, y1) = w
        return [(x, y) for y in range(y0, y1 + 1) for x in range(x0, x1 + 1)]

    def is_empty_window(self, w):
        if self.d == 1:
            return w[1] < w[0]
        return w[1][0] < w[0][0] or w[1][1] < w[0][1]

    def hull(self, a, b):
        if self.is_empty_window(a):
            return b
        if self.is_empty_window(b):
            return a
        if self.d == 1:
            return (min(a[0], b[0]), max(a[1], b[1]))
        return ((min(a[0][0], b[0][0]), min(a[0][1], b[0][1])),
                (max(a[1][0], b[1][0]), max(a[1][1], b[1][1])))

    def shrink_steps(self, w):
        if self.is_empty_window(w):
            return []
        if self.d == 1:
            lo, hi = w
            if lo == hi:
                return [self.empty_window]
            return [(lo + 1, hi), (lo, hi - 1)]
        (x0, y0), (x1, y1) = w
        if x0 == x1 and y0 == y1:
            return [self.empty_window]
        out = []
        if x0 < x1:
            out += [((x0 + 1, y0), (x1, y1)), ((x0, y0), (x1 - 1, y1))]
        if y0 < y1:
            out += [((x0, y0 + 1), (x1, y1)), ((x0, y0), (x1, y1 - 1))]
        return out

    def expand(self, w, r):
        if r <= 0:
            return w
        if self.is_empty_window(w):
            return (0, r - 1) if self.d == 1 else ((0, 0), (r - 1, r - 1))
        if self.d == 1:
            return (w[0] - r, w[1] + r)
        return ((w[0][0] - r, w[0][1] - r), (w[1][0] + r, w[1][1] + r))

    @staticmethod
    def action_inverse(g):
        return tuple(-x for x in g)

    def translate_window(self, w, g):
        if self.is_empty_window(w):
            return w
        if self.d == 1:
            return (w[0] + g[0], w[1] + g[0])
        return ((w[0][0] + g[0], w[0][1] + g[1]), (w[1][0] + g[0], w[1][1] + g[1]))

    # admissibility -----------------------------------------------------------
    def _locally_ok_1d(self, pat) -> bool:
        n = len(pat)
        for f in self.forbidden:
            m = len(f)
            for i in range(n - m + 1):
                if pat[i:i + m] == f:
                    return False
        return True

    def _build_graph(self):
        r = max(len(f) for f in self.forbidden)
        self.mem = m = max(r - 1, 1)
        verts = [v for v in iproduct(range(self.k), repeat=m) if self._locally_ok_1d(v)]
        succ = {v: [] for v in verts}
        pred = {v: [] for v in verts}
        for v in verts:
            for s in range(self.k):
                u = v[1:] + (s,)
                if u in succ and self._locally_ok_1d(v + (s,)):
                    succ[v].append(u)
                    pred[u].append(v)

        def infinite(adj):
            alive = set(adj)
            changed = True
            while changed:
                changed = False
                for v in list(alive):
                    if not any(u in alive for u in adj[v]):
                        alive.discard(v)
                        changed = True
            return alive

        self.forward_ok = infinite(succ)
        self.backward_ok = infinite(pred)

    def admissible(self, w, pat) -> bool:
        if self.builtin == AT_MOST_ONE_ONE:
            return sum(1 for s in pat if s == 1) <= 1
        if not self.forbidden:
            return True
        if self.d == 2:
            (x0, y0), (x1, y1) = w
            width, height = x1 - x0 + 1, y1 - y0 + 1
            rows = [pat[j * width:(j + 1) * width] for j in range(height)]
            for f in self.forbidden:
                fh, fw = len(f), len(f[0])
                for j in range(height - fh + 1):
                    for i in range(width - fw + 1):
                        if all(rows[j + a][i:i + fw] == f[a] for a in range(fh)):
                            return False
            return True
        if not self._locally_ok_1d(pat):
            return False
        m = self.mem
        if len(pat) >= m:
            return pat[:m] in self.backward_ok and pat[-m:] in self.forward_ok
        return any(pat + tail in self.backward_ok and pat + tail in self.forward_ok
                   for tail in iproduct(range(self.k), repeat=m - len(pat)))

    def atoms(self, w):
        return _shift_atoms(self, w)

    def restrict(self, atom, big, small):
        if self.is_empty_window(small):
            return ()
        if self.d == 1:
            off = small[0] - big[0]
            return atom[off: off + small[1] - small[0] + 1]
        (bx0, by0), (bx1, _) = big
        width = bx1 - bx0 + 1
        (sx0, sy0), (sx1, sy1) = small
        return tuple(atom[(y - by0) * width + (x - bx0)]
                     for y in range(sy0, sy1 + 1) for x in range(sx0, sx1 + 1))

    def contains(self, big, small):
        return self.hull(big, small) == big

    def act(self, g, w):
        return self.translate_window(w, g), None  # atom patterns are unchanged

    def cylinder(self, node: C.Cylinder):
        syms = tuple(SYMBOLS.index(s) for s in node.symbols)
        if any(s >= self.k for s in syms):
            raise SpecError(f"symbol outside alphabet of size {self.k} in {C.to_text(node)}")
        if self.d == 1:
            if len(node.at) != 1:
                raise SpecError("1-d shift cylinder needs an integer coordinate")
            w = (node.at[0], node.at[0] + len(syms) - 1)
        else:
            if len(node.at) != 2:
                raise SpecError("2-d shift cylinder needs a coordinate pair")
            x, y = node.at
            w = ((x, y), (x + len(syms) - 1, y))
        return w, lambda atom: atom == syms

    def atom_expr(self, w, atom):
        if self.is_empty_window(w):
            return C.FULL
        sym = "".join(SYMBOLS[s] for s in atom)
        if self.d == 1:
            return C.Cylinder(sym, (w[0],))
        (x0, y0), (x1, y1) = w
        width = x1 - x0 + 1
        rows = [C.Cylinder(sym[j * width:(j + 1) * width], (x0, y0 + j))
                for j in range(y1 - y0 + 1)]
        return C.intersection(*rows)


@lru_cache(maxsize=4096)
def _shift_atoms_cached(factor_key, factor, w):
    return tuple(p for p in iproduct(range(factor.k), repeat=len(factor.cells(w)))
                 if factor.admissible(w, p))


def _shift_atoms(factor, w):
    if factor.is_empty_window(w):
        return ((),)
    # atoms are translation invariant: compute on the window moved to the origin
    if factor.d == 1:
        base = (0, w[1] - w[0])
    else:
        base = ((0, 0), (w[1][0] - w[0][0], w[1][1] - w[0][1]))
    return _shift_atoms_cached(factor.action, factor, base)


class _OdometerFactor(_Factor):
    def __init__(self, action: Odometer):
        self.action = action
        self.empty_window = 0

    def hull(self, a, b):
        return max(a, b)

    def contains(self, big, small):
        return big >= small

    def shrink_steps(self, w):
        return [w - 1] if w > 0 else []

    def expand(self, w, r):
        return w + max(r, 0)

    def atoms(self, w):
        return _odometer_atoms(self.action, w)

    def restrict(self, atom, big, small):
        return atom[:small]

    def value(self, atom) -> int:
        v, mult = 0, 1
        for i, dgt in enumerate(atom):
            v += dgt * mult
            mult *= self.action.base_at(i + 1)
        return v

    def digits(self, v, level):
        out = []
        for i in range(level):
            b = self.action.base_at(i + 1)
            out.append(v % b)
            v //= b
        return tuple(out)

    def act(self, g, w):
        return w, _odometer_perm(self.action, w, g[0])

    def cylinder(self, node: C.DigitCylinder):
        b = self.action.base_at(node.level)
        dgt = SYMBOLS.index(node.digit)
        if dgt >= b:
            raise SpecError(f"digit {node.digit} out of range for base {b} at level {node.level}")
        return node.level, lambda atom: atom[node.level - 1] == dgt

    def atom_expr(self, w, atom):
        return C.intersection(*[C.DigitCylinder(SYMBOLS[d], i + 1) for i, d in enumerate(atom)])


@lru_cache(maxsize=256)
def _odometer_atoms(action, level):
    bases = [range(action.base_at(i)) for i in range(1, level + 1)]
    return tuple(iproduct(*bases))


@lru_cache(maxsize=4096)
def _odometer_perm(action, level, k):
    f = _OdometerFactor(action)
    n = action.modulus(level)
    atoms = _odometer_atoms(action, level)
    index = {a: i for i, a in enumerate(atoms)}
    return tuple(index[f.digits((f.value(a) + k) % n, level)] for a in atoms)


class _FiniteFactor(_Factor):
    """Window 0 is the trivial partition, window 1 the points."""

    def __init__(self, action: FiniteAction, index: int):
        self.action = action
        self.index = index
        self.empty_window = 0

    def hull(self, a, b):
        return max(a, b)

    def contains(self, big, small):
        return big >= small

    def shrink_steps(self, w):
        return [0] if w else []

    def expand(self, w, r):
        return 1 if r > 0 else w

    def atoms(self, w):
        return tuple(range(len(self.action.points))) if w else ((),)

    def restrict(self, atom, big, small):
        return atom if small else ()

    def act(self, g, w):
        if not w:
            return w, None
        return w, tuple(self.action.action_table[g])

    def cylinder(self, node: C.Cylinder):
        if len(node.symbols) != 1 or node.symbols not in self.action.points:
            raise SpecError(f"unknown point in {C.to_text(node)}")
        x = self.action.points.index(node.symbols)
        return 1, lambda atom: atom == x

    def atom_expr(self, w, atom):
        if not w:
            return C.FULL
        return C.Cylinder(self.action.points[atom], (self.index,))


# --------------------------------------------------------------------------
# spaces


class Space:
    """The compiled form of an action spec."""

    def __init__(self, action, atom_cap: int = DEFAULT_ATOM_CAP):
        self.action = action
        self.schema = group_schema(action)
        self.atom_cap = atom_cap
        factors = action.factors if isinstance(action, Product) else (action,)
        self.factors = []
        nfin = 0
        for f in factors:
            if isinstance(f, (FullShift, Subshift)):
                self.factors.append(_ShiftFactor(f))
            elif isinstance(f, Odometer):
                self.factors.append(_OdometerFactor(f))
            elif isinstance(f, FiniteAction):
                self.factors.append(_FiniteFactor(f, nfin))
                nfin += 1
            else:
                raise SpecError(f"unsupported factor {f!r}")
        self.exact = all(f.exact for f in self.factors)
        self.empty_window = tuple(f.empty_window for f in self.factors)
        self._atoms = {}
        self._index = {}
        self._proj = {}
        self._perm = {}
        self._eval = {}

    def __repr__(self):
        return f"Space({self.action!r})"

    # windows -----------------------------------------------------------------
    def hull(self, a, b):
        return tuple(f.hull(x, y) for f, x, y in zip(self.factors, a, b))

    def contains(self, big, small) -> bool:
        return all(f.contains(x, y) for f, x, y in zip(self.factors, big, small))

    def overlap_window(self, w, g):
        """Largest window ``w'`` inside ``w`` whose image under ``g^-1`` also lies in ``w``."""
        out = []
        for f, x in zip(self.factors, w):
            if isinstance(f, _ShiftFactor) and not f.is_empty_window(x):
                y = f.translate_window(x, g)
                if f.d == 1:
                    out.append((max(x[0], y[0]), min(x[1], y[1])))
                else:
                    out.append(((max(x[0][0], y[0][0]), max(x[0][1], y[0][1])),
                                (min(x[1][0], y[1][0]), min(x[1][1], y[1][1]))))
                if f.is_empty_window(out[-1]):
                    out[-1] = f.empty_window
            else:
                out.append(x)
        return tuple(out)

    def expand(self, w, r: int):
        """Grow every factor of ``w`` by ``r`` cells or levels."""
        return tuple(f.expand(x, r) for f, x in zip(self.factors, w))

    def depth_window(self, depth):
        """Window for an integer depth: cells ``[0, depth)`` or level ``depth``."""
        if isinstance(depth, tuple) and len(depth) == len(self.factors):
            return depth
        n = int(depth)
        out = []
        for f in self.factors:
            if isinstance(f, _ShiftFactor):
                if n <= 0:
                    out.append(f.empty_window)
                else:
                    out.append((0, n - 1) if f.d == 1 else ((0, 0), (n - 1, n - 1)))
            elif isinstance(f, _OdometerFactor):
                out.append(n)
            else:
                out.append(1)
        return tuple(out)

    def atom_count(self, w) -> int:
        n = 1
        for f, x in zip(self.factors, w):
            n *= len(f.atoms(x))
        return n

    def atoms(self, w) -> tuple:
        try:
            return self._atoms[w]
        except KeyError:
            pass
        count = 1
        for f, x in zip(self.factors, w):
            if isinstance(f, _ShiftFactor) and not f.is_empty_window(x):
                cells = len(f.cells(x))
                if f.k ** cells > 16 * self.atom_cap:
                    raise AtomCapError(f"window {x} has more than {self.atom_cap} atoms")
            count *= len(f.atoms(x))
        if count > self.atom_cap:
            raise AtomCapError(f"window {w} has {count} atoms, cap is {self.atom_cap}")
        atoms = tuple(iproduct(*[f.atoms(x) for f, x in zip(self.factors, w)]))
        self._atoms[w] = atoms
        self._index[w] = {a: i for i, a in enumerate(atoms)}
        return atoms

    def index(self, w) -> dict:
        self.atoms(w)
        return self._index[w]

    def full_mask(self, w) -> int:
        return (1 << len(self.atoms(w))) - 1

    def projection(self, big, small) -> tuple[int, ...]:
        """``proj[i]`` is the index in ``small`` of the restriction of atom ``i`` of ``big``."""
        key = (big, small)
        try:
            return self._proj[key]
        except KeyError:
            pass
        if not self.contains(big, small):
            raise ValueError(f"window {big} does not contain {small}")
        idx = self.index(small)
        proj = tuple(idx[tuple(f.restrict(a, x, y) for f, a, x, y in zip(self.factors, atom, big, small))]
                     for atom in self.atoms(big))
        self._proj[key] = proj
        return proj

    def refine_mask(self, mask: int, small, big) -> int:
        if small == big:
            return mask
        out = 0
        for i, j in enumerate(self.projection(big, small)):
            if mask >> j & 1:
                out |= 1 << i
        return out

    def project_mask(self, mask: int, big, small) -> int:
        out = 0
        proj = self.projection(big, small)
        m, i = mask, 0
        while m:
            if m & 1:
                out |= 1 << proj[i]
            m >>= 1
            i += 1
        return out

    # group action --------------------------------------------------------------
    def element(self, word: GroupWord):
        return self.schema.evaluate(word)

    def act_window(self, g, w):
        """Image window of ``w`` under group element ``g`` and the atom permutation."""
        key = (g, w)
        try:
            return self._perm[key]
        except KeyError:
            pass
        new_w, parts = [], []
        for f, x in zip(self.factors, w):
            y, images = f.act(g, x)
            new_w.append(y)
            parts.append(images)
        new_w = tuple(new_w)
        src = self.atoms(w)
        dst_index = self.index(new_w)
        perm = []
        for atom in src:
            img = tuple(a if p is None else _factor_image(f, x, a, p)
                        for f, x, a, p in zip(self.factors, w, atom, parts))
            perm.append(dst_index[img])
        out = (new_w, tuple(perm))
        self._perm[key] = out
        return out

    # regions ---------------------------------------------------------------------
    def region(self, w, mask: int) -> "Region":
        return Region(self, w, mask)

    def full(self) -> "Region":
        return Region(self, self.empty_window, 1)

    def empty(self) -> "Region":
        return Region(self, self.empty_window, 0)

    def atom_region(self, w, i: int) -> "Region":
        return Region(self, w, 1 << i)

    def evaluate(self, e: C.ClopenExpr) -> "Region":
        try:
            return self._eval[e]
        except KeyError:
            pass
        r = self._evaluate(e)
        if len(self._eval) > 500_000:
            self._eval.clear()
        self._eval[e] = r
        return r

    def _evaluate(self, e: C.ClopenExpr) -> "Region":
        if isinstance(e, C.Empty):
            return self.empty()
        if isinstance(e, C.Full):
            return self.full()
        if isinstance(e, (C.Cylinder, C.DigitCylinder)):
            return self._cylinder(e)
        if isinstance(e, C.Complement):
            return ~self.evaluate(e.inner)
        if isinstance(e, C.Union_):
            return self.evaluate(e.left) | self.evaluate(e.right)
        if isinstance(e, C.Intersection):
            return self.evaluate(e.left) & self.evaluate(e.right)
        raise TypeError(f"not a clopen expression: {e!r}")

    def _route(self, e):
        if isinstance(e, C.DigitCylinder):
            for i, f in enumerate(self.factors):
                if isinstance(f, _OdometerFactor):
                    return i
            raise SpecError("digit cylinder used on an action without an odometer factor")
        if len(e.at) == 2:
            for i, f in enumerate(self.factors):
                if isinstance(f, _ShiftFactor) and f.d == 2:
                    return i
            raise SpecError("2-d cylinder used on an action without a 2-d shift factor")
        for i, f in enumerate(self.factors):
            if isinstance(f, _ShiftFactor) and f.d == 1:
                return i
        fins = [i for i, f in enumerate(self.factors) if isinstance(f, _FiniteFactor)]
        if fins:
            if not 0 <= e.at[0] < len(fins):
                raise SpecError(f"no finite factor {e.at[0]}")
            return fins[e.at[0]]
        raise SpecError(f"cylinder {C.to_text(e)} does not fit this action")

    def _cylinder(self, e) -> "Region":
        i = self._route(e)
        fw, pred = self.factors[i].cylinder(e)
        w = list(self.empty_window)
        w[i] = fw
        w = tuple(w)
        mask = 0
        for j, atom in enumerate(self.atoms(w)):
            if pred(atom[i]):
                mask |= 1 << j
        return Region(self, w, mask)

    def atom_expr(self, w, atom) -> C.ClopenExpr:
        return C.intersection(*[f.atom_expr(x, a) for f, x, a in zip(self.factors, w, atom)])


def _factor_image(f, x, a, perm):
    atoms = f.atoms(x)
    return atoms[perm[atoms.index(a)]]


@dataclass(frozen=True, eq=False)
class Region:
    """A clopen set known exactly at a window."""

    space: Space
    window: tuple
    mask: int

    def at(self, w) -> int:
        """Mask of this region refined to a window containing its own."""
        return self.space.refine_mask(self.mask, self.window, w)

    def _common(self, other):
        w = self.space.hull(self.window, other.window)
        return w, self.at(w), other.at(w)

    def __or__(self, other):
        w, a, b = self._common(other)
        return Region(self.space, w, a | b)

    def __and__(self, other):
        w, a, b = self._common(other)
        return Region(self.space, w, a & b)

    def __sub__(self, other):
        w, a, b = self._common(other)
        return Region(self.space, w, a & ~b)

    def __xor__(self, other):
        w, a, b = self._common(other)
        return Region(self.space, w, a ^ b)

    def __invert__(self):
        return Region(self.space, self.window, self.space.full_mask(self.window) & ~self.mask)

    def is_empty(self) -> bool:
        return self.mask == 0

    def is_full(self) -> bool:
        return self.mask == self.space.full_mask(self.window)

    def __eq__(self, other):
        if not isinstance(other, Region):
            return NotImplemented
        w, a, b = self._common(other)
        return a == b

    def __hash__(self):
        c = self.canonical()
        return hash((c.window, c.mask))

    def issubset(self, other) -> bool:
        w, a, b = self._common(other)
        return a & ~b == 0

    def isdisjoint(self, other) -> bool:
        w, a, b = self._common(other)
        return a & b == 0

    def refine(self, w) -> "Region":
        w = self.space.hull(self.window, w)
        return Region(self.space, w, self.at(w))

    def atom_indices(self, w=None) -> list[int]:
        m = self.mask if w is None else self.at(w)
        out, i = [], 0
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return out

    def count(self, w=None) -> int:
        return bin(self.mask if w is None else self.at(w)).count("1")

    def translate(self, g) -> "Region":
        w, perm = self.space.act_window(g, self.window)
        mask = 0
        for i in self.atom_indices():
            mask |= 1 << perm[i]
        return Region(self.space, w, mask)

    def apply(self, word: GroupWord) -> "Region":
        return self.translate(self.space.element(word))

    def canonical(self) -> "Region":
        """Same set on the smallest window that determines it."""
        sp = self.space
        w, mask = self.window, self.mask
        if mask == 0:
            return Region(sp, sp.empty_window, 0)
        if mask == sp.full_mask(w):
            return Region(sp, sp.empty_window, 1)
        changed = True
        while changed:
            changed = False
            for i, f in enumerate(sp.factors):
                for step in f.shrink_steps(w[i]):
                    small = w[:i] + (step,) + w[i + 1:]
                    pm = sp.project_mask(mask, w, small)
                    if sp.refine_mask(pm, small, w) == mask:
                        w, mask = small, pm
                        changed = True
                        break
        return Region(sp, w, mask)

    def to_expr(self) -> C.ClopenExpr:
        c = self.canonical()
        if c.mask == 0:
            return C.EMPTY
        atoms = self.space.atoms(c.window)
        if c.mask == self.space.full_mask(c.window):
            return C.FULL
        return C.union(*[self.space.atom_expr(c.window, atoms[i]) for i in c.atom_indices()])

    def __repr__(self):
        return f"Region({C.to_text(self.to_expr())})"


# --------------------------------------------------------------------------
# module-level operations


@lru_cache(maxsize=64)
def space_for(action) -> Space:
    return Space(action)


def evaluate(action, e: C.ClopenExpr) -> Region:
    return space_for(action).evaluate(e)


def is_empty(action, e: C.ClopenExpr, depth=None) -> bool:
    """Exact emptiness.  ``depth`` only forces a finer evaluation window."""
    r = evaluate(action, e)
    if depth is not None:
        r = r.refine(r.space.depth_window(depth))
    return r.is_empty()


def canonical(action, e: C.ClopenExpr) -> C.ClopenExpr:
    return evaluate(action, e).to_expr()


def equivalent(action, a: C.ClopenExpr, b: C.ClopenExpr) -> bool:
    return evaluate(action, a) == evaluate(action, b)


def _translate_ast(e, g):
    if isinstance(e, C.Cylinder):
        return C.Cylinder(e.symbols, tuple(x + d for x, d in zip(e.at, g)))
    if isinstance(e, C.Complement):
        return C.Complement(_translate_ast(e.inner, g))
    if isinstance(e, C.Union_):
        return C.Union_(_translate_ast(e.left, g), _translate_ast(e.right, g))
    if isinstance(e, C.Intersection):
        return C.Intersection(_translate_ast(e.left, g), _translate_ast(e.right, g))
    return e


def apply_word(action, word: GroupWord, e: C.ClopenExpr) -> C.ClopenExpr:
    """Expression for the image of ``e`` under the group element ``word``.

    Shift cylinders are translated syntactically; other actions go through
    the exact atom permutation and return the canonical form.
    """
    sp = space_for(action)
    g = sp.element(word)
    if isinstance(action, (FullShift, Subshift)):
        return _translate_ast(e, g)
    if g == sp.schema.identity():
        return e
    return sp.evaluate(e).translate(g).to_expr()
