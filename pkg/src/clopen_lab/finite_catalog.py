"""Small finite group actions, enumerated up to isomorphism.

Every finite ``G``-set is a disjoint union of transitive ones, and a
transitive ``G``-set is ``G/H`` for a subgroup ``H`` determined up to
conjugacy.  The catalog therefore lists, for each group of small order,
all multisets of conjugacy classes of subgroups whose indices sum to at
most the point bound.
"""

from __future__ import annotations

from itertools import combinations_with_replacement, permutations, product

from .actions import SYMBOLS, FiniteAction, cyclic_group_table


def _table_from_elements(elements, mul) -> tuple[tuple[int, ...], ...]:
    index = {e: i for i, e in enumerate(elements)}
    return tuple(tuple(index[mul(a, b)] for b in elements) for a in elements)


def direct_product_table(t1, t2) -> tuple[tuple[int, ...], ...]:
    elems = list(product(range(len(t1)), range(len(t2))))
    return _table_from_elements(elems, lambda a, b: (t1[a[0]][b[0]], t2[a[1]][b[1]]))


def symmetric_group_table(n: int) -> tuple[tuple[int, ...], ...]:
    """``Sym(n)`` with the identity first; ``(p q)(i) = p(q(i))``."""
    elems = sorted(permutations(range(n)))
    return _table_from_elements(elems, lambda p, q: tuple(p[i] for i in q))


def small_groups(max_order: int = 6) -> dict[str, tuple[tuple[int, ...], ...]]:
    """One multiplication table per isomorphism class of order ``<= max_order`` (up to 7)."""
    if max_order > 7:
        raise ValueError("the catalog covers orders up to 7")
    groups = {f"Z{n}": cyclic_group_table(n) for n in range(1, max_order + 1)}
    if max_order >= 4:
        groups["Z2xZ2"] = direct_product_table(cyclic_group_table(2), cyclic_group_table(2))
    if max_order >= 6:
        groups["S3"] = symmetric_group_table(3)
    return dict(sorted(groups.items(), key=lambda kv: (len(kv[1]), kv[0])))


def subgroups(table) -> list[frozenset[int]]:
    n = len(table)
    out = set()
    for gens in [()] + [(a,) for a in range(n)] + [(a, b) for a in range(n) for b in range(a + 1, n)]:
        H = {0, *gens}
        while True:
            new = {table[a][b] for a in H for b in H} | H
            if new == H:
                break
            H = new
        out.add(frozenset(H))
    return sorted(out, key=lambda h: (len(h), sorted(h)))


def subgroup_classes(table) -> list[frozenset[int]]:
    """Representatives of the conjugacy classes of subgroups."""
    n = len(table)
    inv = [table[a].index(0) for a in range(n)]
    reps, seen = [], set()
    for H in subgroups(table):
        if H in seen:
            continue
        reps.append(H)
        for g in range(n):
            seen.add(frozenset(table[table[g][h]][inv[g]] for h in H))
    return reps


def coset_action(table, H) -> list[tuple[int, ...]]:
    """Action table of ``G`` on the left cosets ``gH``."""
    n = len(table)
    cosets = []
    for g in range(n):
        c = frozenset(table[g][h] for h in H)
        if c not in cosets:
            cosets.append(c)
    index = {c: i for i, c in enumerate(cosets)}
    return [tuple(index[frozenset(table[g][x] for x in c)] for c in cosets) for g in range(n)]


def finite_actions(max_order: int = 6, max_points: int = 5):
    """Yield ``(name, FiniteAction)`` for every action up to isomorphism."""
    for gname, table in small_groups(max_order).items():
        pieces = []
        for H in subgroup_classes(table):
            idx = len(table) // len(H)
            if idx <= max_points:
                pieces.append((idx, tuple(sorted(H)), coset_action(table, H)))
        for k in range(1, max_points + 1):
            for combo in combinations_with_replacement(range(len(pieces)), k):
                size = sum(pieces[i][0] for i in combo)
                if size > max_points:
                    continue
                rows = [[] for _ in range(len(table))]
                offset = 0
                for i in combo:
                    idx, _, act = pieces[i]
                    for g in range(len(table)):
                        rows[g] += [offset + x for x in act[g]]
                    offset += idx
                name = f"{gname}:" + "+".join(f"G/{list(pieces[i][1])}" for i in combo)
                yield name, FiniteAction(tuple(SYMBOLS[10 + i] for i in range(size)), table,
                                         tuple(tuple(r) for r in rows))
