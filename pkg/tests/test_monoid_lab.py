"""Monoid presentations and type-monoid snapshots against brute-force congruence closure."""

from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clopen_lab.actions import finite_action, odometer, swap_action, trivial_action
from clopen_lab.monoid_lab import (FAILS, HOLDS, MonoidPresentation, antisymmetric_quotient,
                                   brute_force_leq, check_property, coinvariants, eq,
                                   finite_action_type_semigroup, grothendieck, leq, monoid_leq,
                                   resolution_type_monoid, verify_fact, verify_verdict)


def pres(text: str) -> MonoidPresentation:
    """``"gens 2; 1 1 = 0 1"`` shorthand for the line-based presentation format."""
    head, *rels = [t.strip() for t in text.split(";")]
    lines = [f"gens: {head.split()[1]}"] + [f"rel: {r}" for r in rels]
    return MonoidPresentation.parse("\n".join(lines))


def degree_slice(g, d):
    return [v for v in itertools.product(range(d + 1), repeat=g) if sum(v) == d]


def classes_by_union_find(p: MonoidPresentation, d: int):
    """Exact classes of degree ``d`` for a presentation with homogeneous relations."""
    vs = degree_slice(p.gens, d)
    parent = {v: v for v in vs}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for v in vs:
        for l, r in p.relations:
            for a, b in ((l, r), (r, l)):
                if all(x >= y for x, y in zip(v, a)):
                    w = tuple(x - y + z for x, y, z in zip(v, a, b))
                    parent[find(v)] = find(w)
    return find


@st.composite
def homogeneous(draw):
    g = draw(st.integers(1, 3))
    rels = []
    for _ in range(draw(st.integers(0, 2))):
        k = draw(st.integers(1, 2))
        l = draw(st.sampled_from(degree_slice(g, k)))
        r = draw(st.sampled_from(degree_slice(g, k)))
        rels.append((l, r))
    return MonoidPresentation(g, tuple(rels))


@settings(max_examples=80, deadline=None)
@given(homogeneous(), st.data())
def test_eq_and_leq_match_union_find(p, data):
    d = data.draw(st.integers(0, 3))
    find = classes_by_union_find(p, d)
    vs = degree_slice(p.gens, d)
    a, b = data.draw(st.sampled_from(vs)), data.draw(st.sampled_from(vs))
    f = eq(p, a, b, d + 2)
    assert f.value == (find(a) == find(b))
    assert verify_fact(p, f)
    # a <= b iff some member of b's class dominates a (smaller-degree a)
    da = data.draw(st.integers(0, d))
    small = data.draw(st.sampled_from(degree_slice(p.gens, da)))
    expected = any(find(m) == find(b) and all(x >= y for x, y in zip(m, small)) for m in vs)
    g = leq(p, small, b, d + 2)
    assert g.value == expected and verify_fact(p, g)


def test_monoid_leq_examples():
    assert monoid_leq(MonoidPresentation.free(2), (1, 0), (1, 1), 3).value is True
    absorb = pres("gens 2; 1 1 = 0 1")
    assert monoid_leq(absorb, (1, 0), (0, 1), 3).value is True
    assert monoid_leq(MonoidPresentation.free(1), (2,), (1,), 3).value is False


def test_property_examples():
    free = MonoidPresentation.free(2, (1, 1))
    assert check_property(free, "unperforated", 3).verdict == HOLDS
    absorb = pres("gens 2; 1 1 = 0 1")
    v = check_property(absorb, "stably-finite", 4)
    assert v.verdict == FAILS and verify_verdict(absorb, v)
    torsion = pres("gens 2; 2 0 = 0 2")
    v = check_property(torsion, "unperforated", 4)
    assert v.verdict == FAILS and verify_verdict(torsion, v)
    assert v.certificate["params"]["n"] == 2
    assert check_property(torsion, "cancellative", 4).verdict == HOLDS
    with pytest.raises(ValueError):
        check_property(free, "nonsense", 2)


def test_grothendieck_examples():
    assert grothendieck(MonoidPresentation.free(2)).group.describe() == "Z + Z"
    assert grothendieck(pres("gens 2; 2 0 = 0 2")).group.describe() == "Z + Z/2"
    assert grothendieck(pres("gens 1; 2 = 1")).group.describe() == "0"


def test_antisymmetric_quotient():
    q = antisymmetric_quotient(MonoidPresentation.free(2), (1, 1), 3)
    assert q.generators == (0, 1) and not q.collapsed
    q = antisymmetric_quotient(pres("gens 2; 2 0 = 0 1; 0 2 = 1 0"), (1, 1), 3)
    assert ((1, 0), (0, 1)) in q.collapsed or ((0, 1), (1, 0)) in q.collapsed


def test_coinvariants():
    for n in range(1, 5):
        c = coinvariants(odometer(2), n)
        assert (c.rank, c.torsion) == (1, ())
    assert coinvariants(swap_action(), 1).rank == 1
    assert coinvariants(trivial_action(3), 1).rank == 3


def test_resolution_type_monoid():
    snap = resolution_type_monoid(odometer(2), 2, 1)
    assert snap.reduced.gens == 1 and snap.element((1, 1, 1, 1)) == (4,)
    snap = resolution_type_monoid(trivial_action(2), 1, 1)
    assert snap.reduced.gens == 2 and not snap.reduced.relations


def test_finite_type_semigroup_closed_form():
    sw = swap_action()
    ts = finite_action_type_semigroup(sw)
    assert ts.of_subset([0]) == ts.of_subset([1])
    tr = finite_action_type_semigroup(trivial_action(2))
    assert tr.of_subset([0]) != tr.of_subset([1])
    # Z/2 on three points: a swap plus a fixed point
    fa = finite_action(["x", "y", "z"], [[0, 1], [1, 0]], [[0, 1, 2], [1, 0, 2]])
    ts = finite_action_type_semigroup(fa)
    pairs = list(itertools.combinations(range(3), 2))
    assert len({ts.of_subset(s) for s in pairs}) == 2
    for A, B in itertools.product(pairs, repeat=2):
        assert brute_force_leq(fa, A, B, equi=True) == (ts.of_subset(A) == ts.of_subset(B))
