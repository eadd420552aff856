"""Partitions, invariant-measure LPs, piece search and Z-subsets against brute-force oracles."""

from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from clopen_lab import clopen as C
from clopen_lab.actions import FullShift, GroupWord, Subshift, odometer, swap_action
from clopen_lab.equidecomp import (SearchBudget, equidecompose, exhaustion_compare, subequidecompose,
                                   type_leq, verify_witness)
from clopen_lab.partition_engine import Refusal, atom_image, invariant_partition, level_partition
from clopen_lab.space_model import equivalent, is_empty
from clopen_lab.states_lp import (CoveringCertificate, NoneFound, ZeroMeasureState, build_polytope,
                                  comparison_gap, order_unit_test, paradox_search,
                                  unique_ergodicity_gap, verify_covering, verify_zero_state)
from clopen_lab.zsubset import (ComplementOf, HallViolation, ProgressionUnion, WeissSet, ZWitness,
                                density_bounds, parse_zsubset, verify_zwitness, zsubset_equidecompose)

P = C.parse_clopen
ODO = odometer(2)
SHIFT = FullShift(2, 1)


def odo_cylinder(x: int, level: int) -> C.ClopenExpr:
    """Cylinder of the integer ``x`` mod ``2^level`` (digit ``k`` is bit ``k - 1``)."""
    e = C.FULL
    for k in range(1, level + 1):
        d = C.DigitCylinder(str((x >> (k - 1)) & 1), k)
        e = d if k == 1 else C.Intersection(e, d)
    return e


# --------------------------------------------------------------------------
# partitions


def test_partition_sizes():
    assert len(level_partition(ODO, 3)) == 8
    sp = level_partition(SHIFT, 3)
    assert len(sp) == 8
    amoo = level_partition(Subshift(2, 1, (), "at-most-one-one"), 3)
    assert sorted(amoo.label(i) for i in range(len(amoo))) == sorted(
        ["[000]@0", "[100]@0", "[010]@0", "[001]@0"])


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_odometer_permutation_is_carry_arithmetic(level):
    inv = invariant_partition(ODO, [GroupWord.parse("g0")], level)
    part = inv.partition
    perm = inv.permutation(GroupWord.parse("g0"))
    index = {x: next(iter(part.evaluate(odo_cylinder(x, level)))) for x in range(2 ** level)}
    for x in range(2 ** level):
        assert perm[index[x]] == index[(x + 1) % 2 ** level]
        assert atom_image(ODO, GroupWord.parse("g0"), part, index[x]).atom == index[(x + 1) % 2 ** level]


def test_invariant_partition_other_cases():
    inv = invariant_partition(swap_action(), [GroupWord.parse("g1")], 1)
    assert len(inv.partition) == 2 and inv.permutation(GroupWord.parse("g1")) == (1, 0)
    ref = invariant_partition(SHIFT, [GroupWord.parse("g0")], 2)
    assert isinstance(ref, Refusal) and not ref
    part = level_partition(swap_action(), 1)
    assert atom_image(swap_action(), GroupWord(), part, 0).atom == 0


def test_shift_atom_image_translates():
    part = level_partition(SHIFT, (( 0, 1),))
    i = next(iter(part.evaluate(P("[01]@0"))))
    img = atom_image(SHIFT, GroupWord.parse("g0"), part, i)
    assert equivalent(SHIFT, img.cylinder, P("[01]@1"))


# --------------------------------------------------------------------------
# measure polytopes, checked against an independently assembled scipy LP


def shift_lp(width):
    """Shift-invariant probability vectors on words of length ``width`` (marginal consistency)."""
    words = ["".join(w) for w in itertools.product("01", repeat=width)]
    A_eq, b_eq = [], []
    for u in itertools.product("01", repeat=width - 1):
        u = "".join(u)
        A_eq.append([int(w[:-1] == u) - int(w[1:] == u) for w in words])
        b_eq.append(0)
    A_eq.append([1] * len(words))
    b_eq.append(1)
    return words, A_eq, b_eq


def member(e, w: str) -> bool:
    if isinstance(e, C.Cylinder):
        c = e.at[0]
        return w[c:c + len(e.symbols)] == e.symbols
    if isinstance(e, C.Complement):
        return not member(e.inner, w)
    if isinstance(e, C.Union_):
        return member(e.left, w) or member(e.right, w)
    if isinstance(e, C.Intersection):
        return member(e.left, w) and member(e.right, w)
    return isinstance(e, C.Full)


leaf = st.builds(lambda s, c: C.Cylinder(s, (c,)), st.text("01", min_size=1, max_size=2), st.integers(0, 1))
exprs = st.recursive(leaf, lambda k: st.one_of(st.builds(C.Complement, k), st.builds(C.Union_, k, k),
                                               st.builds(C.Intersection, k, k)), max_leaves=4)


@settings(max_examples=60, deadline=None)
@given(exprs, exprs)
def test_full_shift_gap_matches_scipy(A, B):
    words, A_eq, b_eq = shift_lp(3)
    c = [int(member(A, w)) - int(member(B, w)) for w in words]
    ref = linprog([-x for x in c], A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * len(words), method="highs")
    rep = comparison_gap(SHIFT, A, B, 3)
    assert rep.certificate_ok
    assert abs(float(rep.value) + ref.fun) < 1e-9


def test_polytope_examples():
    poly = build_polytope(ODO, 2)
    assert poly.n_vars == 4
    res = linprog([0] * 4, A_eq=poly.A_eq, b_eq=poly.b_eq, bounds=[(0, None)] * 4)
    assert res.status == 0 and all(abs(v - 0.25) < 1e-9 for v in res.x)
    for i in range(4):  # uniqueness: every coordinate pinned
        lo = linprog([int(j == i) for j in range(4)], A_eq=poly.A_eq, b_eq=poly.b_eq)
        hi = linprog([-int(j == i) for j in range(4)], A_eq=poly.A_eq, b_eq=poly.b_eq)
        assert abs(lo.fun - 0.25) < 1e-9 and abs(-hi.fun - 0.25) < 1e-9
    swap = build_polytope(swap_action(), 1)
    assert swap.contains_point([Fraction(1, 2)] * 2) and not swap.contains_point([1, 0])


def test_gap_examples():
    assert comparison_gap(ODO, P("[0]@L1 & [0]@L2"), P("[1]@L1"), 2).value == Fraction(-1, 4)
    assert comparison_gap(SHIFT, P("[1]@0"), P("[0]@0"), 1).value == 1
    assert comparison_gap(SHIFT, P("[01]@0"), P("[01]@0"), 2).value == 0
    assert unique_ergodicity_gap(ODO, P("[0]@L1"), 1)[:2] == (Fraction(1, 2), Fraction(1, 2))
    assert unique_ergodicity_gap(SHIFT, P("[1]@0"), 1)[:2] == (0, 1)
    assert unique_ergodicity_gap(SHIFT, C.FULL, 1)[:2] == (1, 1)


def test_order_units():
    cert = order_unit_test(ODO, P("[1]@L1"), SearchBudget(1, 1))
    assert isinstance(cert, CoveringCertificate) and verify_covering(ODO, P("[1]@L1"), cert)
    assert {str(w) for w in cert.words} <= {"e", "g0", "g0^-1"}
    full = order_unit_test(SHIFT, C.FULL)
    assert isinstance(full, CoveringCertificate) and len(full.words) == 1
    amoo = Subshift(2, 1, (), "at-most-one-one")
    z = order_unit_test(amoo, P("[1]@0"), SearchBudget(2, 2))
    assert isinstance(z, ZeroMeasureState) and verify_zero_state(amoo, P("[1]@0"), z)


def test_paradox_search_finds_none_when_a_state_exists():
    r = paradox_search(ODO, C.TypeExpr(((0, C.FULL),)), 2, SearchBudget(2, 2))
    assert isinstance(r, NoneFound) and r.normalised_state.startswith("feasible")
    r = paradox_search(swap_action(), C.TypeExpr(((0, P("[x]@0")),)), 2, SearchBudget(1, 1))
    assert isinstance(r, NoneFound)


# --------------------------------------------------------------------------
# piece search


def test_subequidecomposition_examples():
    A, B = P("[0]@L1 & [0]@L2"), P("[1]@L1")
    w = subequidecompose(ODO, A, B, SearchBudget(1, 2))
    assert w and verify_witness(ODO, A, B, w)[0] and w.max_word_length == 1
    w = subequidecompose(ODO, B, B, SearchBudget(0, 1))
    assert w and all(len(p.word) == 0 for p in w.pieces)
    w = subequidecompose(SHIFT, P("[1]@0"), P("[1]@5"), SearchBudget(5, 1))
    assert w and [str(p.word) for p in w.pieces] == ["g0^5"]
    assert not subequidecompose(SHIFT, C.FULL, P("[1]@0"), SearchBudget(2, 2, time_cap=5))


def test_type_leq_examples():
    zero, L0, L1 = P("[0]@L1"), P("[0]@L1"), P("[1]@L1")
    a = C.TypeExpr(((0, zero), (1, zero)))
    b = C.TypeExpr(((0, L0), (1, L1)))
    w = type_leq(ODO, a, b, SearchBudget(1, 1))
    assert w and verify_witness(ODO, a, b, w)[0]
    assert type_leq(ODO, C.TypeExpr(()), b, SearchBudget(0, 0))
    sw = swap_action()
    w = type_leq(sw, C.TypeExpr(((0, P("[x]@0")),)), C.TypeExpr(((0, P("[y]@0")),)), SearchBudget(1, 1))
    assert w and verify_witness(sw, P("[x]@0"), P("[y]@0"), w)[0]
    e = equidecompose(ODO, P("[0]@L1"), P("[1]@L1"), SearchBudget(1, 1))
    assert e and e.mode == "equi"


def test_verifier_rejects_tampered_witnesses():
    A, B = P("[0]@L1 & [0]@L2"), P("[1]@L1")
    w = subequidecompose(ODO, A, B, SearchBudget(1, 2))
    bad = type(w)(tuple(type(p)(p.copy, p.to_copy, p.clopen, GroupWord()) for p in w.pieces), w.mode)
    assert not verify_witness(ODO, A, B, bad)[0]


def test_exhaustion_compare():
    sp_words = [GroupWord(), GroupWord.parse("g0")]
    A, B = P("[0]@L1 & [0]@L2"), P("[1]@L1")
    steps = exhaustion_compare(ODO, A, B, sp_words, depth=2)
    assert is_empty(ODO, steps[0].piece)
    assert equivalent(ODO, steps[1].piece, A) and is_empty(ODO, steps[1].residual)
    steps = exhaustion_compare(ODO, P("[0]@L1"), C.FULL, [GroupWord()])
    assert len(steps) == 1 and is_empty(ODO, steps[0].residual)
    steps = exhaustion_compare(SHIFT, P("[0]@0"), P("[1]@0"), [GroupWord()])
    assert all(equivalent(SHIFT, s.residual, P("[0]@0")) for s in steps)


# --------------------------------------------------------------------------
# subsets of Z


def brute_density(spec, period):
    return Fraction(sum(1 for x in range(period) if x in spec), period)


def test_zsubset_witnesses():
    ev, od = parse_zsubset("evens"), parse_zsubset("odds")
    w = zsubset_equidecompose(ev, od, [1], 8)
    assert isinstance(w, ZWitness) and [s for s, _ in w.pieces] == [1]
    assert verify_zwitness(ev, od, [1], w)
    A, B = parse_zsubset("4n"), parse_zsubset("2n")
    w = zsubset_equidecompose(A, B, [0], 8)
    assert isinstance(w, ZWitness) and verify_zwitness(A, B, [0], w)


def test_zsubset_hall_violation():
    A, B = WeissSet(), ComplementOf(WeissSet())
    v = zsubset_equidecompose(A, B, [-1, 0, 1], 4096)
    assert isinstance(v, HallViolation)
    assert v.recount(B) == v.neighbourhood < len(v.F)
    assert all(x in A for x in v.F)


@pytest.mark.parametrize("m", range(0, 7))
def test_weiss_truncation_density(m):
    spec = WeissSet(m)
    exact = brute_density(spec, 2 ** (m + 2))
    assert exact == Fraction(1, 2) - Fraction(1, 2 ** (m + 1))
    assert density_bounds(spec, 1) == (exact, exact)
    assert spec.progressions() and all(x in spec.progressions() for x in range(-64, 64) if x in spec)


def test_density_bounds_examples():
    assert density_bounds(parse_zsubset("2n"), 4) == (Fraction(1, 2),) * 2
    assert density_bounds(ComplementOf(ProgressionUnion(((4, 0),))), 4) == (Fraction(3, 4),) * 2
    lo, hi = density_bounds(WeissSet(), 1024)
    assert lo <= Fraction(1, 2) <= hi and hi - lo <= Fraction(1, 128)
