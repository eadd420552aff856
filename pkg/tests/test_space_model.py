"""Clopen grammar, evaluation and the action, checked against brute-force point models."""

from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clopen_lab import clopen as C
from clopen_lab.actions import (FullShift, GroupWord, SpecError, Subshift, action_from_dict,
                                dumps_action, loads_action, odometer, swap_action)
from clopen_lab.space_model import apply_word, canonical, equivalent, is_empty

# --------------------------------------------------------------------------
# brute-force point models


def member(e, point) -> bool:
    """Evaluate an expression at a point given as ``coord -> symbol`` (shift) or an int (odometer)."""
    if isinstance(e, C.Empty):
        return False
    if isinstance(e, C.Full):
        return True
    if isinstance(e, C.Cylinder):
        c = e.at[0]
        return all(point[c + i] == s for i, s in enumerate(e.symbols))
    if isinstance(e, C.DigitCylinder):
        return (point >> (e.level - 1)) & 1 == int(e.digit)
    if isinstance(e, C.Complement):
        return not member(e.inner, point)
    if isinstance(e, C.Union_):
        return member(e.left, point) or member(e.right, point)
    return member(e.left, point) and member(e.right, point)


SHIFT_R = 6  # coordinates -6..6


def shift_points(allowed=None):
    coords = range(-SHIFT_R, SHIFT_R + 1)
    for bits in itertools.product("01", repeat=len(coords)):
        p = dict(zip(coords, bits))
        if allowed is None or allowed(p):
            yield p


def shift_by(point, k):
    """``(sigma^k x)_i = x_(i-k)``: the cylinder ``[s]@c`` moves to ``[s]@(c+k)``."""
    return {i: point.get(i - k, "0") for i in point}


def cylinders_1d(max_coord=2):
    return st.builds(lambda s, c: C.Cylinder(s, (c,)),
                     st.text("01", min_size=1, max_size=2), st.integers(-max_coord, max_coord))


def expressions(leaves):
    return st.recursive(
        leaves,
        lambda kids: st.one_of(
            st.builds(C.Complement, kids),
            st.builds(C.Union_, kids, kids),
            st.builds(C.Intersection, kids, kids)),
        max_leaves=5)


digit_cyls = st.builds(lambda d, k: C.DigitCylinder(str(d), k), st.integers(0, 1), st.integers(1, 4))


# --------------------------------------------------------------------------
# grammar


def test_grammar_examples():
    assert C.parse_clopen("[01]@0") == C.Cylinder("01", (0,))
    assert C.parse_clopen("~[1]@0") == C.Complement(C.Cylinder("1", (0,)))
    full = C.parse_clopen("([0]@0 | [1]@0)")
    assert equivalent(FullShift(2, 1), full, C.FULL)


@pytest.mark.parametrize("bad", ["[01]", "[]@0", "[0]@", "[0]@0 |", "([0]@0", "[2]@0"])
def test_grammar_rejects(bad):
    with pytest.raises(C.ClopenSyntaxError):
        C.parse_clopen(bad, "01")


@settings(max_examples=150, deadline=None)
@given(expressions(st.one_of(cylinders_1d(), digit_cyls, st.just(C.FULL), st.just(C.EMPTY))))
def test_printer_round_trip(e):
    assert C.parse_clopen(C.to_text(e)) == e


def test_type_expressions():
    t = C.parse_type("2*[0]@L1 + [1]@L1")
    assert len(t.summands) == 3 and [c for c, _ in t.summands] == [0, 1, 2]
    assert C.parse_type(str(t)) == t
    with pytest.raises(ValueError):
        C.TypeExpr(((1, C.FULL), (0, C.FULL)))


# --------------------------------------------------------------------------
# evaluation against brute force


@settings(max_examples=120, deadline=None)
@given(expressions(cylinders_1d()))
def test_full_shift_emptiness_matches_brute_force(e):
    brute = not any(member(e, p) for p in shift_points())
    assert is_empty(FullShift(2, 1), e) == brute


@settings(max_examples=80, deadline=None)
@given(expressions(cylinders_1d()), st.integers(-2, 2))
def test_shift_action_matches_brute_force(e, k):
    act = FullShift(2, 1)
    img = apply_word(act, GroupWord.power(0, k), e)
    for p in itertools.islice(shift_points(), 0, None, 37):
        # y in sigma^k(E) iff sigma^-k y in E
        assert member(img, p) == member(e, shift_by(p, -k))


@settings(max_examples=120, deadline=None)
@given(expressions(digit_cyls), st.integers(-5, 5))
def test_odometer_action_matches_brute_force(e, k):
    act = odometer(2)
    img = apply_word(act, GroupWord.power(0, k), e)
    N = 16
    assert is_empty(act, e) == (not any(member(e, x) for x in range(N)))
    for y in range(N):
        assert member(img, y) == member(e, (y - k) % N)


def test_documented_examples():
    act = FullShift(2, 1)
    assert equivalent(act, apply_word(act, GroupWord.parse("g0"), C.parse_clopen("[1]@0")),
                      C.parse_clopen("[1]@1"))
    odo = odometer(2)
    e = C.parse_clopen("[0]@L1 & [0]@L2")
    assert equivalent(odo, apply_word(odo, GroupWord.parse("g0"), e),
                      C.parse_clopen("[1]@L1 & [0]@L2"))
    assert equivalent(odo, apply_word(odo, GroupWord(), e), e)
    assert is_empty(act, C.parse_clopen("[0]@0 & [1]@0"))
    amoo = Subshift(2, 1, (), "at-most-one-one")
    assert is_empty(amoo, C.parse_clopen("[1]@0 & [1]@3"))
    assert not is_empty(amoo, C.parse_clopen("[1]@0"))
    assert not is_empty(odo, C.parse_clopen("~([0]@L1)"))


def test_golden_mean_emptiness_matches_brute_force():
    act = Subshift(2, 1, ("11",), None)
    allowed = lambda p: all(not (p[i] == "1" == p[i + 1]) for i in range(-SHIFT_R, SHIFT_R))
    pts = list(shift_points(allowed))
    for text in ["[11]@0", "[1]@0 & [1]@2", "[101]@-1", "[1]@0 & ~[0]@1", "[010]@0"]:
        e = C.parse_clopen(text)
        assert is_empty(act, e) == (not any(member(e, p) for p in pts)), text


def test_finite_action_evaluation():
    act = swap_action()
    x, y = C.parse_clopen("[x]@0"), C.parse_clopen("[y]@0")
    assert equivalent(act, apply_word(act, GroupWord.parse("g1"), x), y)
    assert equivalent(act, C.Union_(x, y), C.FULL)
    assert is_empty(act, C.Intersection(x, y))


def test_canonical_is_idempotent():
    odo = odometer(2)
    e = C.parse_clopen("([0]@L1 & [0]@L2) | ([0]@L1 & [1]@L2)")
    c = canonical(odo, e)
    assert equivalent(odo, c, C.parse_clopen("[0]@L1"))
    assert canonical(odo, c) == c


def test_action_specs_round_trip_and_errors():
    for doc in [{"kind": "odometer", "base": [2, 3]}, {"kind": "fullshift", "alphabet": 3},
                {"kind": "subshift", "forbidden": ["11"]},
                {"kind": "finite", "points": ["x", "y"], "group_table": [[0, 1], [1, 0]],
                 "action_table": [[0, 1], [1, 0]]}]:
        act = action_from_dict(doc)
        assert loads_action(dumps_action(act)) == act
    for bad in [{"kind": "odometer", "base": [1]}, {"kind": "nope"}, {"alphabet": 2},
                {"kind": "finite", "points": ["x", "y"], "group_table": [[0, 1], [1, 0]],
                 "action_table": [[1, 0], [1, 0]]},
                {"kind": "finite", "points": ["x", "y"], "group_table": [[0, 1], [1, 0]],
                 "action_table": [[0, 1], [0, 0]]}]:
        with pytest.raises(SpecError):
            action_from_dict(bad)
