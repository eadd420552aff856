"""Unit systems, ladders, Krieger extension and conjugation, re-checked from tables and words."""

from __future__ import annotations

import math

import pytest
from sympy.combinatorics import Permutation, PermutationGroup

from clopen_lab import clopen as C
from clopen_lab.actions import GroupWord, finite_action, odometer, swap_action
from clopen_lab.equidecomp import SearchBudget, equidecompose
from clopen_lab.partition_engine import level_partition
from clopen_lab.space_model import apply_word, equivalent
from clopen_lab.unit_systems import (CompatibilityOracle, KriegerError, UnitSystemError,
                                     ample_ladder_step, build_unit_system, conjugate_construct,
                                     dyadic_ladder, krieger_extend, ladder_embeds, orbit_system,
                                     run_ladder, verify_unit_system)

ODO = odometer(2)
P = C.parse_clopen


def sympy_order(us) -> int:
    gens = [Permutation(list(t)) for t in us.generators()]
    return PermutationGroup(gens).order() if gens else 1


def expected_order(us) -> int:
    return math.prod(math.factorial(len(o)) for o in us.orbits)


def test_build_examples():
    p1 = level_partition(ODO, 1)
    us = build_unit_system(p1, [(1, 0)])
    assert us.order == 2 and verify_unit_system(us).ok
    p2 = level_partition(ODO, 2)
    from clopen_lab.partition_engine import invariant_partition

    cycle = invariant_partition(ODO, [GroupWord.parse("g0")], 2).permutation(GroupWord.parse("g0"))
    us = build_unit_system(p2, [cycle])
    assert verify_unit_system(us).ok and len(us.orbits) == 1
    assert us.order == sympy_order(us) == expected_order(us) == 24
    triv = build_unit_system(p2, [])
    assert triv.order == 1 and verify_unit_system(triv).ok


@pytest.mark.parametrize("level", [1, 2, 3])
def test_dyadic_orbit_systems(level):
    us = orbit_system(ODO, level)
    v = verify_unit_system(us)
    assert v.ok, v.problems
    assert us.order == sympy_order(us) == math.factorial(2 ** level)


def test_realized_generators_move_atoms():
    """Each realized transposition, replayed with ``apply_word``, swaps its two atoms."""
    us = orbit_system(ODO, 2)
    amb = us.ambient
    for t in us.generators():
        f = us.realize(t)
        for a in range(us.n):
            src = amb.expr(us.atoms[a])
            img = C.union(*[apply_word(ODO, w, C.intersection(piece, src)) for piece, w in f.pieces()])
            assert equivalent(ODO, img, amb.expr(us.atoms[t[a]]))


def test_ladder_steps():
    act = ODO
    U, V = P("[0]@L1"), P("[1]@L1")
    w = equidecompose(act, U, V, SearchBudget(1, 1))
    base = orbit_system(act, 1, trivial=True)
    step = ample_ladder_step(base, [(U, V, w)])
    assert verify_unit_system(step.system).ok and ladder_embeds([step])
    assert step.system.order == 2
    same = ample_ladder_step(base, [])
    assert same.system is base
    sw = swap_action()
    x, y = P("[x]@0"), P("[y]@0")
    wf = equidecompose(sw, x, y, SearchBudget(1, 1))
    st = ample_ladder_step(orbit_system(sw, 1, trivial=True), [(x, y, wf)])
    assert st.system.order == 2 and len(st.system.orbits) == 1
    steps = run_ladder(base, [[(U, V, w)], []])
    assert len(steps) == 2 and ladder_embeds(steps)


def test_krieger_identity_and_levels():
    ladder = dyadic_ladder((1, 2))
    H = CompatibilityOracle(ODO)
    A = ladder[0]
    same = krieger_extend(A, A, tuple(range(A.n)), A, H)
    assert same.psi == tuple(range(A.n)) and same.verification["ok"]
    res = krieger_extend(A, A, tuple(range(A.n)), ladder[1], H)
    assert res.verification["ok"] and verify_unit_system(res.system).ok
    swap = krieger_extend(A, A, (1, 0), ladder[1], H)
    assert swap.verification["ok"]
    assert swap.verification["condition_1"] and swap.verification["condition_2"]


def test_conjugation():
    H = CompatibilityOracle(ODO)
    rep = conjugate_construct(H, dyadic_ladder((0, 1, 2)), 2)
    assert rep.ok
    assert max(c["max_word_length"] for c in rep.conjugated) <= 2
    triv = [orbit_system(ODO, n, trivial=True) for n in (0, 1)]
    rep = conjugate_construct(H, triv, 1)
    assert rep.ok and rep.phi == tuple(range(len(rep.phi)))


def test_mismatched_ladder_names_the_pair():
    xy = finite_action("xyz", [[0, 1], [1, 0]], [[0, 1, 2], [1, 0, 2]])
    xz = finite_action("xyz", [[0, 1], [1, 0]], [[0, 1, 2], [2, 1, 0]])
    with pytest.raises(KriegerError) as err:
        conjugate_construct(CompatibilityOracle(xz), [orbit_system(xy, 1)], 0)
    assert isinstance(err.value, UnitSystemError)
    assert err.value.pair and all(isinstance(s, str) for s in err.value.pair)
