"""Acceptance criteria, one test per criterion.

Expected values come from independent oracles (direct counting, sympy's
Smith normal form, brute-force enumeration), never from the code under
test.
"""

from __future__ import annotations

import itertools
import json
import time
from fractions import Fraction
from math import comb

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from sympy import Matrix
from sympy.matrices.normalforms import smith_normal_form as sympy_snf

from clopen_lab import clopen as C
from clopen_lab.actions import FullShift, GroupWord, Odometer, Product, Subshift, odometer
from clopen_lab.equidecomp import SearchBudget, equidecompose, type_leq, verify_witness
from clopen_lab.finite_catalog import finite_actions
from clopen_lab.monoid_lab import (FAILS, HOLDS, PROPERTIES, MonoidPresentation, brute_force_leq,
                                   check_property, coinvariants, finite_action_presentation,
                                   finite_action_type_semigroup, grothendieck, pi_criterion,
                                   verify_verdict)
from clopen_lab.partition_engine import level_partition
from clopen_lab.space_model import apply_word, equivalent
from clopen_lab.states_lp import (EXACT, INFEASIBLE, InvariantViolation, ParadoxWitness,
                                  normalised_state, paradox_search)
from clopen_lab.sweeps import comparison_sweep
from clopen_lab.unit_systems import (CompatibilityOracle, ample_ladder_step, dyadic_ladder,
                                     krieger_extend, orbit_system, verify_unit_system)
from clopen_lab.zsubset import HallViolation, WeissSet, density_bounds, parse_zsubset, \
    zsubset_equidecompose


def snf_invariants(rows, n):
    """(rank, torsion) of Z^n / rowspan via sympy."""
    if not rows:
        return n, ()
    D = sympy_snf(Matrix(rows))
    diag = [abs(int(D[i, i])) for i in range(min(D.shape))]
    nonzero = [d for d in diag if d]
    return n - len(nonzero), tuple(d for d in nonzero if d > 1)


# --------------------------------------------------------------------------
# 1. odometer comparison completeness


def test_criterion_1_odometer_comparison_completeness():
    start = time.perf_counter()
    rep = comparison_sweep(odometer(2), 3, SearchBudget(8, 6))
    elapsed = time.perf_counter() - start
    # oracle: the unique invariant measure is uniform, so the gap is negative iff |A| < |B|
    expected = (4 ** 8 - comb(16, 8)) // 2
    assert rep.pairs == 256 * 256
    assert rep.premise_pairs == expected
    assert rep.successes == rep.premise_pairs, rep.failures[:5]
    assert rep.max_word_length <= 8 and rep.max_depth <= 6
    assert elapsed <= 60.0, f"sweep took {elapsed:.1f}s"


# --------------------------------------------------------------------------
# 2. Tarski consistency invariant


def _corpus_actions():
    acts = [odometer(2), odometer(3), FullShift(2, 1), Subshift(2, 1, ("11",), None),
            Subshift(2, 1, (), "at-most-one-one")]
    acts += [fa for _, fa in itertools.islice(finite_actions(6, 4), 0, None, 7)]
    return acts


CORPUS = _corpus_actions()


def _random_clopen(action, draw_bits):
    p = level_partition(action, 2 if not isinstance(action, Odometer) else 2)
    n = len(p)
    mask = draw_bits % (1 << n) or 1
    return p.region_of([i for i in range(n) if mask >> i & 1]).to_expr()


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, len(CORPUS) - 1), st.integers(1, 2 ** 16), st.integers(1, 2))
def test_criterion_2_tarski_consistency(ai, bits, max_n):
    action = CORPUS[ai]
    b = C.parse_type(C.to_text(_random_clopen(action, bits)))
    budget = SearchBudget(2, 2, 20_000, 5.0)
    try:
        res = paradox_search(action, b, max_n=max_n, budget=budget, depth=2)
    except InvariantViolation as exc:  # the tool's own cross-check fired
        pytest.fail(f"paradox and exact normalised state for the same b: {exc}")
    if isinstance(res, ParadoxWitness):
        n = res.n
        assert verify_witness(action, (n + 1) * b, n * b, res.witness)[0]
        lp, poly = normalised_state(action, b, 2)
        assert lp.status == INFEASIBLE or poly.tag != EXACT


# --------------------------------------------------------------------------
# 3. Weiss obstruction


def _weiss_member(x, m):
    return any((x - (2 ** k - 1)) % 2 ** (k + 2) == 0 for k in range(m))


def test_criterion_3_weiss_obstruction():
    start = time.perf_counter()
    for m in range(0, 9):
        period = 2 ** (m + 2)
        counted = Fraction(sum(_weiss_member(x, m) for x in range(period)), period)
        assert counted == Fraction(1, 2) - Fraction(1, 2 ** (m + 1))
        lo, hi = density_bounds(WeissSet(m), 4096)
        assert lo == hi == counted
    A, B = parse_zsubset("weiss"), parse_zsubset("complement:weiss")
    for L in (1, 2, 3):
        S = list(range(-L, L + 1))
        res = zsubset_equidecompose(A, B, S, 4096)
        assert isinstance(res, HallViolation)
        assert all(abs(x) <= 4096 for x in res.F)
        # independent recount: |N(F) in B| < |F|, with F inside A
        assert all(x in A for x in res.F)
        nb = {x + s for x in res.F for s in S if (x + s) in B}
        assert len(nb) == res.neighbourhood < len(res.F)
    assert time.perf_counter() - start <= 30.0


# --------------------------------------------------------------------------
# 4. finite-action oracle equivalence


def test_criterion_4_finite_action_oracle_equivalence():
    budget = SearchBudget(1, 1, 20_000, 5.0)
    checked = disagreements = 0
    for name, fa in finite_actions(6, 5):
        p = level_partition(fa, 1)
        n = len(p)
        sg = finite_action_type_semigroup(fa)
        subsets = [frozenset(i for i in range(n) if m >> i & 1) for m in range(1 << n)]
        exprs = [p.region_of(s).to_expr() for s in subsets]
        for i, j in itertools.product(range(len(subsets)), repeat=2):
            A, B = subsets[i], subsets[j]
            brute = brute_force_leq(fa, A, B)
            brute_eq = brute_force_leq(fa, A, B, equi=True)
            matching = bool(type_leq(fa, exprs[i], exprs[j], budget))
            matching_eq = bool(equidecompose(fa, exprs[i], exprs[j], budget))
            closed = sg.leq([int(x in A) for x in range(n)], [int(x in B) for x in range(n)])
            closed_eq = sg.of_subset(A) == sg.of_subset(B)
            checked += 1
            if not (brute == matching == closed and brute_eq == matching_eq == closed_eq):
                disagreements += 1
        pres = finite_action_presentation(fa)
        for prop in ("unperforated", "cancellative"):
            v = check_property(pres, prop, 4)
            assert v.verdict == HOLDS, (name, prop, v.to_dict())
    assert checked > 0 and disagreements == 0


# --------------------------------------------------------------------------
# 5. coinvariants, Grothendieck group, pi-criterion


PRESENTATION_CORPUS = [
    MonoidPresentation.free(1), MonoidPresentation.free(2),
    MonoidPresentation(2, (((2, 0), (0, 2)),)),
    MonoidPresentation(2, (((1, 1), (0, 1)),)),
    MonoidPresentation(1, (((2,), (1,)),)),
    MonoidPresentation(2, (((1, 0), (0, 1)),)),
    MonoidPresentation(3, (((1, 1, 0), (0, 0, 1)),)),
    MonoidPresentation(2, (((2, 0), (0, 1)), ((0, 2), (1, 0)))),
]


def test_criterion_5_coinvariants_and_grothendieck():
    for n in range(1, 7):
        g = coinvariants(odometer(2), n)
        assert (g.rank, g.torsion) == snf_invariants([list(r) for r in g.boundary], 2 ** n)
        assert (g.rank, g.torsion) == (1, ())
    rep = grothendieck(MonoidPresentation(2, (((2, 0), (0, 2)),)))
    assert (rep.group.rank, rep.group.torsion) == snf_invariants([[2, -2]], 2) == (1, (2,))
    for p in PRESENTATION_CORPUS:
        res = pi_criterion(p, 3)
        assert res["agree"] in (True, None), (p.to_text(), res)
        if res["agree"] is None:
            continue
        assert res["injective"] == res["cancellative"]


# --------------------------------------------------------------------------
# 6. monoid property counterexamples


def test_criterion_6_monoid_counterexamples():
    sf = check_property(MonoidPresentation(2, (((1, 1), (0, 1)),)), "stably-finite", 4)
    assert sf.verdict == FAILS and verify_verdict(MonoidPresentation(2, (((1, 1), (0, 1)),)), sf)
    p = MonoidPresentation(2, (((2, 0), (0, 2)),))
    up = check_property(p, "unperforated", 4)
    assert up.verdict == FAILS and up.certificate["params"]["n"] == 2 and verify_verdict(p, up)
    assert check_property(p, "cancellative", 4).verdict == HOLDS
    # free monoids: every catalog property holds for N; for N^2, N^3 every property except
    # simplicity holds, and non-simplicity is certified (a generator is not an order unit)
    for g in (1, 2, 3):
        free = MonoidPresentation.free(g)
        for prop in PROPERTIES:
            kw = {}
            if prop in ("simple", "weak-comparability", "order-unit"):
                kw["unit"] = (1,) * g
            if prop in ("directly-finite", "order-unit"):
                kw["x"] = (1,) * g
            v = check_property(free, prop, 4, **kw)
            if g >= 2 and prop == "simple":
                assert v.verdict == FAILS and verify_verdict(free, v)
            elif g >= 2 and prop == "weak-comparability":
                assert v.verdict != FAILS
            else:
                assert v.verdict == HOLDS, (g, prop, v.to_dict())


# --------------------------------------------------------------------------
# 7. Krieger / ample machinery


def test_criterion_7_krieger_and_ample_ladder():
    start = time.perf_counter()
    ladder = dyadic_ladder((1, 2, 3))
    H = CompatibilityOracle(odometer(2))
    C_sys, phi = ladder[0], tuple(range(ladder[0].n))
    for k in range(2):
        res = krieger_extend(ladder[k], C_sys, phi, ladder[k + 1], H)
        v = res.verification
        assert v["condition_1"] and v["condition_2"] and v["psi_extends_phi"] and v["ok"]
        assert verify_unit_system(res.system).ok
        C_sys, phi = res.system, res.psi
    act = odometer(2)
    U, V = C.parse_clopen("[0]@L1"), C.parse_clopen("[1]@L1")
    w = equidecompose(act, U, V, SearchBudget(1, 1))
    assert w and [str(p.word) for p in w.pieces] == ["g0"]
    step = ample_ladder_step(orbit_system(act, 1, trivial=True), [(U, V, w)])
    (_, _, perm, realization), = step.transporters
    sys1 = step.system
    a0, a1 = (sys1.atom_of[min(sys1.ambient.atoms_of(e))] for e in (U, V))
    assert perm[a0] == a1 and perm[a1] == a0
    # replay the realized words with space_model primitives only: U -> V and V -> U
    pieces = [(C.parse_clopen(p["clopen"]), GroupWord.parse(p["word"])) for p in realization]
    assert equivalent(act, C.union(*[e for e, _ in pieces]), C.FULL)

    def image(S):
        return C.union(*[apply_word(act, w, C.intersection(e, S)) for e, w in pieces])

    assert equivalent(act, image(U), V) and equivalent(act, image(V), U)
    assert time.perf_counter() - start <= 10.0


# --------------------------------------------------------------------------
# 8. exploratory: stable finiteness in the product system (report only)


def test_criterion_8_exploratory_product_search(tmp_path):
    action = Product((Subshift(2, 1, (), "at-most-one-one"), odometer(2)))
    X = C.FULL
    A = C.Complement(C.parse_clopen("[1]@0"))
    outcomes = []
    for L, depth in ((1, 1), (2, 2), (3, 2)):
        budget = SearchBudget(L, depth, 50_000, 5.0)
        t0 = time.perf_counter()
        res = type_leq(action, C.parse_type("full"), C.parse_type(C.to_text(A)), budget)
        outcome = {"word_length": L, "depth": depth, "found": bool(res),
                   "seconds": round(time.perf_counter() - t0, 2)}
        if res:
            outcome["verified"] = verify_witness(action, X, A, res)[0]
            assert outcome["verified"]
        outcomes.append(outcome)
    print("criterion 8 outcomes:", json.dumps(outcomes))
