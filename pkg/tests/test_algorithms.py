"""Matching, exact LP and Smith normal form against independent library implementations."""

from __future__ import annotations

from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog
from sympy.matrices.normalforms import smith_normal_form as sympy_snf

from clopen_lab.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp
from clopen_lab.matching import hall_violator, max_matching
from clopen_lab.snf import matmul, quotient_group, smith_normal_form

# --------------------------------------------------------------------------
# bipartite matching


@st.composite
def bipartite(draw):
    nl, nr = draw(st.integers(0, 7)), draw(st.integers(0, 7))
    adj = [sorted(draw(st.sets(st.integers(0, nr - 1), max_size=nr))) if nr else [] for _ in range(nl)]
    return nl, nr, adj


@settings(max_examples=300, deadline=None)
@given(bipartite())
def test_matching_size_matches_networkx(g):
    nl, nr, adj = g
    G = nx.Graph()
    G.add_nodes_from((("l", i) for i in range(nl)), bipartite=0)
    G.add_nodes_from((("r", j) for j in range(nr)), bipartite=1)
    G.add_edges_from((("l", i), ("r", j)) for i in range(nl) for j in adj[i])
    ref = nx.bipartite.maximum_matching(G, top_nodes=[("l", i) for i in range(nl)])
    m = max_matching(nl, nr, adj)
    assert m.size == len(ref) // 2
    used = [r for r in m.left_to_right if r is not None]
    assert len(used) == len(set(used))
    assert all(r is None or r in adj[i] for i, r in enumerate(m.left_to_right))
    if not m.is_left_perfect():
        F, N = hall_violator(nl, adj, m)
        assert len(N) < len(F)
        assert set(N) == {j for i in F for j in adj[i]}
    else:
        assert hall_violator(nl, adj, m) is None


# --------------------------------------------------------------------------
# exact LP


@st.composite
def small_lp(draw):
    n = draw(st.integers(1, 4))
    m = draw(st.integers(0, 3))
    k = draw(st.integers(0, 2))
    ints = st.integers(-3, 3)
    c = [draw(ints) for _ in range(n)]
    A_ub = [[draw(ints) for _ in range(n)] for _ in range(m)]
    b_ub = [draw(st.integers(-2, 6)) for _ in range(m)]
    A_eq = [[draw(ints) for _ in range(n)] for _ in range(k)]
    b_eq = [draw(st.integers(-2, 4)) for _ in range(k)]
    # a box keeps most instances bounded while still allowing unbounded ones
    if draw(st.booleans()):
        A_ub += [[int(i == j) for j in range(n)] for i in range(n)]
        b_ub += [5] * n
    return c, A_eq, b_eq, A_ub, b_ub


@settings(max_examples=250, deadline=None)
@given(small_lp(), st.booleans())
def test_lp_matches_scipy(lp, maximize):
    c, A_eq, b_eq, A_ub, b_ub = lp
    res = solve_lp(c, A_eq, b_eq, A_ub, b_ub, maximize=maximize)
    sign = -1 if maximize else 1
    ref = linprog([sign * x for x in c], A_ub=A_ub or None, b_ub=b_ub or None,
                  A_eq=A_eq or None, b_eq=b_eq or None, bounds=[(0, None)] * len(c), method="highs")
    expected = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}[ref.status]
    assert res.status == expected
    assert res.verify()
    if expected == OPTIMAL:
        assert abs(float(res.value) - sign * ref.fun) < 1e-7
        x = res.x
        assert all(v >= 0 for v in x)
        assert all(sum(Fraction(a) * v for a, v in zip(row, x)) == b for row, b in zip(A_eq, b_eq))
        assert all(sum(Fraction(a) * v for a, v in zip(row, x)) <= b for row, b in zip(A_ub, b_ub))


def test_lp_rational_optimum():
    # max x + y with 3x + y <= 2, x + 3y <= 2  ->  x = y = 1/2
    res = solve_lp([1, 1], A_ub=[[3, 1], [1, 3]], b_ub=[2, 2])
    assert res.status == OPTIMAL and res.value == 1 and res.x == [Fraction(1, 2)] * 2


# --------------------------------------------------------------------------
# Smith normal form


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4).flatmap(lambda m: st.integers(1, 4).flatmap(
    lambda n: st.lists(st.lists(st.integers(-6, 6), min_size=n, max_size=n), min_size=m, max_size=m))))
def test_snf_matches_sympy(M):
    D, U, V = smith_normal_form(M)
    assert matmul(matmul(U, M), V) == D
    assert round(abs(np.linalg.det(np.array(U, dtype=float)))) == 1
    assert round(abs(np.linalg.det(np.array(V, dtype=float)))) == 1
    m, n = len(M), len(M[0])
    ours = [abs(D[i][i]) for i in range(min(m, n))]
    ref = sympy_snf(sympy.Matrix(M), domain=sympy.ZZ)
    theirs = [abs(int(ref[i, i])) for i in range(min(m, n))]
    assert ours == theirs
    nz = [d for d in ours if d]
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))


def test_quotient_group():
    g = quotient_group(2, [[2, -2]])  # Z^2 / <(2, -2)>
    assert g.describe() == "Z + Z/2"
    assert g.same_class((1, 0), (0, 1)) is False
    assert g.same_class((2, 0), (0, 2))
    assert quotient_group(3, []).describe() == "Z + Z + Z"
    assert quotient_group(1, [[1]]).describe() == "0"


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_cyclic_rotation_coinvariants(n):
    """``Z^n`` modulo ``e_i - e_(i+1)`` is ``Z`` with every generator equal."""
    rel = [[int(j == i) - int(j == (i + 1) % n) for j in range(n)] for i in range(n)]
    g = quotient_group(n, rel)
    assert g.describe() == "Z"
    assert all(g.same_class([int(j == 0) for j in range(n)], [int(j == i) for j in range(n)])
               for i in range(n))
