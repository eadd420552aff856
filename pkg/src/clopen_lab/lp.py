"""Exact rational linear programming.

Two-phase tableau simplex over :class:`fractions.Fraction` with Bland's
rule.  Problems have the form

    optimise  c.x   subject to  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0

Every result carries a certificate that :meth:`LPResult.verify` re-checks
by direct arithmetic: an optimal vertex with a dual vector whose objective
matches, or a Farkas vector proving infeasibility.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


def _frac_row(row) -> list[Fraction]:
    return [Fraction(x) for x in row]


@dataclass
class StandardForm:
    """``min c.x`` with ``A x = b``, ``x >= 0`` (after slack introduction)."""

    c: list[Fraction]
    A: list[list[Fraction]]
    b: list[Fraction]
    n_original: int


@dataclass
class LPResult:
    status: str
    value: Fraction | None = None
    x: list[Fraction] | None = None
    dual: list[Fraction] | None = None  # for the standard form rows
    farkas: list[Fraction] | None = None  # for the standard form rows
    form: StandardForm | None = field(default=None, repr=False)
    maximize: bool = True
    pivots: int = 0

    def verify(self) -> bool:
        """Re-check the certificate against the standard form."""
        f = self.form
        if f is None:
            return False
        m, n = len(f.A), len(f.c)
        if self.status == INFEASIBLE:
            z = self.farkas
            if z is None or len(z) != m:
                return False
            cols_ok = all(sum(z[i] * f.A[i][j] for i in range(m)) >= 0 for j in range(n))
            return cols_ok and sum(z[i] * f.b[i] for i in range(m)) < 0
        if self.status == OPTIMAL:
            x_full = self._x_full
            if any(v < 0 for v in x_full):
                return False
            for i in range(m):
                if sum(f.A[i][j] * x_full[j] for j in range(n)) != f.b[i]:
                    return False
            primal = sum(f.c[j] * x_full[j] for j in range(n))
            y = self.dual
            if y is None:
                return False
            # dual feasibility for min: c_j - y.A_j >= 0
            for j in range(n):
                if f.c[j] - sum(y[i] * f.A[i][j] for i in range(m)) < 0:
                    return False
            dual_obj = sum(y[i] * f.b[i] for i in range(m))
            sign = -1 if self.maximize else 1
            return primal == dual_obj and sign * primal == self.value
        return self.status == UNBOUNDED

    _x_full: list[Fraction] = field(default=None, repr=False)


def to_standard_form(c, A_eq=(), b_eq=(), A_ub=(), b_ub=(), maximize=True) -> StandardForm:
    n = len(c)
    k = len(A_ub)
    cost = [(-Fraction(v) if maximize else Fraction(v)) for v in c] + [Fraction(0)] * k
    rows, rhs = [], []
    for row, bi in zip(A_eq, b_eq):
        if len(row) != n:
            raise ValueError("constraint row length differs from the number of variables")
        rows.append(_frac_row(row) + [Fraction(0)] * k)
        rhs.append(Fraction(bi))
    for s, (row, bi) in enumerate(zip(A_ub, b_ub)):
        if len(row) != n:
            raise ValueError("constraint row length differs from the number of variables")
        slack = [Fraction(0)] * k
        slack[s] = Fraction(1)
        rows.append(_frac_row(row) + slack)
        rhs.append(Fraction(bi))
    return StandardForm(cost, rows, rhs, n)


def _pivot(T, r, col):
    pr = T[r]
    pv = pr[col]
    if pv != 1:
        inv = 1 / pv
        for j, v in enumerate(pr):
            if v:
                pr[j] = v * inv
    nz = [j for j, v in enumerate(pr) if v]
    for i, row in enumerate(T):
        if i != r:
            f = row[col]
            if f:
                for j in nz:
                    row[j] -= f * pr[j]


def _run(T, basis, cost, allowed, max_pivots):
    """Bland's-rule simplex on tableau ``T`` (last column is the rhs)."""
    m = len(T)
    pivots = 0
    while True:
        # reduced costs
        entering = None
        for j in allowed:
            rc = cost[j] - sum(cost[basis[i]] * T[i][j] for i in range(m) if T[i][j])
            if rc < 0:
                entering = j
                break
        if entering is None:
            return "done", pivots
        best, best_ratio = None, None
        for i in range(m):
            a = T[i][entering]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best_ratio or (ratio == best_ratio and basis[i] < basis[best]):
                    best, best_ratio = i, ratio
        if best is None:
            return UNBOUNDED, pivots
        _pivot(T, best, entering)
        basis[best] = entering
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError("simplex pivot limit exceeded")


def solve_standard(form: StandardForm, maximize=True, max_pivots=100_000) -> LPResult:
    A, b, c = form.A, form.b, form.c
    m, n = len(A), len(c)
    # normalise rhs signs; remember flips for the certificates
    sign = [(-1 if bi < 0 else 1) for bi in b]
    T = []
    for i in range(m):
        row = [sign[i] * v for v in A[i]] + [Fraction(0)] * m + [sign[i] * b[i]]
        row[n + i] = Fraction(1)
        T.append(row)
    basis = [n + i for i in range(m)]
    phase1_cost = [Fraction(0)] * n + [Fraction(1)] * m
    status, p1 = _run(T, basis, phase1_cost, range(n), max_pivots)
    infeas = sum(T[i][-1] for i in range(m) if basis[i] >= n)
    if infeas > 0:
        y = [sum(phase1_cost[basis[r]] * T[r][n + i] for r in range(m)) for i in range(m)]
        farkas = [-y[i] * sign[i] for i in range(m)]
        return LPResult(INFEASIBLE, farkas=farkas, form=form, maximize=maximize, pivots=p1)
    # drive remaining artificials out of the basis where possible
    for r in range(m):
        if basis[r] >= n:
            for j in range(n):
                if T[r][j] != 0:
                    _pivot(T, r, j)
                    basis[r] = j
                    break
    cost2 = list(c) + [Fraction(0)] * m
    status, p2 = _run(T, basis, cost2, range(n), max_pivots)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, form=form, maximize=maximize, pivots=p1 + p2)
    x = [Fraction(0)] * n
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = T[r][-1]
    y_signed = [sum(cost2[basis[r]] * T[r][n + i] for r in range(m)) for i in range(m)]
    dual = [y_signed[i] * sign[i] for i in range(m)]
    opt = sum(c[j] * x[j] for j in range(n))
    value = -opt if maximize else opt
    res = LPResult(OPTIMAL, value, x[:form.n_original], dual, form=form, maximize=maximize,
                   pivots=p1 + p2)
    res._x_full = x
    return res


def solve_lp(c: Sequence, A_eq=(), b_eq=(), A_ub=(), b_ub=(), maximize=True) -> LPResult:
    """Optimise ``c.x`` over ``{x >= 0 : A_eq x = b_eq, A_ub x <= b_ub}`` exactly."""
    form = to_standard_form(c, A_eq, b_eq, A_ub, b_ub, maximize)
    return solve_standard(form, maximize)


# --------------------------------------------------------------------------
# presolve: merge variables forced equal by two-term equalities


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra > rb:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass
class Reduced:
    """Variables merged into classes; ``class_of[i]`` indexes the reduced variable."""

    class_of: list[int]
    sizes: list[int]
    A_eq: list[list[Fraction]]
    b_eq: list[Fraction]

    def objective(self, c) -> tuple[Fraction, ...]:
        out = [Fraction(0)] * len(self.sizes)
        for i, v in enumerate(c):
            out[self.class_of[i]] += v
        return tuple(out)

    def expand(self, x_reduced) -> list[Fraction]:
        return [x_reduced[k] for k in self.class_of]


def merge_equal_variables(n: int, A_eq, b_eq) -> Reduced:
    """Presolve ``x_i = x_j`` rows; the other rows are rewritten on classes.

    A class of ``s`` merged variables becomes one reduced variable standing
    for their common value, so coefficients of the other rows are summed.
    """
    uf = _UnionFind(n)
    rest = []
    for row, bi in zip(A_eq, b_eq):
        nz = [(j, Fraction(v)) for j, v in enumerate(row) if v]
        if len(nz) == 2 and Fraction(bi) == 0 and nz[0][1] == -nz[1][1]:
            uf.union(nz[0][0], nz[1][0])
        else:
            rest.append((nz, Fraction(bi)))
    roots = sorted({uf.find(i) for i in range(n)})
    idx = {r: k for k, r in enumerate(roots)}
    class_of = [idx[uf.find(i)] for i in range(n)]
    sizes = [0] * len(roots)
    for k in class_of:
        sizes[k] += 1
    rows, rhs = [], []
    seen = set()
    for nz, bi in rest:
        row = [Fraction(0)] * len(roots)
        for j, v in nz:
            row[class_of[j]] += v
        key = (tuple(row), bi)
        if not any(row):
            if bi != 0:
                rows.append(row)
                rhs.append(bi)
            continue
        if key not in seen:
            seen.add(key)
            rows.append(row)
            rhs.append(bi)
    return Reduced(class_of, sizes, rows, rhs)
