"""Smith normal form over the integers.

``smith_normal_form(M)`` returns ``(D, U, V)`` with ``U M V = D``, ``U``
and ``V`` unimodular and ``D`` diagonal with ``d_1 | d_2 | ...``.  For a
relation matrix whose rows span a lattice ``R`` in ``Z^n``, the quotient
``Z^n / R`` is ``Z^r + sum Z/d_i`` and ``x -> x V`` gives coordinates in
it.
"""

from __future__ import annotations

from dataclasses import dataclass


def _identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def smith_normal_form(M):
    A = [list(map(int, row)) for row in M]
    m = len(A)
    n = len(A[0]) if m else 0
    U, V = _identity(m), _identity(n)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(src, dst, k):  # row_dst += k * row_src
        if k:
            A[dst] = [a + k * b for a, b in zip(A[dst], A[src])]
            U[dst] = [a + k * b for a, b in zip(U[dst], U[src])]

    def add_col(src, dst, k):  # col_dst += k * col_src
        if k:
            for row in A:
                row[dst] += k * row[src]
            for row in V:
                row[dst] += k * row[src]

    t = 0
    while t < min(m, n):
        # pivot: smallest nonzero absolute value in the remaining block
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if A[i][j] and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        swap_rows(t, best[0])
        swap_cols(t, best[1])
        done = False
        while not done:
            done = True
            for i in range(t + 1, m):
                if A[i][t]:
                    q = A[i][t] // A[t][t]
                    add_row(t, i, -q)
                    if A[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, n):
                if A[t][j]:
                    q = A[t][j] // A[t][t]
                    add_col(t, j, -q)
                    if A[t][j]:
                        swap_cols(t, j)
                        done = False
            if done:
                # divisibility: the pivot must divide the rest of the block
                bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n)
                            if A[i][j] % A[t][t]), None)
                if bad is not None:
                    add_row(bad[0], t, 1)
                    done = False
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
            U[t] = [-a for a in U[t]]
        t += 1
    return A, U, V


def matmul(X, Y):
    return [[sum(a * b for a, b in zip(row, col)) for col in zip(*Y)] for row in X]


@dataclass(frozen=True)
class AbelianGroup:
    """``Z^rank + sum Z/t`` for ``t`` in ``torsion``, with a coordinate map."""

    rank: int
    torsion: tuple[int, ...]
    relations: tuple[tuple[int, ...], ...]
    n: int  # number of generators
    V: tuple[tuple[int, ...], ...]
    diagonal: tuple[int, ...]  # length n; 0 for free coordinates

    def coordinates(self, x) -> tuple[int, ...]:
        """Image of ``x`` in ``Z^n / R``, reduced: free coordinates as integers."""
        y = [sum(x[i] * self.V[i][j] for i in range(self.n)) for j in range(self.n)]
        out = []
        for j, d in enumerate(self.diagonal):
            if d == 1:
                continue
            out.append(y[j] % d if d else y[j])
        return tuple(out)

    def same_class(self, x, y) -> bool:
        return self.coordinates(x) == self.coordinates(y)

    def describe(self) -> str:
        parts = ["Z"] * self.rank + [f"Z/{t}" for t in self.torsion]
        return " + ".join(parts) if parts else "0"


def quotient_group(n: int, relations) -> AbelianGroup:
    """``Z^n`` modulo the row span of ``relations``."""
    rows = [list(map(int, r)) for r in relations if any(r)]
    if not rows:
        V = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
        return AbelianGroup(n, (), (), n, V, (0,) * n)
    D, U, V = smith_normal_form(rows)
    diag = [D[i][i] if i < len(D) else 0 for i in range(n)]
    diag = [abs(d) for d in diag]
    rank = sum(1 for d in diag if d == 0)
    torsion = tuple(d for d in diag if d > 1)
    return AbelianGroup(rank, torsion, tuple(tuple(r) for r in rows), n,
                        tuple(tuple(r) for r in V), tuple(diag))
