"""Smith normal form over the integers with transformation matrices.

``smith_decompose(A)`` returns unimodular ``U`` and ``V`` (and their inverses)
with ``U A V = D`` diagonal, ``d_1 | d_2 | ...``. Free rows of ``U`` and free
columns of ``V`` are sign-normalized so that results are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

from sympy import ZZ
from sympy.polys.matrices import DomainMatrix

from .errors import ConsistencyError

Matrix = list[list[int]]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def zeros(m: int, n: int) -> Matrix:
    return [[0] * n for _ in range(m)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if not a:
        return []
    inner = len(b)
    cols = len(b[0]) if b else 0
    out = []
    for row in a:
        acc = [0] * cols
        for k in range(inner):
            x = row[k]
            if x:
                bk = b[k]
                for j in range(cols):
                    if bk[j]:
                        acc[j] += x * bk[j]
        out.append(acc)
    return out


def transpose(a: Matrix, rows: int | None = None) -> Matrix:
    if not a:
        return [[] for _ in range(rows or 0)]
    return [list(col) for col in zip(*a)]


def determinant(a: Matrix) -> int:
    if not a:
        return 1
    return int(DomainMatrix([[ZZ(x) for x in row] for row in a], (len(a), len(a)), ZZ).det())


@dataclass(frozen=True)
class SmithDecomposition:
    U: Matrix
    U_inv: Matrix
    V: Matrix
    V_inv: Matrix
    D: Matrix
    rank: int

    @property
    def divisors(self) -> tuple[int, ...]:
        return tuple(self.D[i][i] for i in range(self.rank))


def _first_nonzero(vec) -> int:
    for x in vec:
        if x:
            return x
    return 0


def smith_decompose(a: Matrix, check: bool = True) -> SmithDecomposition:
    m = len(a)
    n = len(a[0]) if m else 0
    D = [list(row) for row in a]
    U, Ui = identity(m), identity(m)
    V, Vi = identity(n), identity(n)

    # each elementary operation updates D, the transform and its inverse
    def row_add(i, t, c):  # row_i += c * row_t
        if not c:
            return
        for M in (D, U):
            ri, rt = M[i], M[t]
            for j in range(len(ri)):
                if rt[j]:
                    ri[j] += c * rt[j]
        for row in Ui:
            row[t] -= c * row[i]

    def row_swap(i, t):
        if i == t:
            return
        for M in (D, U):
            M[i], M[t] = M[t], M[i]
        for row in Ui:
            row[i], row[t] = row[t], row[i]

    def row_neg(i):
        for M in (D, U):
            M[i] = [-x for x in M[i]]
        for row in Ui:
            row[i] = -row[i]

    def col_add(j, t, c):  # col_j += c * col_t
        if not c:
            return
        for M in (D, V):
            for row in M:
                if row[t]:
                    row[j] += c * row[t]
        rj, rt = Vi[j], Vi[t]
        for k in range(n):
            if rj[k]:
                rt[k] -= c * rj[k]

    def col_swap(j, t):
        if j == t:
            return
        for M in (D, V):
            for row in M:
                row[j], row[t] = row[t], row[j]
        Vi[j], Vi[t] = Vi[t], Vi[j]

    def col_neg(j):
        for M in (D, V):
            for row in M:
                row[j] = -row[j]
        Vi[j] = [-x for x in Vi[j]]

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                x = D[i][j]
                if x and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
                    if best[0] == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        row_swap(t, best[1])
        col_swap(t, best[2])
        while True:
            p = D[t][t]
            for i in range(t + 1, m):
                if D[i][t]:
                    row_add(i, t, -(D[i][t] // p))
            for j in range(t + 1, n):
                if D[t][j]:
                    col_add(j, t, -(D[t][j] // p))
            cand = [(abs(D[i][t]), i, t) for i in range(t + 1, m) if D[i][t]]
            cand += [(abs(D[t][j]), t, j) for j in range(t + 1, n) if D[t][j]]
            if cand:
                _, i, j = min(cand)
                row_swap(t, i)
                col_swap(t, j)
                continue
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if D[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            row_add(t, bad, 1)
        if D[t][t] < 0:
            row_neg(t)
        t += 1
    rank = t

    for i in range(rank, m):
        if _first_nonzero(U[i]) < 0:
            row_neg(i)
    for j in range(rank, n):
        if _first_nonzero([V[k][j] for k in range(n)]) < 0:
            col_neg(j)

    dec = SmithDecomposition(U, Ui, V, Vi, D, rank)
    if check:
        _verify(a, dec)
    return dec


def _verify(a: Matrix, dec: SmithDecomposition) -> None:
    m = len(a)
    n = len(a[0]) if m else 0
    if m and n and matmul(matmul(dec.U, a), dec.V) != dec.D:
        raise ConsistencyError("U A V != D")
    if m and matmul(dec.U, dec.U_inv) != identity(m):
        raise ConsistencyError("U U^{-1} != I")
    if n and matmul(dec.V, dec.V_inv) != identity(n):
        raise ConsistencyError("V V^{-1} != I")
    for i in range(m):
        for j in range(n):
            if i != j and dec.D[i][j]:
                raise ConsistencyError("D is not diagonal")
    divs = dec.divisors
    for x, y in zip(divs, divs[1:]):
        if y % x:
            raise ConsistencyError("diagonal is not a divisor chain")
    if m and abs(determinant(dec.U)) != 1:
        raise ConsistencyError("U is not unimodular")
    if n and abs(determinant(dec.V)) != 1:
        raise ConsistencyError("V is not unimodular")
