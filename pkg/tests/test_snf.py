from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import invariant_factors

from bdgraph.snf import determinant, identity, matmul, smith_decompose


def _oracle_divisors(a):
    # sympy's invariant factors with zeros dropped and signs normalized
    factors = invariant_factors(Matrix(a), domain=ZZ)
    return tuple(abs(int(x)) for x in factors if x != 0)


def _check(a):
    dec = smith_decompose(a)
    m, n = len(a), len(a[0])
    assert matmul(matmul(dec.U, a), dec.V) == dec.D
    assert matmul(dec.U, dec.U_inv) == identity(m)
    assert matmul(dec.V, dec.V_inv) == identity(n)
    assert abs(determinant(dec.U)) == 1 and abs(determinant(dec.V)) == 1
    for i in range(m):
        for j in range(n):
            if i != j:
                assert dec.D[i][j] == 0
    divs = dec.divisors
    assert all(d > 0 for d in divs)
    assert all(divs[i + 1] % divs[i] == 0 for i in range(len(divs) - 1))
    assert divs == _oracle_divisors(a)
    return dec


def test_known_example():
    dec = _check([[2, 4, 4], [-6, 6, 12], [10, -4, -16]])
    assert dec.divisors == (2, 6, 12)


def test_zero_and_identity():
    assert smith_decompose([[0, 0], [0, 0]]).rank == 0
    assert _check(identity(3)).divisors == (1, 1, 1)


def test_rectangular():
    assert _check([[1, 2, 3], [4, 5, 6]]).divisors == (1, 3)
    assert _check([[2], [4], [6]]).divisors == (2,)


def test_free_rows_have_positive_leading_entry():
    dec = smith_decompose([[1, -1], [-1, 1]])
    assert dec.rank == 1
    row = dec.U[1]
    assert next(x for x in row if x) > 0
    col = [dec.V[i][1] for i in range(2)]
    assert next(x for x in col if x) > 0


small = st.integers(-6, 6)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 5).flatmap(lambda m: st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(small, min_size=n, max_size=n), min_size=m, max_size=m))))
def test_random_matrices_against_sympy(a):
    _check(a)
