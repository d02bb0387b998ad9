from fractions import Fraction
from math import gcd

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from hnorbit.intlinalg import (
    content,
    det_exact,
    integer_kernel,
    plucker_int,
    rank_exact,
    row_hermite,
    saturation_basis,
    solve_rational,
    xgcd,
)

from conftest import leibniz_det

small_int = st.integers(-6, 6)


def matrices(m, n):
    return st.lists(st.lists(small_int, min_size=n, max_size=n), min_size=m, max_size=m)


@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))
def test_xgcd_identity(a, b):
    g, x, y = xgcd(a, b)
    assert g == gcd(a, b)
    assert x * a + y * b == g


@given(st.integers(1, 5).flatmap(lambda n: matrices(n, n)))
def test_det_matches_leibniz(M):
    assert det_exact(M) == leibniz_det(M)


def test_det_fraction():
    M = [[Fraction(1, 2), 3], [Fraction(2, 3), Fraction(-1, 4)]]
    assert det_exact(M) == Fraction(-1, 8) - 2


@given(st.integers(1, 4).flatmap(lambda m: st.integers(1, 5).flatmap(lambda n: matrices(m, n))))
def test_row_hermite_transform(A):
    H, U, r = row_hermite(A)
    UA = (np.array(U, dtype=object).dot(np.array(A, dtype=object))).tolist()
    assert UA == H
    assert abs(det_exact(U)) == 1
    assert r == rank_exact(A)
    assert all(all(v == 0 for v in row) for row in H[r:])


@given(st.integers(1, 3).flatmap(lambda m: matrices(m, 4)))
def test_integer_kernel(A):
    K = integer_kernel(A)
    assert len(K) == 4 - rank_exact(A)
    for k in K:
        assert all(sum(a * x for a, x in zip(row, k)) == 0 for row in A)
    if K:
        # saturated: the maximal minors are coprime
        assert content(plucker_int(K)) == 1


def test_saturation_examples():
    S = saturation_basis([[2, 0, 0], [0, 3, 0]], 3)
    assert content(plucker_int(S)) == 1
    assert sorted(map(abs, plucker_int(S))) == [0, 0, 1]
    assert saturation_basis([[2, 4]], 2) in ([[1, 2]], [[-1, -2]])


def test_solve_rational():
    assert solve_rational([[1, 0], [0, 2], [1, 1]], [1, 1, Fraction(3, 2)]) == [1, Fraction(1, 2)]
    assert solve_rational([[1], [1]], [1, 2]) is None
