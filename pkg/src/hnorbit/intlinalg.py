"""Exact integer and rational linear algebra on small dense matrices.

Matrices are plain lists of lists of Python ints (or Fractions), so entries
never overflow.  Everything here is deterministic and exact.
"""
from fractions import Fraction
from itertools import combinations
from math import gcd


def xgcd(a, b):
    """Return ``(g, x, y)`` with ``x*a + y*b == g == gcd(a, b) >= 0``."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def det_exact(M):
    """Determinant of a square matrix of ints or Fractions (Bareiss)."""
    n = len(M)
    if n == 0:
        return 1
    if all(isinstance(v, int) for row in M for v in row):
        A = [list(row) for row in M]
        sign, prev = 1, 1
        for k in range(n - 1):
            if A[k][k] == 0:
                for i in range(k + 1, n):
                    if A[i][k] != 0:
                        A[k], A[i] = A[i], A[k]
                        sign = -sign
                        break
                else:
                    return 0
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
            prev = A[k][k]
        return sign * A[n - 1][n - 1]
    A = [[Fraction(v) for v in row] for row in M]
    det = Fraction(1)
    for k in range(n):
        p = next((i for i in range(k, n) if A[i][k] != 0), None)
        if p is None:
            return Fraction(0)
        if p != k:
            A[k], A[p] = A[p], A[k]
            det = -det
        det *= A[k][k]
        for i in range(k + 1, n):
            f = A[i][k] / A[k][k]
            if f:
                for j in range(k, n):
                    A[i][j] -= f * A[k][j]
    return det


def rank_exact(rows):
    """Rank of a matrix of ints/Fractions given as a list of rows."""
    A = [[Fraction(v) for v in row] for row in rows]
    if not A:
        return 0
    m, n = len(A), len(A[0])
    r = 0
    for c in range(n):
        p = next((i for i in range(r, m) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        for i in range(r + 1, m):
            f = A[i][c] / A[r][c]
            if f:
                for j in range(c, n):
                    A[i][j] -= f * A[r][j]
        r += 1
        if r == m:
            break
    return r


def row_hermite(A):
    """Row-style Hermite normal form with transform.

    Returns ``(H, U, rank)`` with ``U`` unimodular, ``H == U @ A`` in row
    echelon form with positive pivots reduced modulo the pivot above.  The
    last ``m - rank`` rows of ``H`` are zero, so the matching rows of ``U``
    span the integer left kernel of ``A``.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    H = [list(map(int, row)) for row in A]
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    r = 0
    pivots = []
    for c in range(n):
        if r == m:
            break
        for i in range(r + 1, m):
            if H[i][c] == 0:
                continue
            a, b = H[r][c], H[i][c]
            g, x, y = xgcd(a, b)
            p, q = a // g, b // g
            Hr, Hi, Ur, Ui = H[r], H[i], U[r], U[i]
            H[r] = [x * s + y * t for s, t in zip(Hr, Hi)]
            H[i] = [-q * s + p * t for s, t in zip(Hr, Hi)]
            U[r] = [x * s + y * t for s, t in zip(Ur, Ui)]
            U[i] = [-q * s + p * t for s, t in zip(Ur, Ui)]
        if H[r][c] == 0:
            continue
        if H[r][c] < 0:
            H[r] = [-v for v in H[r]]
            U[r] = [-v for v in U[r]]
        for i in range(r):
            f = H[i][c] // H[r][c]
            if f:
                H[i] = [s - f * t for s, t in zip(H[i], H[r])]
                U[i] = [s - f * t for s, t in zip(U[i], U[r])]
        pivots.append(c)
        r += 1
    return H, U, r


def integer_kernel(A, ncols=None):
    """Basis (list of rows) of ``{x in Z^n : A x = 0}``; always saturated."""
    if not A:
        n = ncols
        return [[int(i == j) for j in range(n)] for i in range(n)]
    n = len(A[0])
    At = [[A[i][j] for i in range(len(A))] for j in range(n)]
    _, U, r = row_hermite(At)
    return [row for row in U[r:]]


def saturation_basis(gens, n):
    """Primitive closure in ``Z^n`` of the span of integer vectors ``gens``.

    Returns a basis (list of rows) of ``Z^n ∩ span_Q(gens)``, computed as the
    kernel of the integer left kernel.
    """
    gens = [list(map(int, g)) for g in gens]
    if not gens:
        return []
    left = integer_kernel(gens, n)
    if not left:
        return [[int(i == j) for j in range(n)] for i in range(n)]
    return integer_kernel(left, n)


def plucker_int(vectors):
    """All maximal minors of the k×n integer matrix ``vectors``, lexicographic."""
    k = len(vectors)
    n = len(vectors[0])
    return tuple(
        det_exact([[v[j] for j in J] for v in vectors]) for J in combinations(range(n), k)
    )


def content(values):
    """gcd of a sequence of integers (0 for the zero vector)."""
    g = 0
    for v in values:
        g = gcd(g, int(v))
    return g


def solve_rational(A, b):
    """Solve ``A x = b`` exactly; return a Fraction vector or None if inconsistent.

    ``A`` is m×k with independent columns.
    """
    m, k = len(A), len(A[0])
    M = [[Fraction(A[i][j]) for j in range(k)] + [Fraction(b[i])] for i in range(m)]
    r, piv = 0, []
    for c in range(k):
        p = next((i for i in range(r, m) if M[i][c] != 0), None)
        if p is None:
            return None
        M[r], M[p] = M[p], M[r]
        for i in range(m):
            if i != r and M[i][c] != 0:
                f = M[i][c] / M[r][c]
                M[i] = [s - f * t for s, t in zip(M[i], M[r])]
        piv.append(c)
        r += 1
    if any(M[i][k] != 0 for i in range(r, m)):
        return None
    return [M[i][k] / M[i][i] for i in range(k)]
