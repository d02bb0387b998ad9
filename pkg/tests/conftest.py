import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import settings

from hnorbit.lattice import Lattice

settings.register_profile("repo", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("repo")


def hexagonal():
    """Hexagonal lattice scaled to determinant 1."""
    s = (2 / math.sqrt(3)) ** 0.5
    return Lattice([[s, s / 2], [0.0, s * math.sqrt(3) / 2]])


def random_unimodular_int(n, rng, steps=None):
    M = np.eye(n, dtype=np.int64)
    for _ in range(steps or 3 * n):
        i, j = rng.choice(n, size=2, replace=False)
        M[:, i] += int(rng.integers(-2, 3)) * M[:, j]
    return M


def random_rational_lattice(n, rng, unimodular=False):
    """Exact lattice with small rational entries (upper triangular times unimodular)."""
    while True:
        T = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                T[i][j] = Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 4)))
            if T[i][i] == 0:
                T[i][i] = Fraction(1, int(rng.integers(1, 4)))
        if unimodular:
            d = math.prod(T[i][i] for i in range(n))
            T[0] = [v / d for v in T[0]]
        U = random_unimodular_int(n, rng)
        B = [[sum(T[i][k] * int(U[k, j]) for k in range(n)) for j in range(n)] for i in range(n)]
        return Lattice(B)


def leibniz_det(M):
    """Determinant as a signed sum over permutations (independent of elimination code)."""
    n = len(M)
    total = 0
    for p in itertools.permutations(range(n)):
        inv = sum(1 for a in range(n) for b in range(a + 1, n) if p[a] > p[b])
        term = -1 if inv % 2 else 1
        for i in range(n):
            term *= M[i][p[i]]
        total += term
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
