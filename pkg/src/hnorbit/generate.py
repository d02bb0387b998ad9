"""Seeded random lattices."""
import numpy as np

from .errors import PreconditionError
from .lattice import Lattice


def gaussian_lattice(n, seed):
    """Gaussian basis scaled so that det = 1 (a column is negated if needed)."""
    rng = np.random.default_rng(seed)
    while True:
        B = rng.standard_normal((n, n))
        d = np.linalg.det(B)
        if abs(d) > 1e-6:
            break
    if d < 0:
        B[:, 0] = -B[:, 0]
        d = -d
    B = B / d ** (1.0 / n)
    return Lattice(B, unimodular=True)


def integer_unimodular_lattice(n, seed, steps=None):
    """Product of random elementary integer matrices; exact determinant 1."""
    rng = np.random.default_rng(seed)
    steps = 4 * n * n if steps is None else steps
    M = [[int(i == j) for j in range(n)] for i in range(n)]
    if n == 1:
        return Lattice(M, unimodular=True)
    for _ in range(steps):
        i, j = rng.choice(n, size=2, replace=False)
        c = int(rng.integers(-2, 3))
        for r in range(n):
            M[r][i] += c * M[r][j]
    return Lattice(M, unimodular=True)


def random_lattice(n, seed, dist="gaussian-qr"):
    if n < 1:
        raise PreconditionError("dimension must be positive")
    if dist == "gaussian-qr":
        return gaussian_lattice(n, seed)
    if dist == "integer-unimodular":
        return integer_unimodular_lattice(n, seed)
    raise PreconditionError(f"unknown distribution {dist!r}")
