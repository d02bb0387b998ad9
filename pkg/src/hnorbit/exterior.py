"""k-vectors in Plücker coordinates, supports, and measured subspaces.

Index sets are 0-based sorted tuples, e.g. ``(0, 2)`` is e_0 ∧ e_2.  They are
ordered lexicographically, which is also the coordinate layout used by
:func:`index_sets`.  Coefficients may be floats or Fractions; the arithmetic
is generic, so rational input stays exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .errors import PreconditionError
from .intlinalg import det_exact, rank_exact

DEFAULT_TOL = 1e-9

IndexSet = tuple  # strictly increasing tuple of ints in range(n)


def check_index_set(J, n):
    J = tuple(J)
    if any(not 0 <= j < n for j in J) or any(a >= b for a, b in zip(J, J[1:])):
        raise PreconditionError(f"not a strictly increasing index set in range({n}): {J}")
    return J


def index_sets(n, k):
    """All size-k index sets of range(n) in lexicographic order."""
    return list(combinations(range(n), k))


def shuffle_sign(I, J):
    """Sign of the permutation sorting the concatenation ``I + J``; 0 if they overlap."""
    if set(I) & set(J):
        return 0
    inversions = sum(1 for i in I for j in J if i > j)
    return -1 if inversions % 2 else 1


@dataclass(frozen=True)
class KVector:
    """An element of the k-th exterior power of R^n.

    ``coords`` maps index sets to coefficients; missing keys are zero.
    """

    n: int
    k: int
    coords: Mapping[tuple, object] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise PreconditionError(f"grade {self.k} outside [0, {self.n}]")
        clean = {}
        for J, c in self.coords.items():
            J = check_index_set(J, self.n)
            if len(J) != self.k:
                raise PreconditionError(f"index set {J} has wrong size for grade {self.k}")
            if c != 0:
                clean[J] = c
        object.__setattr__(self, "coords", dict(sorted(clean.items())))

    @classmethod
    def basis(cls, n, J, coeff=1):
        J = tuple(J)
        return cls(n, len(J), {J: coeff})

    @classmethod
    def from_vector(cls, v):
        v = list(v)
        return cls(len(v), 1, {(i,): c for i, c in enumerate(v)})

    @classmethod
    def scalar(cls, n, c=1):
        return cls(n, 0, {(): c})

    def __getitem__(self, J):
        return self.coords.get(tuple(J), 0)

    def __add__(self, other):
        self._check_same(other)
        out = dict(self.coords)
        for J, c in other.coords.items():
            out[J] = out.get(J, 0) + c
        return KVector(self.n, self.k, out)

    def __neg__(self):
        return KVector(self.n, self.k, {J: -c for J, c in self.coords.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        return KVector(self.n, self.k, {J: s * c for J, c in self.coords.items()})

    __rmul__ = __mul__

    def __xor__(self, other):
        return wedge(self, other)

    def _check_same(self, other):
        if (self.n, self.k) != (other.n, other.k):
            raise PreconditionError("k-vectors of different shape")

    def support(self, tol=0.0):
        """Index sets with a coefficient of magnitude > tol·(max coefficient)."""
        scale = kvec_norm(self)
        return frozenset(J for J, c in self.coords.items() if abs(c) > tol * scale)

    def to_array(self):
        """Dense float coordinates in lexicographic index-set order."""
        return np.array([float(self[J]) for J in index_sets(self.n, self.k)])

    def is_zero(self, tol=0.0):
        return kvec_norm(self) <= tol


def wedge(v: KVector, w: KVector) -> KVector:
    """Exterior product; the coefficient of e_K is the signed shuffle sum."""
    if v.n != w.n:
        raise PreconditionError("wedge of k-vectors in different ambient dimensions")
    if v.k + w.k > v.n:
        raise PreconditionError(f"grade overflow: {v.k} + {w.k} > {v.n}")
    out = {}
    for I, a in v.coords.items():
        for J, b in w.coords.items():
            s = shuffle_sign(I, J)
            if s:
                K = tuple(sorted(I + J))
                out[K] = out.get(K, 0) + s * a * b
    return KVector(v.n, v.k + w.k, out)


def kvec_norm(v: KVector):
    """Max-coordinate norm: max_J |coefficient of e_J|."""
    return max((abs(c) for c in v.coords.values()), default=0)


def _is_exact(values):
    return all(isinstance(x, (int, Fraction)) for x in values)


def wedge_vectors(vectors: Sequence[Sequence], n=None) -> KVector:
    """v_1 ∧ … ∧ v_k as Plücker coordinates (all k×k minors of the rows)."""
    vectors = [list(v) for v in vectors]
    if not vectors:
        if n is None:
            raise PreconditionError("ambient dimension needed for the empty wedge")
        return KVector.scalar(n)
    n = len(vectors[0])
    k = len(vectors)
    if k > n:
        raise PreconditionError(f"grade overflow: {k} vectors in R^{n}")
    exact = _is_exact(x for v in vectors for x in v)
    coords = {}
    if exact:
        for J in combinations(range(n), k):
            coords[J] = det_exact([[v[j] for j in J] for v in vectors])
    else:
        M = np.asarray(vectors, dtype=float)
        for J in combinations(range(n), k):
            coords[J] = float(np.linalg.det(M[:, J])) if k > 1 else float(M[0, J[0]])
    return KVector(n, k, coords)


def _rank(vectors, tol):
    if _is_exact(x for v in vectors for x in v):
        return rank_exact(vectors)
    M = np.asarray(vectors, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def support_of_subspace(basis, tol=DEFAULT_TOL):
    """Support of span(basis): index sets J with a nonzero Plücker coordinate."""
    basis = [list(v) for v in basis]
    if _rank(basis, tol) < len(basis):
        raise PreconditionError("basis vectors are linearly dependent")
    return wedge_vectors(basis).support(0.0 if _is_exact(x for v in basis for x in v) else tol)


def support_by_projection(basis, tol=DEFAULT_TOL):
    """Support via the projection test: J such that π_J restricted to span(basis) is injective."""
    basis = [list(v) for v in basis]
    k = len(basis)
    if k == 0:
        return frozenset({()})
    n = len(basis[0])
    if _rank(basis, tol) < k:
        raise PreconditionError("basis vectors are linearly dependent")
    out = set()
    for J in combinations(range(n), k):
        if _rank([[v[j] for v in basis] for j in J], tol) == k:
            out.add(J)
    return frozenset(out)


def diag_act_kvector(x, v: KVector) -> KVector:
    """Action of diag(exp x) on a k-vector: e_J scales by exp(sum_{j in J} x_j)."""
    x = list(x)
    if len(x) != v.n:
        raise PreconditionError("dimension mismatch in diagonal action")
    return KVector(v.n, v.k, {J: c * math.exp(sum(x[j] for j in J)) for J, c in v.coords.items()})


def canonical_sign(v: KVector) -> KVector:
    """Flip v so that its first nonzero coordinate (lexicographic J) is positive."""
    for J, c in v.coords.items():
        return -v if c < 0 else v
    return v


@dataclass(frozen=True)
class MeasuredSubspace:
    """A k-dimensional subspace with a chosen nonzero top k-vector.

    ``plucker`` is stored with canonical sign; ``basis`` witnesses
    decomposability.
    """

    n: int
    k: int
    plucker: KVector
    basis: tuple

    @classmethod
    def from_basis(cls, basis, n=None):
        basis = tuple(tuple(v) for v in basis)
        if basis:
            n = len(basis[0])
        pl = wedge_vectors(basis, n)
        if pl.is_zero():
            raise PreconditionError("basis vectors are linearly dependent")
        return cls(n, len(basis), canonical_sign(pl), basis)

    @property
    def norm(self):
        """The MS-norm: max-coordinate norm of the volume element."""
        return kvec_norm(self.plucker)

    def support(self, tol=DEFAULT_TOL):
        return self.plucker.support(tol)

    def act(self, x):
        """diag(exp x) applied to the subspace and its volume element."""
        e = np.exp(np.asarray(x, dtype=float))
        basis = tuple(tuple(float(a) * float(b) for a, b in zip(e, v)) for v in self.basis)
        return MeasuredSubspace(self.n, self.k, canonical_sign(diag_act_kvector(x, self.plucker)), basis)
