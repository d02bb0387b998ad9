"""Lattices, sublattices, covolumes, short vectors and successive minima.

A :class:`Lattice` stores an n×n basis whose *columns* are the basis
vectors.  Sublattices are described by integer coefficient vectors in that
basis, so they survive diagonal rescaling of the ambient space unchanged.

Rank-k sublattices of minimal covolume are found by enumerating short vectors
of the k-th exterior power of the lattice and keeping the decomposable ones:
a primitive decomposable vector of ∧^kΛ is exactly the volume element of a
saturated rank-k subgroup, and its length is that subgroup's covolume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from .errors import PreconditionError, ResourceError
from .exterior import shuffle_sign, wedge_vectors
from .intlinalg import (
    content,
    det_exact,
    integer_kernel,
    plucker_int,
    rank_exact,
    saturation_basis,
    solve_rational,
)
from .reduction import DEFAULT_CAP, lll_reduce_basis, lll_reduce_gram, short_vectors_gram

DEFAULT_TOL = 1e-9


def ball_volume(k):
    """Volume of the Euclidean unit ball in R^k."""
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


# --------------------------------------------------------------------------- norms


@dataclass(frozen=True)
class NormSpec:
    """A norm on R^n with constants ``c_low·|v|₂ <= N(v) <= c_high·|v|₂``."""

    kind: str
    evaluator: Callable = field(repr=False, compare=False)
    c_low: float = 1.0
    c_high: float = 1.0

    def __call__(self, v):
        return float(self.evaluator(np.asarray(v, dtype=float)))

    @classmethod
    def euclidean(cls):
        return cls("euclidean", np.linalg.norm, 1.0, 1.0)

    @classmethod
    def linf(cls, n):
        return cls("l_infinity", lambda v: np.max(np.abs(v)), 1 / math.sqrt(n), 1.0)

    @classmethod
    def l1(cls, n):
        return cls("l_1", lambda v: np.sum(np.abs(v)), 1.0, math.sqrt(n))

    @classmethod
    def custom(cls, evaluator, c_low, c_high):
        return cls("custom", evaluator, float(c_low), float(c_high))

    @classmethod
    def by_name(cls, name, n):
        name = name.lower()
        if name in ("euclidean", "l2"):
            return cls.euclidean()
        if name in ("linf", "l_infinity", "inf", "max"):
            return cls.linf(n)
        if name in ("l1", "l_1"):
            return cls.l1(n)
        raise PreconditionError(f"unknown norm {name!r}")

    def unit_ball_volume_lower(self, n):
        """A lower bound (exact for the built-in kinds) on the volume of {N <= 1}."""
        if self.kind == "euclidean":
            return ball_volume(n)
        if self.kind == "l_infinity":
            return 2.0**n
        if self.kind == "l_1":
            return 2.0**n / math.factorial(n)
        return ball_volume(n) / self.c_high**n

    def spot_check(self, n, rng=None, samples=200, tol=1e-9):
        """Check homogeneity, the triangle inequality and the equivalence constants on samples."""
        rng = np.random.default_rng(0) if rng is None else rng
        for _ in range(samples):
            u, v = rng.normal(size=n), rng.normal(size=n)
            s = rng.normal()
            nu, nv = self(u), self(v)
            if abs(self(s * u) - abs(s) * nu) > tol * (1 + abs(s) * nu):
                return False
            if self(u + v) > nu + nv + tol * (nu + nv):
                return False
            e = float(np.linalg.norm(u))
            if not (self.c_low * e * (1 - tol) <= nu <= self.c_high * e * (1 + tol)):
                return False
        return True


EUCLIDEAN = NormSpec.euclidean()

# --------------------------------------------------------------------------- lattices


def _as_exact(x):
    if isinstance(x, bool):
        raise PreconditionError("boolean lattice entry")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str) and "." not in x and "e" not in x.lower():
        return Fraction(x)
    return None


class Lattice:
    """A full-rank lattice in R^n; the columns of ``basis`` are its basis vectors.

    If every entry is an int, a Fraction, or a string like ``"p/q"``, an exact
    copy of the basis is kept and covolumes are also available exactly.
    """

    def __init__(self, basis, *, unimodular=False, tol=DEFAULT_TOL):
        rows = [list(r) for r in basis]
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise PreconditionError("basis must be a nonempty square matrix")
        exact = [[_as_exact(v) for v in r] for r in rows]
        if all(v is not None for r in exact for v in r):
            self.exact = tuple(tuple(r) for r in exact)
            arr = np.array([[float(v) for v in r] for r in exact])
        else:
            self.exact = None
            arr = np.array([[float(v) for v in r] for r in rows])
        if not np.all(np.isfinite(arr)):
            raise PreconditionError("basis has non-finite entries")
        arr.setflags(write=False)
        self.basis = arr
        self.n = n
        if self.exact is not None:
            if det_exact(self.exact) == 0:
                raise PreconditionError("basis is singular")
        elif abs(np.linalg.det(arr)) <= 1e-300 or np.linalg.matrix_rank(arr) < n:
            raise PreconditionError("basis is singular")
        if unimodular and not self.is_unimodular(tol):
            raise PreconditionError(f"|det| = {abs(self.det)} is not 1")

    @classmethod
    def identity(cls, n):
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def diagonal(cls, diag):
        n = len(diag)
        return cls([[diag[i] if i == j else 0 for j in range(n)] for i in range(n)])

    def __repr__(self):
        return f"Lattice(n={self.n}, exact={self.is_exact})"

    @property
    def is_exact(self):
        return self.exact is not None

    @cached_property
    def gram(self):
        g = self.basis.T @ self.basis
        g = (g + g.T) / 2
        g.setflags(write=False)
        return g

    @cached_property
    def reduction(self):
        """``(U, Gred)``: LLL transform of the basis and the reduced Gram matrix."""
        U, Bred = lll_reduce_basis(self.basis)
        G = Bred.T @ Bred
        G = (G + G.T) / 2
        G.setflags(write=False)
        return U, G

    @cached_property
    def gram_exact(self):
        if self.exact is None:
            return None
        B, n = self.exact, self.n
        return tuple(
            tuple(sum(B[r][i] * B[r][j] for r in range(n)) for j in range(n)) for i in range(n)
        )

    @cached_property
    def det(self):
        if self.exact is not None:
            return float(det_exact(self.exact))
        return float(np.linalg.det(self.basis))

    @cached_property
    def det_exact(self):
        return None if self.exact is None else det_exact(self.exact)

    def is_unimodular(self, tol=DEFAULT_TOL):
        if self.exact is not None:
            return abs(self.det_exact) == 1
        return abs(abs(self.det) - 1) <= tol

    def vector(self, coeffs):
        return self.basis @ np.asarray(coeffs, dtype=float)

    def rows_as_strings(self):
        if self.exact is not None:
            return [[str(v) for v in r] for r in self.exact]
        return [[repr(float(v)) for v in r] for r in self.basis]


# --------------------------------------------------------------------------- sublattices


def _canonical(vec):
    for v in vec:
        if v:
            return tuple(-t for t in vec) if v < 0 else tuple(vec)
    return tuple(vec)


@dataclass(frozen=True, eq=False)
class Sublattice:
    """The subgroup of ``parent`` generated by integer coefficient vectors ``gens``."""

    parent: Lattice
    gens: tuple

    def __post_init__(self):
        gens = tuple(tuple(int(c) for c in g) for g in self.gens)
        object.__setattr__(self, "gens", gens)
        if any(len(g) != self.parent.n for g in gens):
            raise PreconditionError("generator length does not match the lattice dimension")
        if gens and rank_exact(gens) < len(gens):
            raise PreconditionError("sublattice generators are linearly dependent")

    @property
    def rank(self):
        return len(self.gens)

    @property
    def n(self):
        return self.parent.n

    def coefficient_matrix(self):
        """n×k integer matrix whose columns are the generators."""
        return np.array(self.gens, dtype=np.int64).T.reshape(self.n, self.rank)

    def vectors(self):
        """Generators embedded in R^n, one per row."""
        if not self.gens:
            return np.zeros((0, self.n))
        return (self.parent.basis @ self.coefficient_matrix().astype(float)).T

    def vectors_exact(self):
        if self.parent.exact is None:
            return None
        B = self.parent.exact
        return [
            [sum(B[i][j] * g[j] for j in range(self.n)) for i in range(self.n)] for g in self.gens
        ]

    @cached_property
    def key(self):
        """Canonical integer Plücker vector of the generators; equal keys ⇔ equal subgroups."""
        if not self.gens:
            return ()
        return _canonical(plucker_int(self.gens))

    def __eq__(self, other):
        return (
            isinstance(other, Sublattice)
            and self.parent is other.parent
            and self.rank == other.rank
            and self.key == other.key
        )

    def __hash__(self):
        return hash((id(self.parent), self.key))

    def plucker(self):
        """Volume element v_1 ∧ … ∧ v_k of the embedded generators."""
        ex = self.vectors_exact()
        if ex is not None and ex:
            return wedge_vectors(ex)
        return wedge_vectors(self.vectors().tolist(), self.n)

    def gram(self):
        V = self.vectors()
        return V @ V.T

    def covolume_sq_exact(self):
        if self.parent.exact is None:
            return None
        if not self.gens:
            return Fraction(1)
        G = self.parent.gram_exact
        n = self.n
        M = [
            [sum(a[i] * G[i][j] * b[j] for i in range(n) for j in range(n)) for b in self.gens]
            for a in self.gens
        ]
        return det_exact(M)

    def contains(self, other):
        """True if every generator of ``other`` is an integer combination of ours."""
        if not self.gens:
            return not other.gens
        A = [[g[i] for g in self.gens] for i in range(self.n)]
        for h in other.gens:
            sol = solve_rational(A, h)
            if sol is None or any(s.denominator != 1 for s in sol):
                return False
        return True

    def is_saturated(self):
        return covolume(saturate(self)) >= covolume(self) * (1 - 1e-12) if self.gens else True


def covolume(g: Sublattice) -> float:
    """Euclidean covolume of span(g)/g; 1 for the trivial subgroup."""
    if g.rank == 0:
        return 1.0
    ex = g.covolume_sq_exact()
    if ex is not None:
        if ex <= 0:
            raise PreconditionError("dependent generators")
        return math.sqrt(ex)
    d = np.linalg.det(g.gram())
    if d <= 0:
        raise PreconditionError("dependent generators")
    return math.sqrt(d)


def saturate(g: Sublattice) -> Sublattice:
    """Primitive closure: parent ∩ (rational span of g), size-reduced."""
    if g.rank == 0:
        return g
    basis = saturation_basis(g.gens, g.n)
    return Sublattice(g.parent, tuple(map(tuple, _reduce_gens(g.parent, basis))))


def _reduce_gens(L, gens):
    """LLL-reduce a list of integer coefficient vectors inside L (same subgroup)."""
    if len(gens) <= 1:
        return [_canonical(tuple(gens[0]))] if gens else []
    V = L.basis @ np.array(gens, dtype=float).T
    G = V.T @ V
    try:
        U, _ = lll_reduce_gram((G + G.T) / 2)
    except np.linalg.LinAlgError:
        return [tuple(g) for g in gens]
    Ci = np.array(gens, dtype=object).T
    new = Ci.dot(U.astype(object))
    return [_canonical(tuple(int(v) for v in new[:, j])) for j in range(new.shape[1])]


# --------------------------------------------------------------------------- enumeration


@dataclass(frozen=True)
class LatticeVector:
    coeffs: tuple
    vector: np.ndarray = field(compare=False, repr=False)
    norm: float


def enumerate_short_vectors(L: Lattice, R: float, cap=DEFAULT_CAP):
    """Nonzero lattice vectors of Euclidean norm <= R, one per ±pair, sorted by norm."""
    if not R > 0:
        raise PreconditionError("radius must be positive")
    U, Gred = L.reduction
    found = short_vectors_gram(Gred, R, cap=cap, reduce=False, transform=U)
    out = []
    limit = R * R * (1 + 1e-12)
    for nsq, c in found:
        if nsq <= limit:
            out.append(LatticeVector(c, L.vector(c), math.sqrt(nsq)))
    return out


class _IndependenceTracker:
    """Incremental exact rank test for integer vectors."""

    def __init__(self, n):
        self.n = n
        self.rows = []  # (pivot, row) in Fractions

    def add(self, v):
        r = [Fraction(x) for x in v]
        for p, row in self.rows:
            if r[p]:
                f = r[p] / row[p]
                r = [a - f * b for a, b in zip(r, row)]
        p = next((i for i, x in enumerate(r) if x), None)
        if p is None:
            return False
        self.rows.append((p, r))
        return True


@dataclass(frozen=True)
class Minima:
    values: tuple
    witnesses: tuple  # integer coefficient vectors
    vectors: np.ndarray = field(repr=False, compare=False)
    norm: str = "euclidean"


def _reduced_basis_coeffs(L):
    U, _ = L.reduction
    return [tuple(int(v) for v in U[:, j]) for j in range(L.n)]


def successive_minima(L: Lattice, norm: NormSpec = EUCLIDEAN, cap=DEFAULT_CAP) -> Minima:
    """Successive minima λ_1 <= … <= λ_n under ``norm`` with witness vectors.

    The reduced basis gives λ_n <= T := max N(b_i); every vector with N(v) <= T
    has Euclidean length <= T / c_low, so that ball is enumerated and filtered.
    """
    n = L.n
    T = max(norm(L.vector(c)) for c in _reduced_basis_coeffs(L))
    U, Gred = L.reduction
    found = short_vectors_gram(Gred, T / norm.c_low, cap=cap, reduce=False, transform=U)
    cands = []
    for _, c in found:
        v = L.vector(c)
        nv = norm(v)
        if nv <= T * (1 + 1e-12):
            cands.append((nv, c, v))
    cands.sort(key=lambda t: (t[0], t[1]))
    tracker = _IndependenceTracker(n)
    vals, wits, vecs = [], [], []
    for nv, c, v in cands:
        if tracker.add(c):
            vals.append(nv)
            wits.append(c)
            vecs.append(v)
            if len(vals) == n:
                break
    if len(vals) < n:
        raise RuntimeError("successive minima search lost completeness (numerical breakdown)")
    return Minima(tuple(vals), tuple(wits), np.array(vecs), norm.kind)


def is_well_rounded(L: Lattice, norm: NormSpec = EUCLIDEAN, tol=DEFAULT_TOL, cap=DEFAULT_CAP):
    m = successive_minima(L, norm, cap)
    return m.values[-1] / m.values[0] <= 1 + tol


# --------------------------------------------------------------------------- exterior powers


def compound_gram(G, k):
    """Gram matrix of ∧^kΛ in the basis e_J of coefficient space (k×k minors of G)."""
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    J = index_arrays(n, k)
    if k == 0:
        return np.ones((1, 1))
    sub = G[J[:, None, :, None], J[None, :, None, :]]
    C = np.linalg.det(sub)
    return (C + C.T) / 2


def compound_gram_exact(G, k):
    n = len(G)
    sets = list(combinations(range(n), k))
    return [[det_exact([[G[i][j] for j in J] for i in I]) for J in sets] for I in sets]


_INDEX_CACHE = {}


def index_arrays(n, k):
    key = (n, k)
    if key not in _INDEX_CACHE:
        _INDEX_CACHE[key] = np.array(list(combinations(range(n), k)), dtype=np.intp).reshape(-1, k)
    return _INDEX_CACHE[key]


_WEDGE_MAP_CACHE = {}


def _wedge_map_layout(n, k):
    key = (n, k)
    if key not in _WEDGE_MAP_CACHE:
        small = {J: t for t, J in enumerate(combinations(range(n), k))}
        entries = []
        for r, K in enumerate(combinations(range(n), k + 1)):
            for i in K:
                J = tuple(j for j in K if j != i)
                entries.append((r, i, small[J], shuffle_sign((i,), J)))
        _WEDGE_MAP_CACHE[key] = (len(list(combinations(range(n), k + 1))), entries)
    return _WEDGE_MAP_CACHE[key]


def decompose(omega, n, k):
    """Recover the saturated subgroup whose volume element is the primitive ``omega``.

    ``omega`` holds integer coordinates of a k-vector in coefficient space.
    Returns generator rows, or None when ``omega`` is not decomposable.
    """
    if k == 0:
        return []
    if k == 1:
        return [list(omega)]
    if k == n:
        return [[int(i == j) for j in range(n)] for i in range(n)]
    rows, entries = _wedge_map_layout(n, k)
    A = [[0] * n for _ in range(rows)]
    for r, i, t, s in entries:
        A[r][i] += s * omega[t]
    ker = integer_kernel(A)
    if len(ker) != k:
        return None
    if _canonical(plucker_int(ker)) != _canonical(tuple(omega)):
        return None
    return ker


@dataclass
class MinCovolume:
    """Result of a minimal-covolume search at a fixed rank."""

    sublattice: Sublattice
    covolume: float
    covolume_sq_exact: Optional[Fraction]
    certificate: dict
    ties: list
    certified: bool = True

    @property
    def log_covolume(self):
        if self.covolume_sq_exact is not None:
            return 0.5 * math.log(self.covolume_sq_exact)
        return math.log(self.covolume)


def _initial_upper_bound(L, k):
    basis = _reduced_basis_coeffs(L)
    order = sorted(basis, key=lambda c: float(np.linalg.norm(L.vector(c))))
    g = Sublattice(L, tuple(order[:k]))
    return g, covolume(g)


def sublattices_below(L: Lattice, k: int, bound: float, cap=DEFAULT_CAP):
    """All saturated rank-k subgroups with covolume <= bound, sorted by covolume.

    Returns a list of ``(covolume, Sublattice)``.
    """
    n = L.n
    if not 1 <= k <= n:
        raise PreconditionError(f"rank {k} outside [1, {n}]")
    if k == n:
        full = Sublattice(L, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))
        c = abs(L.det)
        return [(c, full)] if c <= bound else []
    # enumerate in LLL coordinates, where the compound Gram is well conditioned
    U, Gred = L.reduction
    Ub = U.astype(object)
    Gk = compound_gram(Gred, k)
    found = short_vectors_gram(Gk, bound, cap=cap)
    out = []
    limit = bound * bound * (1 + 1e-12)
    for nsq, omega in found:
        if nsq > limit or content(omega) != 1:
            continue
        gens = decompose(omega, n, k)
        if gens is None:
            continue
        gens = [[int(v) for v in Ub.dot(np.array(r, dtype=object))] for r in gens]
        g = Sublattice(L, tuple(map(tuple, _reduce_gens(L, gens))))
        out.append((math.sqrt(nsq), g))
    out.sort(key=lambda t: (t[0], t[1].key))
    return out


def minimal_covolume_sublattice(L: Lattice, k: int, tol=DEFAULT_TOL, cap=DEFAULT_CAP) -> MinCovolume:
    """A rank-k subgroup of minimal covolume, with a completeness certificate.

    ``ties`` lists every other saturated rank-k subgroup whose log-covolume is
    within ``tol`` of the minimum (exactly equal in rational mode).
    """
    n = L.n
    if not 1 <= k <= n:
        raise PreconditionError(f"rank {k} outside [1, {n}]")
    exact = L.is_exact
    if k == n:
        full = Sublattice(L, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))
        sq = L.det_exact**2 if exact else None
        return MinCovolume(
            full, abs(L.det), sq, {"method": "full rank", "rank": n}, [], True
        )
    seed, ub = _initial_upper_bound(L, k)
    radius = ub * math.exp(2 * tol) + 1e-15
    try:
        cands = sublattices_below(L, k, radius, cap=cap)
    except ResourceError as exc:
        partial = MinCovolume(
            seed, ub, seed.covolume_sq_exact(), {"method": "exterior-power", "rank": k}, [], False
        )
        raise ResourceError(str(exc), cap=cap, partial=partial) from exc
    if not cands:
        raise RuntimeError("exterior-power enumeration lost the seed subgroup")
    if exact:
        Gk = compound_gram_exact(L.gram_exact, k)
        scored = []
        for c, g in cands:
            w = _canonical(plucker_int(g.gens))
            sq = sum(w[i] * Gk[i][j] * w[j] for i in range(len(w)) for j in range(len(w)))
            scored.append((sq, g))
        scored.sort(key=lambda t: (t[0], t[1].key))
        best_sq, best = scored[0]
        ties = [g for sq, g in scored[1:] if sq == best_sq]
        cov = math.sqrt(best_sq)
    else:
        cov, best = cands[0]
        best_sq = None
        ties = [g for c, g in cands[1:] if math.log(c) - math.log(cov) <= tol]
        cov = covolume(best)
    cert = {
        "method": "exterior-power",
        "rank": k,
        "wedge_radius": radius,
        "seed_covolume": ub,
        "candidates": len(cands),
        "argument": (
            "every saturated rank-k subgroup of covolume <= wedge_radius is a primitive "
            "decomposable vector of the k-th exterior power of norm <= wedge_radius; all "
            "such vectors were enumerated, and the seed subgroup attains wedge_radius"
        ),
    }
    return MinCovolume(best, cov, best_sq, cert, ties, True)
