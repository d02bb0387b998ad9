"""Grayson profiles, Harder-Narasimhan filtrations, stability and measured flags."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import IntegrityError, PreconditionError
from .exterior import MeasuredSubspace
from .lattice import (
    DEFAULT_TOL,
    EUCLIDEAN,
    Lattice,
    NormSpec,
    Sublattice,
    minimal_covolume_sublattice,
    saturate,
    successive_minima,
)
from .reduction import DEFAULT_CAP


# --------------------------------------------------------------------------- profile


def _below_float(a, b, c, tol):
    (xa, ya), (xb, yb), (xc, yc) = a, b, c
    chord = ya + (yc - ya) * (xb - xa) / (xc - xa)
    return yb < chord - tol


def _below_exact(a, b, c):
    # points carry squared covolumes s; compare s_b^(xc-xa) < s_a^(xc-xb) * s_c^(xb-xa)
    (xa, sa), (xb, sb), (xc, sc) = a, b, c
    return sb ** (xc - xa) < sa ** (xc - xb) * sc ** (xb - xa)


def lower_hull_vertices(points, tol=DEFAULT_TOL, exact_values=None):
    """Indices of the lower convex hull vertices of points sorted by x.

    A point survives only if it lies below the chord of its hull neighbours
    by more than ``tol``.  With ``exact_values`` (squared covolumes) the test
    is the exact strict inequality instead.
    """
    hull = [0]
    for i in range(1, len(points)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if exact_values is not None:
                below = _below_exact(
                    (points[a][0], exact_values[a]),
                    (points[b][0], exact_values[b]),
                    (points[i][0], exact_values[i]),
                )
            else:
                below = _below_float(points[a], points[b], points[i], tol)
            if below:
                break
            hull.pop()
        hull.append(i)
    return hull


@dataclass
class GraysonProfile:
    """Minimal log-covolume at every rank and the lower hull vertices."""

    points: list  # (rank, min log covolume), rank = 0..n
    vertex_ranks: tuple
    minimizers: list = field(repr=False)  # MinCovolume per rank 0..n (None at rank 0)
    exact_sq: Optional[list] = field(default=None, repr=False)

    @property
    def n(self):
        return len(self.points) - 1

    def slopes(self):
        v = self.vertex_ranks
        p = self.points
        return [(p[b][1] - p[a][1]) / (b - a) for a, b in zip(v, v[1:])]

    def csv_rows(self):
        vs = set(self.vertex_ranks)
        return [(k, y, k in vs) for k, y in self.points]

    def to_csv(self):
        lines = ["rank,min_log_cov,is_vertex"]
        for k, y, isv in self.csv_rows():
            lines.append(f"{k},{y!r},{int(isv)}")
        return "\n".join(lines) + "\n"


def grayson_profile(L: Lattice, tol=DEFAULT_TOL, cap=DEFAULT_CAP) -> GraysonProfile:
    """Lower boundary of the set of (rank, log covolume) over all subgroups."""
    n = L.n
    exact = L.is_exact
    mins = [None] + [minimal_covolume_sublattice(L, k, 0 if exact else tol, cap) for k in range(1, n + 1)]
    points = [(0, 0.0)] + [(k, mins[k].log_covolume) for k in range(1, n + 1)]
    exact_sq = None
    if exact:
        exact_sq = [Fraction(1)] + [mins[k].covolume_sq_exact for k in range(1, n + 1)]
    hull = lower_hull_vertices(points, tol, exact_sq)
    return GraysonProfile(points, tuple(hull), mins, exact_sq)


# --------------------------------------------------------------------------- HN filtration


@dataclass
class HNFiltration:
    chain: list  # Sublattice per vertex, from {0} to the full lattice
    covolumes: list
    profile: GraysonProfile = field(repr=False)

    @property
    def ranks(self):
        return [g.rank for g in self.chain]

    @property
    def is_trivial(self):
        return len(self.chain) == 2

    def proper_members(self):
        return self.chain[1:-1]

    def measured_flag(self):
        members = [_measured(g) for g in self.chain[1:-1]]
        return MeasuredFlag(self.chain[0].n, tuple(members), tuple(self.chain[1:-1]))


def hn_filtration(L: Lattice, tol=DEFAULT_TOL, cap=DEFAULT_CAP, profile=None) -> HNFiltration:
    """The canonical chain of subgroups realising the Grayson polygon vertices.

    Raises IntegrityError when a vertex minimiser is not unique within ``tol``
    or when consecutive minimisers are not nested.
    """
    prof = grayson_profile(L, tol, cap) if profile is None else profile
    n = L.n
    chain = [Sublattice(L, ())]
    covs = [1.0]
    for k in prof.vertex_ranks[1:]:
        m = prof.minimizers[k]
        if k < n and m.ties:
            raise IntegrityError(
                f"rank-{k} vertex has {len(m.ties) + 1} minimisers within tolerance"
            )
        chain.append(m.sublattice)
        covs.append(m.covolume)
    for a, b in zip(chain, chain[1:]):
        if not b.contains(a):
            raise IntegrityError(f"rank-{a.rank} member is not contained in the rank-{b.rank} member")
    return HNFiltration(chain, covs, prof)


def is_stable(L: Lattice, tol=DEFAULT_TOL, cap=DEFAULT_CAP):
    """``(True, None)`` if every proper subgroup has covolume >= 1 - tol.

    Otherwise ``(False, witness)`` with a subgroup of covolume < 1 - tol.
    """
    if not L.is_unimodular(max(tol, 1e-9)):
        raise PreconditionError("stability is defined for unimodular lattices")
    worst = None
    for k in range(1, L.n):
        m = minimal_covolume_sublattice(L, k, tol, cap)
        if L.is_exact:
            bad = m.covolume_sq_exact < 1
        else:
            bad = m.covolume < 1 - tol
        if bad and (worst is None or m.covolume < worst.covolume):
            worst = m
    if worst is None:
        return True, None
    return False, worst.sublattice


# --------------------------------------------------------------------------- measured flags


def _measured(g: Sublattice) -> MeasuredSubspace:
    ex = g.vectors_exact()
    return MeasuredSubspace.from_basis(ex if ex is not None else g.vectors().tolist())


@dataclass(frozen=True)
class MeasuredFlag:
    """Proper members 0 < v_1 < … < v_{l-1} < R^n; {0} and R^n are implicit."""

    n: int
    members: tuple
    sublattices: tuple = field(default=(), repr=False)

    def __post_init__(self):
        dims = [m.k for m in self.members]
        if any(not 0 < d < self.n for d in dims) or any(a >= b for a, b in zip(dims, dims[1:])):
            raise PreconditionError(f"flag dimensions must increase strictly inside (0, n): {dims}")

    @property
    def dims(self):
        return [m.k for m in self.members]

    @property
    def is_trivial(self):
        return not self.members

    @property
    def flag_norm(self):
        """max over proper members of the MS-norm; 1 for the trivial flag."""
        if not self.members:
            return 1.0
        return max(float(m.norm) for m in self.members)

    def bases(self):
        return [list(m.basis) for m in self.members]


def minkowski_flag(L: Lattice, norm: NormSpec = EUCLIDEAN, tol=DEFAULT_TOL, cap=DEFAULT_CAP):
    """Spans of lattice vectors shorter than r, over all r, each measured by L ∩ span."""
    mins = successive_minima(L, norm, cap)
    vals = mins.values
    ends = []
    for i in range(1, len(vals)):
        if vals[i] > vals[i - 1] * (1 + tol):
            ends.append(i)
    members, subs = [], []
    for d in ends:
        g = saturate(Sublattice(L, mins.witnesses[:d]))
        subs.append(g)
        members.append(_measured(g))
    return MeasuredFlag(L.n, tuple(members), tuple(subs))


def minkowski_flag_bound(n, norm: NormSpec = EUCLIDEAN, det=1.0):
    """Upper bound on the flag norm of any Minkowski flag.

    A member of dimension d is measured by a subgroup containing witnesses of
    λ_1..λ_d, so its MS-norm is at most its covolume, at most the product of
    those witnesses' Euclidean lengths, at most λ_1⋯λ_d / c_low^d.  The first d
    minima have geometric mean at most that of all n, and Minkowski's second
    theorem bounds λ_1⋯λ_n by 2^n·det / vol{N <= 1}.
    """
    prod_bound = 2.0**n * abs(det) / norm.unit_ball_volume_lower(n)
    best = 1.0
    for d in range(1, n):
        best = max(best, prod_bound ** (d / n) / norm.c_low**d)
    return best


def flag_norm_bound_check(L: Lattice, norm: NormSpec = EUCLIDEAN, tol=DEFAULT_TOL, cap=DEFAULT_CAP):
    """``(flag norm of the Minkowski flag, implemented bound C_n)``; raises on violation."""
    F = minkowski_flag(L, norm, tol, cap)
    value = F.flag_norm
    bound = minkowski_flag_bound(L.n, norm, L.det)
    if value > bound * (1 + 1e-12):
        raise IntegrityError(f"Minkowski flag norm {value} exceeds the bound {bound}")
    return value, bound


# --------------------------------------------------------------------------- permutation lemma


def _adapted_orthonormal_basis(chain, n, tol):
    """Orthonormal basis whose initial segments span the chain members, plus their dims."""
    dims = []
    Q = np.zeros((n, 0))
    for member in chain:
        member = np.atleast_2d(np.asarray(member, dtype=float))
        target = np.linalg.matrix_rank(member, tol=None) if member.size else 0
        for v in member:
            r = v - Q @ (Q.T @ v)
            r = r - Q @ (Q.T @ r)
            nr = np.linalg.norm(r)
            if nr > tol * max(1.0, np.linalg.norm(v)):
                Q = np.column_stack([Q, r / nr])
        if Q.shape[1] != target or (dims and target <= dims[-1]):
            raise PreconditionError("chain is not strictly increasing")
        dims.append(target)
    if not dims or dims[-1] != n:
        # complete with coordinate vectors; the lemma's flag ends at R^n
        for j in range(n):
            e = np.eye(n)[j]
            r = e - Q @ (Q.T @ e)
            r = r - Q @ (Q.T @ r)
            nr = np.linalg.norm(r)
            if nr > 1e-8:
                Q = np.column_stack([Q, r / nr])
        dims.append(n)
    return Q, dims


def flag_support_permutation(chain, n=None, tol=DEFAULT_TOL):
    """A permutation σ of range(n) with {σ(0),…,σ(d-1)} in supp(v) for each member v.

    ``chain`` lists the members (each a list of spanning vectors, or a
    MeasuredSubspace) in increasing order; {0} and R^n may be omitted.
    Follows the inductive construction: refine to a full flag, and at each
    stage take a nonzero vector of the next member killed by the current
    coordinate projection and add one of its nonzero coordinates.  Among the
    admissible coordinates the largest one is chosen.
    """
    bases = []
    for m in chain:
        if isinstance(m, MeasuredSubspace):
            bases.append([list(v) for v in m.basis])
        else:
            bases.append([list(v) for v in m])
    bases = [b for b in bases if b]
    if n is None:
        if not bases:
            raise PreconditionError("ambient dimension needed for an empty chain")
        n = len(bases[0][0])
    Q, _ = _adapted_orthonormal_basis(bases, n, tol)
    sigma = []
    for k in range(n):
        M = Q[:, : k + 1]
        if k == 0:
            v = M[:, 0]
        else:
            A = M[sigma, :]
            _, s, vt = np.linalg.svd(A)
            if s[-1] < tol:
                raise IntegrityError("coordinate projection is not injective on the previous member")
            v = M @ vt[-1]
        rest = [j for j in range(n) if j not in sigma]
        mags = np.abs(v[rest])
        best = int(np.argmax(mags))
        if mags[best] <= tol * np.linalg.norm(v):
            raise IntegrityError("kernel vector has no admissible coordinate within tolerance")
        sigma.append(rest[best])
    return tuple(sigma)


def check_permutation(sigma, chain, tol=DEFAULT_TOL):
    """True if {σ(0..d-1)} lies in the support of every member of ``chain``."""
    from .exterior import support_of_subspace

    for m in chain:
        basis = m.basis if isinstance(m, MeasuredSubspace) else m
        basis = [list(v) for v in basis]
        if not basis:
            continue
        J = tuple(sorted(sigma[: len(basis)]))
        if J not in support_of_subspace(basis, tol):
            return False
    return True
