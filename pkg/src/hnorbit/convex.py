"""Open H-polyhedra {x : Ax < b}: invariance dimension, degree, escape functionals.

Open sets are handled through closed relaxations: a polyhedron is nonempty when
it has a point with slack at least ``SLACK`` in every inequality.  All
optimisation is done with scipy's HiGHS LP solver.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from .errors import IntegrityError, PreconditionError

SLACK = 1e-7
NEG_INF = -math.inf
_LP_TOL = 1e-9


def _lp(c, A_ub=None, b_ub=None, bounds=None):
    return linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")


class Polyhedron:
    """The open set {x ∈ R^n : a_i·x < b_i for all i}."""

    def __init__(self, n, A=None, b=None):
        self.n = int(n)
        if self.n < 1:
            raise PreconditionError("ambient dimension must be positive")
        A = np.zeros((0, self.n)) if A is None else np.asarray(A, dtype=float).reshape(-1, self.n)
        b = np.zeros(0) if b is None else np.asarray(b, dtype=float).ravel()
        if A.shape[0] != b.shape[0]:
            raise PreconditionError("inequality count mismatch")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise PreconditionError("inequalities must be finite")
        self.A = A
        self.b = b
        self._empty: Optional[bool] = None

    @classmethod
    def from_inequalities(cls, n, ineqs):
        """From pairs ``(a, b)`` meaning a·x < b."""
        ineqs = list(ineqs)
        if not ineqs:
            return cls(n)
        A = [list(a) for a, _ in ineqs]
        b = [float(c) for _, c in ineqs]
        return cls(n, A, b)

    @classmethod
    def box(cls, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        n = lo.size
        I = np.eye(n)
        return cls(n, np.vstack([I, -I]), np.concatenate([hi, -lo]))

    @property
    def inequalities(self):
        return [(tuple(a), float(c)) for a, c in zip(self.A, self.b)]

    def to_dict(self):
        return {"n": self.n, "ineqs": [[list(map(float, a)), float(c)] for a, c in zip(self.A, self.b)]}

    @classmethod
    def from_dict(cls, d):
        n = int(d["n"])
        pairs = []
        for item in d.get("ineqs", []):
            a, c = item
            if len(a) != n:
                raise PreconditionError(f"inequality normal of length {len(a)} in dimension {n}")
            pairs.append((a, c))
        return cls.from_inequalities(n, pairs)

    def intersect(self, *others):
        A = [self.A] + [o.A for o in others]
        b = [self.b] + [o.b for o in others]
        for o in others:
            if o.n != self.n:
                raise PreconditionError("intersection of polyhedra in different dimensions")
        return Polyhedron(self.n, np.vstack(A), np.concatenate(b))

    def translate(self, t):
        t = np.asarray(t, dtype=float)
        return Polyhedron(self.n, self.A, self.b + self.A @ t)

    def permute(self, perm):
        """Image under x ↦ x[perm⁻¹] (coordinate i moves to position perm[i])."""
        perm = list(perm)
        A = np.zeros_like(self.A)
        A[:, perm] = self.A
        return Polyhedron(self.n, A, self.b)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.A @ x < self.b))

    # ---------------------------------------------------------------- LP helpers

    def interior_point(self):
        """A point with slack >= SLACK in every inequality, or None if empty."""
        m = len(self.b)
        if m == 0:
            return np.zeros(self.n)
        norms = np.linalg.norm(self.A, axis=1)
        zero = norms == 0
        if np.any(self.b[zero] <= 0):
            return None
        A, b, norms = self.A[~zero], self.b[~zero], norms[~zero]
        if len(b) == 0:
            return np.zeros(self.n)
        # maximise s subject to a_i x + s|a_i| <= b_i, s <= 1
        Aub = np.hstack([A, norms[:, None]])
        res = _lp(
            np.append(np.zeros(self.n), -1.0),
            Aub,
            b,
            bounds=[(None, None)] * self.n + [(None, 1.0)],
        )
        if res.status != 0 or -res.fun < SLACK:
            return None
        return res.x[: self.n]

    def is_empty(self):
        if self._empty is None:
            self._empty = self.interior_point() is None
        return self._empty

    def sup(self, c):
        """sup of c·x over the closure; +inf if unbounded, -inf if empty."""
        if self.is_empty():
            return NEG_INF
        res = _lp(-np.asarray(c, dtype=float), self.A if len(self.b) else None,
                  self.b if len(self.b) else None, bounds=[(None, None)] * self.n)
        if res.status == 3:
            return math.inf
        if res.status != 0:
            raise IntegrityError(f"LP failed: {res.message}")
        return float(-res.fun)

    def is_bounded_along(self, c):
        return self.sup(c) < math.inf and self.sup(-np.asarray(c, dtype=float)) < math.inf

    def nonredundant(self):
        """Copy with redundant inequalities removed (each tested by LP, one at a time)."""
        if self.is_empty():
            return Polyhedron(self.n, self.A, self.b)
        keep = list(range(len(self.b)))
        for i in range(len(self.b)):
            others = [j for j in keep if j != i]
            if not others:
                continue
            res = _lp(-self.A[i], self.A[others], self.b[others], bounds=[(None, None)] * self.n)
            if res.status == 0 and -res.fun <= self.b[i] + _LP_TOL * max(1.0, abs(self.b[i])):
                keep.remove(i)
        return Polyhedron(self.n, self.A[keep], self.b[keep])

    def lineality_basis(self):
        """Orthonormal basis (columns) of {d : A d = 0} for the binding inequalities."""
        A = self.nonredundant().A
        if A.shape[0] == 0:
            return np.eye(self.n)
        return null_space(A, rcond=1e-10)

    def recession_rays(self, tol=1e-9):
        """Unit extreme rays of {d : A d <= 0}; requires the cone to be pointed."""
        A = self.nonredundant().A
        rows = [a / np.linalg.norm(a) for a in A if np.linalg.norm(a) > 0]
        A = np.array(rows).reshape(-1, self.n)
        rays = []
        for sub in itertools.combinations(range(A.shape[0]), self.n - 1):
            M = A[list(sub)] if sub else np.zeros((0, self.n))
            N = null_space(M, rcond=1e-10) if M.size else np.eye(self.n)
            if N.shape[1] != 1:
                continue
            d = N[:, 0]
            for s in (d, -d):
                if np.all(A @ s <= tol) and not any(np.allclose(s, r, atol=1e-9) for r in rays):
                    rays.append(s)
        return rays


def _check_poly(P):
    if not isinstance(P, Polyhedron):
        raise PreconditionError("expected a Polyhedron")


def invdim(P: Polyhedron):
    """Dimension of the translation stabiliser; -inf for the empty set."""
    _check_poly(P)
    if P.is_empty():
        return NEG_INF
    return int(P.lineality_basis().shape[1])


def deg(P: Polyhedron):
    """invdim(P) if P is bounded modulo its stabiliser, else -inf."""
    _check_poly(P)
    d = invdim(P)
    if d == NEG_INF:
        return NEG_INF
    L = P.lineality_basis()
    perp = null_space(L.T) if L.shape[1] else np.eye(P.n)
    for j in range(perp.shape[1]):
        if not P.is_bounded_along(perp[:, j]):
            return NEG_INF
    return d


@dataclass
class EscapeFunctional:
    phi: np.ndarray
    rays: list
    ray_values: list
    checked_levels: tuple = (1.0, 10.0, 100.0)

    def __call__(self, x):
        return float(self.phi @ np.asarray(x, dtype=float))


def escape_functional(P: Polyhedron, levels=(1.0, 10.0, 100.0)) -> EscapeFunctional:
    """A linear φ with φ >= 2 on the unit extreme rays of the recession cone.

    Then φ > 1 on every unit recession direction, and {x ∈ P : φ(x) < r} is
    bounded for every r; the latter is re-checked by LP at ``levels``.
    """
    _check_poly(P)
    if P.is_empty():
        raise PreconditionError("escape functional of the empty set")
    if invdim(P) > 0:
        raise PreconditionError("escape functional needs a trivial stabiliser (invdim 0)")
    if all(P.is_bounded_along(e) for e in np.eye(P.n)):
        raise PreconditionError("escape functional needs an unbounded polyhedron")
    rays = P.recession_rays()
    if not rays:
        raise IntegrityError("unbounded polyhedron with no recession ray found")
    R = np.array(rays)
    n = P.n
    # max t subject to φ·r_i >= t, |φ|_inf <= 1
    res = _lp(
        np.append(np.zeros(n), -1.0),
        np.hstack([-R, np.ones((len(rays), 1))]),
        np.zeros(len(rays)),
        bounds=[(-1, 1)] * n + [(None, None)],
    )
    if res.status != 0 or -res.fun <= 1e-12:
        raise IntegrityError("recession cone is not pointed")
    t = -res.fun
    # among those, the φ of least l1 norm (φ = u - v, u, v >= 0)
    res2 = _lp(
        np.ones(2 * n),
        np.hstack([-R, R]),
        -np.full(len(rays), t * (1 - 1e-9)),
        bounds=[(0, 1)] * (2 * n),
    )
    phi = res2.x[:n] - res2.x[n:] if res2.status == 0 else res.x[:n]
    tmin = float(np.min(R @ phi))
    phi = phi * (2.0 / tmin)
    for r in levels:
        S = P.intersect(Polyhedron(n, phi[None, :], [r]))
        if not S.is_empty() and not all(S.is_bounded_along(e) for e in np.eye(n)):
            raise IntegrityError(f"sublevel set at {r} is unbounded")
    return EscapeFunctional(phi, rays, [float(v) for v in R @ phi], tuple(levels))


def includes(P: Polyhedron, Q: Polyhedron):
    """True if P ⊆ Q, checked inequality by inequality on the closure of P."""
    if P.n != Q.n:
        raise PreconditionError("dimension mismatch")
    if P.is_empty():
        return True
    for a, c in zip(Q.A, Q.b):
        if P.sup(a) > c + _LP_TOL * max(1.0, abs(c)):
            return False
    return True


def invdim_monotonicity_check(P: Polyhedron, Q: Polyhedron):
    """For P ⊆ Q (verified) return ``(invdim P, invdim Q)``; raises if the order fails."""
    if not includes(P, Q):
        raise PreconditionError("first polyhedron is not contained in the second")
    dp, dq = invdim(P), invdim(Q)
    if dp != NEG_INF and dp > dq:
        raise IntegrityError(f"invdim {dp} of the subset exceeds {dq}")
    return dp, dq


# --------------------------------------------------------------------------- covers


@dataclass
class CoverReport:
    n: int
    depth: int
    checked: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    intersecting_subset: Optional[tuple] = None
    complete: bool = True
    warnings: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations

    def to_dict(self):
        fmt = lambda v: "-inf" if v == NEG_INF else v  # noqa: E731
        return {
            "n": self.n,
            "depth": self.depth,
            "checked": [dict(e, invdim=fmt(e["invdim"])) for e in self.checked],
            "violations": [dict(e, invdim=fmt(e["invdim"])) for e in self.violations],
            "hypothesis_holds": self.passed,
            "n_plus_one_intersection": None
            if self.intersecting_subset is None
            else list(self.intersecting_subset),
            "complete": self.complete,
            "warnings": self.warnings,
        }


def cover_condition_check(family, n, depth=None, box=None, max_subsets=100_000) -> CoverReport:
    """Check invdim(U_{i1} ∩ … ∩ U_ik) <= n - k for every nonempty k-fold intersection.

    The polyhedral intersection contains the convex hull in question, so by
    monotonicity its invdim bounds the hull's.  Also looks for n+1 members with
    a common point (inside ``box = (lo, hi)`` when given).  Past
    ``max_subsets`` LP checks the report is marked incomplete.
    """
    family = list(family)
    for P in family:
        _check_poly(P)
        if P.n != n:
            raise PreconditionError("family member in the wrong dimension")
    m = len(family)
    depth = n if depth is None else int(depth)
    report = CoverReport(n, depth)
    if depth > m:
        report.warnings.append(f"depth {depth} exceeds family size {m}; clamped")
        depth = m
        report.depth = depth
    window = Polyhedron.box(*box) if box is not None else None
    budget = max_subsets
    for k in range(1, depth + 1):
        for sub in itertools.combinations(range(m), k):
            if budget <= 0:
                report.complete = False
                report.warnings.append("subset budget exhausted")
                return _finish_cover(report, family, n, window, 0)
            budget -= 1
            S = family[sub[0]].intersect(*[family[i] for i in sub[1:]])
            if S.is_empty():
                continue
            d = invdim(S)
            entry = {"subset": list(sub), "k": k, "invdim": d, "bound": n - k}
            report.checked.append(entry)
            if d > n - k:
                report.violations.append(entry)
    return _finish_cover(report, family, n, window, budget)


def _finish_cover(report, family, n, window, budget):
    m = len(family)
    if m < n + 1:
        return report
    for sub in itertools.combinations(range(m), n + 1):
        if budget <= 0:
            report.complete = False
            report.warnings.append("subset budget exhausted before the (n+1)-fold search finished")
            return report
        budget -= 1
        parts = [family[i] for i in sub] + ([window] if window is not None else [])
        if not parts[0].intersect(*parts[1:]).is_empty():
            report.intersecting_subset = sub
            return report
    return report


# --------------------------------------------------------------------------- standard examples


def square_cylinder(half_width=1.0, axis=2, n=3):
    """{x : |x_i| < half_width for i != axis}, an open cylinder around a coordinate axis."""
    rows, rhs = [], []
    for i in range(n):
        if i == axis:
            continue
        e = np.eye(n)[i]
        rows += [e, -e]
        rhs += [half_width, half_width]
    return Polyhedron(n, rows, rhs)


def parabola_region(slopes=None, M=None):
    """Outer polyhedral approximation of {y > x²}: y > 2kx - k² for each k.

    With ``M`` the strip |x| < M is added as well.
    """
    slopes = np.linspace(-4, 4, 17) if slopes is None else np.asarray(slopes, dtype=float)
    rows = [[2 * k, -1.0] for k in slopes]
    rhs = [k * k for k in slopes]
    if M is not None:
        rows += [[1.0, 0.0], [-1.0, 0.0]]
        rhs += [M, M]
    return Polyhedron(2, rows, rhs)


__all__ = [
    "CoverReport",
    "EscapeFunctional",
    "NEG_INF",
    "Polyhedron",
    "cover_condition_check",
    "deg",
    "escape_functional",
    "includes",
    "invdim",
    "invdim_monotonicity_check",
    "parabola_region",
    "square_cylinder",
]
