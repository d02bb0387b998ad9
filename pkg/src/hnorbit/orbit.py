"""Searching the diagonal orbit exp(x)·Λ, Σx = 0, for stable and well-rounded points.

Both searches are local ascents with restarts.  For stability the ascent
alternates a step guided by the Harder-Narasimhan flag with a sequential-LP
step on the linearised margin, and falls back to a branch-and-bound over boxes
that uses the convexity of x ↦ log covolume(exp(x)Γ) for bounds.  For well
roundedness the ascent equalises the norms of the current minima witnesses and
otherwise follows the Minkowski flag.

Box coordinates are y ∈ R^{n-1} with x = (y, -Σy).
"""
from __future__ import annotations

import heapq
import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.special import logsumexp

from .errors import BudgetExhausted, HNOrbitError, IntegrityError, PreconditionError, ResourceError
from .exterior import index_sets, wedge_vectors
from .filtration import (
    flag_support_permutation,
    hn_filtration,
    minkowski_flag,
    minkowski_flag_bound,
)
from .lattice import (
    DEFAULT_TOL,
    EUCLIDEAN,
    Lattice,
    NormSpec,
    Sublattice,
    minimal_covolume_sublattice,
    sublattices_below,
    successive_minima,
)
from .oracles import brute_force_minima, oracle_is_stable
from .reduction import DEFAULT_CAP, lll_reduce_basis

MAX_STEP = 3.0  # cap on a single move in any coordinate

SEARCH_NOTE = (
    "iteration/time budgets and the restart schedule are engineering choices; "
    "no convergence rate or witness-size bound is available for the existence result"
)


# --------------------------------------------------------------------------- coordinates


@dataclass(frozen=True)
class DiagCoord:
    """A point of the trace-zero hyperplane; the sum is projected out on construction."""

    x: tuple

    def __post_init__(self):
        a = np.asarray(self.x, dtype=float).ravel()
        if a.size == 0 or not np.all(np.isfinite(a)):
            raise PreconditionError("diagonal coordinate must be a nonempty finite vector")
        a = a - a.mean()
        object.__setattr__(self, "x", tuple(float(v) for v in a))

    @classmethod
    def zeros(cls, n):
        return cls((0.0,) * n)

    @classmethod
    def from_box(cls, y):
        """x = (y, -Σy)."""
        y = [float(v) for v in y]
        return cls(tuple(y) + (-sum(y),))

    @property
    def n(self):
        return len(self.x)

    @property
    def array(self):
        return np.array(self.x)

    def to_box(self):
        return np.array(self.x[:-1])


def _coord(x, n=None):
    if isinstance(x, DiagCoord):
        c = x
    else:
        c = DiagCoord(tuple(np.asarray(x, dtype=float).ravel()))
    if n is not None and c.n != n:
        raise PreconditionError(f"diagonal coordinate has length {c.n}, lattice dimension is {n}")
    return c


def apply_diag(x, L: Lattice) -> Lattice:
    """diag(exp x)·L: row i of the basis is scaled by exp(x_i)."""
    c = _coord(x, L.n)
    if not any(c.x):
        return L
    return Lattice(np.exp(c.array)[:, None] * L.basis)


def _box_matrix(n):
    # x = E y
    return np.vstack([np.eye(n - 1), -np.ones((1, n - 1))])


def _trace_zero(v):
    v = np.asarray(v, dtype=float)
    return v - v.mean()


# --------------------------------------------------------------------------- margins


def stability_margin(x, L: Lattice, tol=DEFAULT_TOL, cap=DEFAULT_CAP) -> float:
    """min over proper ranks k of the minimal log-covolume of exp(x)L.

    Nonnegative (up to ``tol``) exactly when exp(x)L is stable.
    """
    if not L.is_unimodular(max(tol, 1e-9)):
        raise PreconditionError("stability margin needs a unimodular lattice")
    Lx = apply_diag(x, L)
    if L.n == 1:
        return 0.0
    return min(minimal_covolume_sublattice(Lx, k, tol, cap).log_covolume for k in range(1, L.n))


def wr_margin(x, L: Lattice, norm: NormSpec = EUCLIDEAN, cap=DEFAULT_CAP) -> float:
    """-log(λ_n/λ_1) of exp(x)L; zero exactly when it is well rounded."""
    m = successive_minima(apply_diag(x, L), norm, cap)
    return -(math.log(m.values[-1]) - math.log(m.values[0]))


# --------------------------------------------------------------------------- per-subgroup functions


class ScaledCovolume:
    """x ↦ log covolume(exp(x)Γ) for one subgroup Γ, from its Plücker coordinates.

    covolume(exp(x)Γ)² = Σ_J φ_J² exp(2ψ_J(x)) with ψ_J(x) = Σ_{j∈J} x_j, so the
    function is a log-sum-exp of linear forms and hence convex.
    """

    def __init__(self, g: Sublattice):
        self.sublattice = g
        n, k = g.n, g.rank
        pl = wedge_vectors(g.vectors().tolist(), n)
        sets = [J for J in index_sets(n, k) if pl[J] != 0]
        self.masks = np.zeros((len(sets), n))
        for r, J in enumerate(sets):
            self.masks[r, list(J)] = 1.0
        self.logphi = np.array([math.log(abs(float(pl[J]))) for J in sets])

    def value(self, x):
        return 0.5 * float(logsumexp(2 * (self.logphi + self.masks @ np.asarray(x, dtype=float))))

    def gradient(self, x):
        s = 2 * (self.logphi + self.masks @ np.asarray(x, dtype=float))
        p = np.exp(s - logsumexp(s))
        return self.masks.T @ p

    def log_ms(self, x):
        """log of the MS-norm max_J |φ_J| exp(ψ_J(x))."""
        return float(np.max(self.logphi + self.masks @ np.asarray(x, dtype=float)))


# --------------------------------------------------------------------------- results


@dataclass
class SearchOptions:
    tol: float = DEFAULT_TOL
    max_iter: int = 10_000
    max_time: float = 60.0
    seed: int = 0
    min_gain: float = 1e-12
    min_step: float = 2.0**-14
    polish: int = 20
    bnb_after: int = 3
    bnb_half_width: float = 2.0
    bnb_max_boxes: int = 4000
    certify: bool = False  # attach a brute-force oracle check of the witness
    cap: int = DEFAULT_CAP


@dataclass
class SearchResult:
    target: str  # "stable" or "well-rounded"
    witness: DiagCoord
    margin: float
    success: bool
    certificate: list
    iterations: int = 0
    evaluations: int = 0
    restarts: int = 0
    wall_time: float = 0.0
    trace: list = field(default_factory=list)
    options: dict = field(default_factory=dict)
    norm: Optional[str] = None
    oracle: Optional[dict] = None
    progress: list = field(default_factory=list)  # (restart index, margin) after each accepted step

    def to_dict(self, timings=True):
        d = {
            "target": self.target,
            "witness": [float(format(v, ".17g")) for v in self.witness.x],
            "margin": self.margin,
            "success": self.success,
            "norm": self.norm,
            "certificate": self.certificate,
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "restarts": self.restarts,
            "trace": self.trace,
            "budgets": {"max_iter": self.options.get("max_iter"), "max_time": self.options.get("max_time")},
            "options": self.options,
            "note": SEARCH_NOTE,
            "oracle": self.oracle,
            "progress": [[int(r), float(m)] for r, m in self.progress],
        }
        if timings:
            d["wall_time"] = self.wall_time
        return d

    def to_json(self, timings=True, **kw):
        return json.dumps(self.to_dict(timings), **kw)

    @classmethod
    def from_dict(cls, d):
        return cls(
            target=d["target"],
            witness=DiagCoord(tuple(d["witness"])),
            margin=d["margin"],
            success=d["success"],
            certificate=d.get("certificate", []),
            iterations=d.get("iterations", 0),
            evaluations=d.get("evaluations", 0),
            restarts=d.get("restarts", 0),
            wall_time=d.get("wall_time", 0.0),
            trace=d.get("trace", []),
            options=d.get("options", {}),
            norm=d.get("norm"),
            oracle=d.get("oracle"),
            progress=[tuple(p) for p in d.get("progress", [])],
        )


def verify_result(result: SearchResult, L: Lattice, norm: NormSpec = EUCLIDEAN, tol=None) -> bool:
    """Re-evaluate the target predicate at the witness, and the listed certificate values."""
    tol = result.options.get("tol", DEFAULT_TOL) if tol is None else tol
    x = result.witness
    Lx = apply_diag(x, L)
    if result.target == "stable":
        if stability_margin(x, L, tol) < -tol:
            return False
        for entry in result.certificate:
            g = Sublattice(Lx, tuple(map(tuple, entry["subgroup"])))
            c = float(np.sqrt(max(np.linalg.det(g.gram()), 0.0)))
            if c < 1 - tol or abs(math.log(c) - entry["log_covolume"]) > 1e-6:
                return False
        return True
    m = successive_minima(Lx, norm)
    if math.log(m.values[-1]) - math.log(m.values[0]) > tol:
        return False
    for entry in result.certificate:
        v = Lx.vector(entry["coefficients"])
        if abs(norm(v) - entry["norm"]) > 1e-6 * max(1.0, entry["norm"]):
            return False
    return True


def oracle_check(result: SearchResult, L: Lattice, norm: NormSpec = EUCLIDEAN, tol=None) -> dict:
    """Re-check the witness with the slow brute-force routines (no shared fast path)."""
    tol = result.options.get("tol", DEFAULT_TOL) if tol is None else tol
    Lx = apply_diag(result.witness, L)
    if result.target == "stable":
        ok, covs = oracle_is_stable(Lx, tol)
        return {"method": "k-subset saturation over a coefficient box", "passed": ok, "min_covolumes": covs}
    vals, wits = brute_force_minima(Lx, norm)
    ok = math.log(vals[-1]) - math.log(vals[0]) <= tol
    return {
        "method": "greedy minima over a coefficient box",
        "passed": ok,
        "minima": list(vals),
        "witnesses": [list(w) for w in wits],
    }


# --------------------------------------------------------------------------- search plumbing


class _Budget:
    def __init__(self, opts):
        self.opts = opts
        self.start = time.perf_counter()
        self.iterations = 0
        self.evaluations = 0

    def elapsed(self):
        return time.perf_counter() - self.start

    def exhausted(self):
        return self.iterations >= self.opts.max_iter or self.elapsed() >= self.opts.max_time


def _balanced_guess(L):
    """Trace-zero x making the rows of an LLL-reduced basis equally long."""
    _, B = lll_reduce_basis(L.basis)
    rows = np.linalg.norm(B, axis=1)
    return _trace_zero(-np.log(rows))


def _random_direction(rng, n):
    v = _trace_zero(rng.standard_normal(n))
    nv = np.linalg.norm(v)
    return v / nv if nv > 0 else v


def _options_dict(opts):
    return asdict(opts)


class _Objective:
    """Caches evaluations of a merit function to be maximised."""

    def __init__(self, fn, budget):
        self.fn = fn
        self.budget = budget
        self.cache = {}

    def __call__(self, x):
        key = tuple(np.round(np.asarray(x, dtype=float), 15))
        if key not in self.cache:
            self.budget.evaluations += 1
            try:
                self.cache[key] = self.fn(np.asarray(x, dtype=float))
            except (HNOrbitError, RuntimeError, np.linalg.LinAlgError, FloatingPointError):
                self.cache[key] = -math.inf
        return self.cache[key]


def _line_search(obj, x, fx, d, opts):
    """Backtracking from step 1 by halves; first step gaining >= min_gain wins."""
    if not np.any(d):
        return None
    s = 1.0
    while s >= opts.min_step:
        y = _trace_zero(x + s * d)
        fy = obj(y)
        if fy >= fx + opts.min_gain:
            return y, fy
        s /= 2
    return None


# --------------------------------------------------------------------------- stable search


def _stable_value(L, opts):
    def f(x):
        return stability_margin(x, L, opts.tol, opts.cap)

    return f


def _flag_direction(L, x, opts, rng):
    """Sum of indicator vectors of σ(0..d-1) over destabilising HN members."""
    n = L.n
    for attempt in range(3):
        xx = x if attempt == 0 else _trace_zero(x + 1e-6 * _random_direction(rng, n))
        Lx = apply_diag(xx, L)
        try:
            hn = hn_filtration(Lx, opts.tol, opts.cap)
        except IntegrityError:
            continue
        members = [
            (g, c) for g, c in zip(hn.chain[1:-1], hn.covolumes[1:-1]) if c < 1 - opts.tol
        ]
        if not members:
            return None
        try:
            sigma = flag_support_permutation([g.vectors().tolist() for g in hn.chain[1:-1]], n)
        except (IntegrityError, PreconditionError):
            return None
        d = np.zeros(n)
        for g, _ in members:
            d[list(sigma[: g.rank])] += 1.0
        d = _trace_zero(d)
        nd = np.linalg.norm(d)
        return d / nd if nd > 0 else None
    return None


def _relevant_subgroups(L, x, margin, width, opts):
    """Subgroups Γ (of L) with log covolume(exp(x)Γ) <= margin + width, over all proper ranks."""
    Lx = apply_diag(x, L)
    out = []
    for k in range(1, L.n):
        for _, g in sublattices_below(Lx, k, math.exp(margin + width), cap=opts.cap):
            out.append(ScaledCovolume(Sublattice(L, g.gens)))
    return out


def _slp_direction(L, x, margin, opts, radius=1.0, width=0.4):
    """Maximise the linearised margin over the box |d_i| <= radius, Σd = 0."""
    n = L.n
    try:
        funcs = _relevant_subgroups(L, x, margin, width, opts)
    except ResourceError:
        return None
    if not funcs:
        return None
    # variables (d_1..d_n, t); maximise t
    A, b = [], []
    for f in funcs:
        g = f.gradient(x)
        A.append(np.append(-g, 1.0))
        b.append(f.value(x))
    res = linprog(
        c=np.append(np.zeros(n), -1.0),
        A_ub=np.array(A),
        b_ub=np.array(b),
        A_eq=np.append(np.ones(n), 0.0)[None, :],
        b_eq=[0.0],
        bounds=[(-radius, radius)] * n + [(None, None)],
        method="highs",
    )
    if res.status != 0:
        return None
    d = _trace_zero(res.x[:n])
    return d if np.linalg.norm(d) > 1e-14 else None


def _ascent_step(L, obj, x, fx, opts, rng, trace):
    d = _flag_direction(L, x, opts, rng)
    if d is not None:
        got = _line_search(obj, x, fx, d, opts)
        if got is not None:
            trace.append("flag")
            return got
    for radius in (1.0, 0.25):
        d = _slp_direction(L, x, fx, opts, radius=radius)
        if d is not None:
            got = _line_search(obj, x, fx, d, opts)
            if got is not None:
                trace.append("slp")
                return got
    return None


def _stable_certificate(L, x, opts):
    Lx = apply_diag(x, L)
    cert = []
    for k in range(1, L.n):
        m = minimal_covolume_sublattice(Lx, k, opts.tol, opts.cap)
        cert.append(
            {
                "rank": k,
                "subgroup": [list(g) for g in m.sublattice.gens],
                "covolume": m.covolume,
                "log_covolume": m.log_covolume,
                "wedge_radius": m.certificate.get("wedge_radius"),
                "candidates": m.certificate.get("candidates"),
            }
        )
    return cert


def _compress_trace(trace):
    out = []
    for key, grp in itertools.groupby(trace):
        c = len(list(grp))
        out.append(key if c == 1 else f"{key} x{c}")
    return out


def find_stable(L: Lattice, opts: Optional[SearchOptions] = None, x0=None) -> SearchResult:
    """Find x with exp(x)L stable.

    Raises BudgetExhausted (carrying the best point found) when the iteration
    or time budget runs out first.
    """
    opts = opts or SearchOptions()
    if not L.is_unimodular(max(opts.tol, 1e-9)):
        raise PreconditionError("find_stable needs a unimodular lattice")
    n = L.n
    budget = _Budget(opts)
    rng = np.random.default_rng(opts.seed)
    obj = _Objective(_stable_value(L, opts), budget)
    trace = []

    starts = [np.zeros(n)] if x0 is None else [_coord(x0, n).array]
    if x0 is None:
        starts.append(_balanced_guess(L))
    scored = [(obj(s), i, s) for i, s in enumerate(starts)]
    fx, _, x = max(scored, key=lambda t: (t[0], -t[1]))
    center = x.copy()
    best_x, best_f = x.copy(), fx
    restarts = 0
    progress = [(0, fx)]
    bnb_done = False
    polish_left = opts.polish

    def finish(success):
        bx = DiagCoord(tuple(best_x))
        cert = _stable_certificate(L, bx, opts) if success else []
        res = SearchResult(
            "stable",
            bx,
            best_f,
            success,
            cert,
            budget.iterations,
            budget.evaluations,
            restarts,
            budget.elapsed(),
            _compress_trace(trace),
            _options_dict(opts),
        )
        res.progress = progress
        if success and opts.certify:
            res.oracle = oracle_check(res, L)
        return res

    while True:
        if best_f >= -opts.tol and (polish_left <= 0 or best_f >= 0):
            return finish(True)
        if budget.exhausted():
            if best_f >= -opts.tol:
                return finish(True)
            res = finish(False)
            raise BudgetExhausted(f"no stable point found; best margin {best_f:.3e}", result=res)
        budget.iterations += 1
        if best_f >= -opts.tol:
            polish_left -= 1
        step = _ascent_step(L, obj, x, fx, opts, rng, trace)
        if step is not None:
            x, fx = step
            progress.append((restarts, fx))
            if fx > best_f:
                best_x, best_f = x.copy(), fx
            continue
        if best_f >= -opts.tol:
            return finish(True)
        # stagnation
        restarts += 1
        if restarts >= opts.bnb_after and not bnb_done:
            bnb_done = True
            trace.append("branch-and-bound")
            found = _bnb_stable(L, best_x, opts.bnb_half_width, opts, budget, obj)
            if found is not None:
                x, fx = found
                progress.append((restarts, fx))
                if fx > best_f:
                    best_x, best_f = x.copy(), fx
                continue
        trace.append("restart")
        radius = math.sqrt(restarts)
        x = _trace_zero(center + radius * _random_direction(rng, n))
        fx = obj(x)
        progress.append((restarts, fx))
        if fx > best_f:
            best_x, best_f = x.copy(), fx


# --------------------------------------------------------------------------- active sublattices / B&B


def _box_arrays(box, n):
    box = np.asarray(box, dtype=float).reshape(-1, 2) if np.size(box) else np.zeros((0, 2))
    if box.shape != (n - 1, 2):
        raise PreconditionError(f"box must have {n - 1} intervals")
    if np.any(box[:, 0] > box[:, 1]) or not np.all(np.isfinite(box)):
        raise PreconditionError("box must be bounded with lo <= hi")
    return box[:, 0], box[:, 1]


def _corners(lo, hi):
    return np.array(list(itertools.product(*zip(lo, hi)))).reshape(-1, len(lo))


def _min_linear_on_box(A, lo, hi):
    # min over the box of each row of A·y
    return np.minimum(A * lo, A * hi).sum(axis=1)


def _box_candidates(L, lo, hi, bound_log, cap):
    """Subgroups whose covolume at the box centre is within the corner slack of exp(bound_log)."""
    n = L.n
    E = _box_matrix(n)
    yc = (lo + hi) / 2
    w = (hi - lo) / 2
    xc = E @ yc
    Lx = apply_diag(xc, L)
    out = []
    for k in range(1, n):
        A = np.array([[1.0 if j in J else 0.0 for j in range(n)] for J in index_sets(n, k)]) @ E
        delta = float(np.max(np.abs(A) @ w)) if w.size else 0.0
        for _, g in sublattices_below(Lx, k, math.exp(bound_log + delta) * (1 + 1e-12), cap=cap):
            out.append(ScaledCovolume(Sublattice(L, g.gens)))
    return out


def _ms_lower_bound(f, lo, hi, E):
    """Lower bound for min over the box of log‖exp(x)·det Γ‖_MS (and of log covolume)."""
    return float(np.max(f.logphi + _min_linear_on_box(f.masks @ E, lo, hi)))


def _ms_min_lp(f, lo, hi, E):
    """Exact min over the box of the log MS-norm: an LP in (y, t)."""
    m = len(f.logphi)
    d = E.shape[1]
    A = np.hstack([f.masks @ E, -np.ones((m, 1))])
    res = linprog(
        c=np.append(np.zeros(d), 1.0),
        A_ub=A,
        b_ub=-f.logphi,
        bounds=list(zip(lo, hi)) + [(None, None)],
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"LP failed: {res.message}")
    return float(res.fun)


def _cov_min(f, lo, hi, E):
    """min over the box of the (convex) log covolume."""
    if np.all(hi - lo == 0):
        return f.value(E @ lo)
    res = minimize(
        lambda y: f.value(E @ y),
        (lo + hi) / 2,
        jac=lambda y: E.T @ f.gradient(E @ y),
        bounds=list(zip(lo, hi)),
        method="L-BFGS-B",
        options={"ftol": 1e-15, "gtol": 1e-12},
    )
    return float(min(res.fun, f.value(E @ np.clip(res.x, lo, hi))))


def active_sublattices(L: Lattice, box, c_F=None, measure="ms", cap=DEFAULT_CAP):
    """Saturated proper subgroups Γ with min over the box of ‖exp(x)·det Γ‖ <= c_F.

    ``box`` is a list of (lo, hi) intervals for y ∈ R^{n-1}, x = (y, -Σy).
    ``measure`` is "ms" (max Plücker coordinate) or "covolume".  ``c_F``
    defaults to the Minkowski flag bound for the Euclidean norm.  Completeness:
    on the box ψ_J(x) differs from its centre value by at most a corner slack
    δ, so every candidate has covolume <= √m·c_F·e^δ at the centre, and those
    are enumerated exhaustively.  Returns ``[(Sublattice, min value)]``.
    """
    n = L.n
    if n < 2:
        return []
    lo, hi = _box_arrays(box, n)
    if c_F is None:
        c_F = minkowski_flag_bound(n, EUCLIDEAN, L.det)
    if c_F <= 0:
        return []
    if measure not in ("ms", "covolume"):
        raise PreconditionError(f"unknown measure {measure!r}")
    E = _box_matrix(n)
    m_max = max(math.comb(n, k) for k in range(1, n))
    slack = 0.5 * math.log(m_max) if measure == "ms" else 0.0
    out = []
    for f in _box_candidates(L, lo, hi, math.log(c_F) + slack, cap):
        if measure == "ms":
            v = _ms_min_lp(f, lo, hi, E)
        else:
            v = _cov_min(f, lo, hi, E)
        if v <= math.log(c_F) + 1e-12:
            out.append((f.sublattice, math.exp(v)))
    out.sort(key=lambda t: (t[0].rank, t[1], t[0].key))
    return out


def _bnb_stable(L, center, half_width, opts, budget, obj, max_slack=0.75):
    """Best-first branch and bound for a point with margin >= -tol near ``center``.

    A box is discarded when some active subgroup has log covolume < -tol on all
    of it (checked at the corners, valid by convexity).  Returns ``(x, margin)``
    for the best centre found, or None if the box was exhausted without finding
    a point at least as good as the current one.
    """
    n = L.n
    E = _box_matrix(n)
    yc = np.asarray(center, dtype=float)[:-1]
    root = (yc - half_width, yc + half_width)
    counter = itertools.count()
    heap = [(-math.inf, next(counter), root[0], root[1], None)]
    best = None
    boxes = 0
    while heap and boxes < opts.bnb_max_boxes and not budget.exhausted():
        _, _, lo, hi, active = heapq.heappop(heap)
        boxes += 1
        w = (hi - lo) / 2
        slack = float(np.max(np.abs(E) @ w)) * (n - 1)
        if slack > max_slack:
            ub = math.inf
        else:
            if active is None:
                try:
                    active = _box_candidates(L, lo, hi, 0.5 * math.log(math.comb(n, n // 2)), opts.cap)
                except ResourceError:
                    active = None
            if active is not None:
                active = [f for f in active if _ms_lower_bound(f, lo, hi, E) <= 1e-12]
                corners = _corners(lo, hi) @ E.T
                ub = min(
                    (max(f.value(c) for c in corners) for f in active),
                    default=math.inf,
                )
                if ub < -opts.tol:
                    continue
            else:
                ub = math.inf
        xc = E @ ((lo + hi) / 2)
        fc = obj(xc)
        if best is None or fc > best[1]:
            best = (xc, fc)
        if fc >= -opts.tol:
            return best
        j = int(np.argmax(hi - lo))
        mid = (lo[j] + hi[j]) / 2
        for a, b in ((lo[j], mid), (mid, hi[j])):
            clo, chi = lo.copy(), hi.copy()
            clo[j], chi[j] = a, b
            heapq.heappush(heap, (-ub, next(counter), clo, chi, active))
    return best


def certified_stable_search(L: Lattice, box, opts: Optional[SearchOptions] = None):
    """Branch and bound over ``box`` (intervals in y).

    Returns ``(x or None, report)``.  ``x`` is None only when every box was
    discarded, which certifies that no point of the box has margin >= -tol.
    """
    opts = opts or SearchOptions()
    if not L.is_unimodular(max(opts.tol, 1e-9)):
        raise PreconditionError("certified search needs a unimodular lattice")
    n = L.n
    lo, hi = _box_arrays(box, n)
    E = _box_matrix(n)
    budget = _Budget(opts)
    obj = _Objective(_stable_value(L, opts), budget)
    counter = itertools.count()
    heap = [(-math.inf, next(counter), lo, hi, None)]
    discarded = 0
    boxes = 0
    while heap:
        if boxes >= opts.bnb_max_boxes or budget.exhausted():
            return None, {"complete": False, "boxes": boxes, "discarded": discarded}
        _, _, blo, bhi, active = heapq.heappop(heap)
        boxes += 1
        w = (bhi - blo) / 2
        slack = float(np.max(np.abs(E) @ w)) * (n - 1)
        ub = math.inf
        if slack <= 0.75:
            if active is None:
                active = _box_candidates(L, blo, bhi, 0.5 * math.log(math.comb(n, n // 2)), opts.cap)
            active = [f for f in active if _ms_lower_bound(f, blo, bhi, E) <= 1e-12]
            corners = _corners(blo, bhi) @ E.T
            ub = min((max(f.value(c) for c in corners) for f in active), default=math.inf)
            if ub < -opts.tol:
                discarded += 1
                continue
        xc = E @ ((blo + bhi) / 2)
        if obj(xc) >= -opts.tol:
            return DiagCoord(tuple(xc)), {"complete": True, "boxes": boxes, "discarded": discarded}
        if np.all(bhi - blo < 1e-12):
            continue
        j = int(np.argmax(bhi - blo))
        mid = (blo[j] + bhi[j]) / 2
        for a, b in ((blo[j], mid), (mid, bhi[j])):
            clo, chi = blo.copy(), bhi.copy()
            clo[j], chi[j] = a, b
            heapq.heappush(heap, (-ub, next(counter), clo, chi, active))
    return None, {"complete": True, "boxes": boxes, "discarded": discarded}


# --------------------------------------------------------------------------- well-rounded search


def _log_norm_and_grad(norm, v, x):
    """log N(exp(x)v) and its gradient in x (analytic where possible)."""
    e = np.exp(x)
    w = e * v
    val = norm(w)
    if val <= 0:
        raise RuntimeError("zero vector")
    if norm.kind == "euclidean":
        return math.log(val), (w * w) / (val * val)
    if norm.kind == "l_infinity":
        g = np.zeros_like(w)
        g[int(np.argmax(np.abs(w)))] = 1.0
        return math.log(val), g
    if norm.kind == "l_1":
        return math.log(val), np.abs(w) / val
    h = 1e-7
    g = np.empty_like(x)
    for j in range(len(x)):
        xp = x.copy()
        xp[j] += h
        g[j] = (math.log(norm(np.exp(xp) * v)) - math.log(val)) / h
    return math.log(val), g


def _equalize(vectors, x, norm, iters=60):
    """Trace-zero x' near x where all N(exp(x')v_i) agree (damped Gauss-Newton)."""
    n = len(x)
    V = np.asarray(vectors, dtype=float)
    if norm.kind == "euclidean":
        # N² is linear in y_j = exp(2x_j): solve (v_ij²) y = 1
        try:
            y = np.linalg.solve(V * V, np.ones(len(V)))
            if np.all(y > 0):
                return _trace_zero(0.5 * np.log(y))
        except np.linalg.LinAlgError:
            pass
    P = np.linalg.qr(np.eye(n)[:, : n - 1] - 1.0 / n)[0]

    def resid(xx):
        hs, gs = zip(*(_log_norm_and_grad(norm, v, xx) for v in V))
        h = np.array(hs)
        J = np.array(gs)
        return h - h.mean(), (J - J.mean(axis=0)) @ P

    xx = np.asarray(x, dtype=float).copy()
    r, J = resid(xx)
    for _ in range(iters):
        if np.max(np.abs(r)) < 1e-14:
            break
        dz = np.linalg.lstsq(J, -r, rcond=None)[0]
        s = 1.0
        improved = False
        while s > 1e-6:
            xn = xx + s * (P @ dz)
            rn, Jn = resid(xn)
            if np.linalg.norm(rn) < np.linalg.norm(r):
                xx, r, J = xn, rn, Jn
                improved = True
                break
            s /= 2
        if not improved:
            break
    return _trace_zero(xx)


def _wr_value(L, norm, opts):
    def f(x):
        return wr_margin(x, L, norm, opts.cap)

    return f


def _wr_step(L, norm, obj, x, fx, opts, trace):
    Lx = apply_diag(x, L)
    try:
        mins = successive_minima(Lx, norm, opts.cap)
    except (ResourceError, RuntimeError):
        return None
    V = np.array([L.vector(c) for c in mins.witnesses])
    with np.errstate(all="ignore"):
        target = _equalize(V, x, norm)
    d = target - x
    if np.all(np.isfinite(d)):
        big = np.max(np.abs(d))
        if big > MAX_STEP:
            d *= MAX_STEP / big
        got = _line_search(obj, x, fx, d, opts)
    else:
        got = None
    if got is not None:
        trace.append("equalize")
        return got
    try:
        F = minkowski_flag(Lx, norm, opts.tol, opts.cap)
        if not F.is_trivial:
            sigma = flag_support_permutation(F.members, L.n)
            d = np.zeros(L.n)
            for m in F.members:
                d[list(sigma[: m.k])] += 1.0
            d = _trace_zero(d)
            if np.linalg.norm(d) > 0:
                got = _line_search(obj, x, fx, d / np.linalg.norm(d), opts)
                if got is not None:
                    trace.append("flag")
                    return got
    except (IntegrityError, PreconditionError, ResourceError):
        pass
    return None


def find_well_rounded(
    L: Lattice, norm: NormSpec = EUCLIDEAN, opts: Optional[SearchOptions] = None, x0=None
) -> SearchResult:
    """Find x with exp(x)L well rounded for ``norm``.

    Raises BudgetExhausted (carrying the best point found) when the budget runs out.
    """
    opts = opts or SearchOptions()
    n = L.n
    budget = _Budget(opts)
    rng = np.random.default_rng(opts.seed)
    obj = _Objective(_wr_value(L, norm, opts), budget)
    trace = []
    starts = [np.zeros(n)] if x0 is None else [_coord(x0, n).array]
    if x0 is None:
        starts.append(_balanced_guess(L))
    scored = [(obj(s), i, s) for i, s in enumerate(starts)]
    fx, _, x = max(scored, key=lambda t: (t[0], -t[1]))
    center = x.copy()
    best_x, best_f = x.copy(), fx
    restarts = 0
    progress = [(0, fx)]

    def finish(success):
        bx = DiagCoord(tuple(best_x))
        cert = []
        if success:
            m = successive_minima(apply_diag(bx, L), norm, opts.cap)
            cert = [
                {"index": i + 1, "coefficients": list(c), "norm": v}
                for i, (c, v) in enumerate(zip(m.witnesses, m.values))
            ]
        res = SearchResult(
            "well-rounded",
            bx,
            best_f,
            success,
            cert,
            budget.iterations,
            budget.evaluations,
            restarts,
            budget.elapsed(),
            _compress_trace(trace),
            _options_dict(opts),
            norm.kind,
        )
        res.progress = progress
        if success and opts.certify:
            res.oracle = oracle_check(res, L, norm)
        return res

    while True:
        if best_f >= -opts.tol:
            return finish(True)
        if budget.exhausted():
            raise BudgetExhausted(
                f"no well-rounded point found; best margin {best_f:.3e}", result=finish(False)
            )
        budget.iterations += 1
        step = _wr_step(L, norm, obj, x, fx, opts, trace)
        if step is not None:
            x, fx = step
            progress.append((restarts, fx))
            if fx > best_f:
                best_x, best_f = x.copy(), fx
            continue
        restarts += 1
        trace.append("restart")
        x = _trace_zero(center + math.sqrt(restarts) * _random_direction(rng, n))
        fx = obj(x)
        progress.append((restarts, fx))
        if fx > best_f:
            best_x, best_f = x.copy(), fx


__all__ = [
    "DiagCoord",
    "SearchOptions",
    "SearchResult",
    "ScaledCovolume",
    "active_sublattices",
    "apply_diag",
    "certified_stable_search",
    "find_stable",
    "find_well_rounded",
    "oracle_check",
    "stability_margin",
    "verify_result",
    "wr_margin",
]
