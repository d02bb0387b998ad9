"""Slow reference computations used to cross-check the fast paths.

Nothing here touches the Fincke-Pohst enumerator or the exterior-power
search.  Points are enumerated over an explicit coefficient box whose size
comes from the dual basis, and minimal-covolume subgroups are found by
saturating k-subsets of short vectors, with the saturation index read off as
the gcd of the k×k minors.
"""
import math
from fractions import Fraction

import numpy as np

from .errors import ResourceError
from .intlinalg import content, det_exact, plucker_int
from .lattice import EUCLIDEAN, ball_volume
from .reduction import lll_reduce_basis

BOX_CAP = 5 * 10**6


def box_vectors(L, R, cap=BOX_CAP):
    """All nonzero lattice vectors with Euclidean norm <= R, one per ±pair.

    Returns ``(coeffs, vectors, norms)`` arrays sorted by norm.  The basis is
    first changed by an integer matrix of determinant ±1, which is checked
    exactly; the box bound |y_i| <= R·|row_i(B^-1)| is then complete.
    """
    U, _ = lll_reduce_basis(L.basis)
    if abs(det_exact([[int(v) for v in row] for row in U])) != 1:
        raise RuntimeError("basis change is not unimodular")
    B = L.basis @ U.astype(float)
    dual = np.linalg.inv(B)
    half = [int(math.floor(R * np.linalg.norm(dual[i]) + 1e-9)) for i in range(L.n)]
    total = math.prod(2 * h + 1 for h in half)
    if total > cap:
        raise ResourceError(f"coefficient box of {total} points exceeds cap {cap}", cap=cap)
    axes = [np.arange(-h, h + 1) for h in half]
    Y = np.array(np.meshgrid(*axes, indexing="ij")).reshape(L.n, -1).T
    V = Y @ B.T
    norms = np.linalg.norm(V, axis=1)
    keep = (norms <= R * (1 + 1e-12)) & np.any(Y != 0, axis=1)
    Y, V, norms = Y[keep], V[keep], norms[keep]
    # one of each ±pair: first nonzero coefficient (in the original basis) positive
    C = Y @ U.T
    first = C[np.arange(len(C)), np.argmax(C != 0, axis=1)]
    pos = first > 0
    C, V, norms = C[pos], V[pos], norms[pos]
    order = np.lexsort((*C.T[::-1], norms))
    return C[order], V[order], norms[order]


def brute_force_minima(L, norm=EUCLIDEAN):
    """Successive minima by greedy selection over an explicit coefficient box."""
    n = L.n
    T = max(norm(L.basis[:, i]) for i in range(n))
    U, _ = lll_reduce_basis(L.basis)
    T = min(T, max(norm(L.basis @ U[:, i].astype(float)) for i in range(n)))
    C, V, _ = box_vectors(L, T / norm.c_low)
    vals = np.array([norm(v) for v in V])
    order = np.argsort(vals, kind="stable")
    chosen, out = [], []
    for i in order:
        trial = chosen + [C[i]]
        if np.linalg.matrix_rank(np.array(trial, dtype=float)) == len(trial):
            chosen.append(C[i])
            out.append(float(vals[i]))
            if len(out) == n:
                break
    return tuple(out), [tuple(int(t) for t in c) for c in chosen]


def _saturated_covolume(L, rows):
    """Covolume of the saturation of the subgroup spanned by integer ``rows``."""
    rows = [tuple(int(v) for v in r) for r in rows]
    idx = content(plucker_int([list(r) for r in rows]))
    if idx == 0:
        return None, None
    V = L.basis @ np.array(rows, dtype=float).T
    d = float(np.linalg.det(V.T @ V))
    exact = None
    if L.gram_exact is not None:
        G = L.gram_exact
        n = L.n
        M = [
            [sum(a[i] * G[i][j] * b[j] for i in range(n) for j in range(n)) for b in rows]
            for a in rows
        ]
        exact = Fraction(det_exact(M)) / (idx * idx)
    return math.sqrt(max(d, 0.0)) / idx, exact


def oracle_min_covolume(L, k, cap=BOX_CAP):
    """Minimal covolume of a rank-k subgroup by brute force.

    Returns ``(covolume, generator rows, covolume_sq_exact or None, radius)``.
    The generators are k short vectors whose saturation attains the minimum.
    """
    n = L.n
    if k == n:
        ex = None if L.det_exact is None else L.det_exact**2
        return abs(L.det), [tuple(int(i == j) for j in range(n)) for i in range(n)], ex, 0.0
    minima, wits = brute_force_minima(L)
    best, best_ex = _saturated_covolume(L, wits[:k])
    best_rows = wits[:k]
    mink = 2.0**k / ball_volume(k)
    # the i-th minimum of a subgroup is at least the i-th minimum of L
    R = mink * best / math.prod(minima[: k - 1])
    C, V, norms = box_vectors(L, R, cap)
    m = len(C)
    Cl = [tuple(int(t) for t in c) for c in C]

    def dfs(start, chosen, prod):
        nonlocal best, best_ex, best_rows
        depth = len(chosen)
        for i in range(start, m):
            r = norms[i]
            if prod * r ** (k - depth) > mink * best * (1 + 1e-9):
                break
            trial = chosen + [i]
            if np.linalg.matrix_rank(V[trial]) < len(trial):
                continue
            if depth + 1 == k:
                cov, ex = _saturated_covolume(L, [Cl[j] for j in trial])
                if cov is None:
                    continue
                if ex is not None and best_ex is not None:
                    better = ex < best_ex
                else:
                    better = cov < best * (1 - 1e-12)
                if better:
                    best, best_ex, best_rows = cov, ex, [Cl[j] for j in trial]
            else:
                dfs(i + 1, trial, prod * r)

    dfs(0, [], 1.0)
    return best, best_rows, best_ex, R


def oracle_is_stable(L, tol=1e-9):
    """Stability by brute force: every proper rank has minimal covolume >= 1 - tol.

    Returns ``(stable, [min covolume per rank 1..n-1])``.
    """
    covs = [oracle_min_covolume(L, k)[0] for k in range(1, L.n)]
    return all(c >= 1 - tol for c in covs), covs
