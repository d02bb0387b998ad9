"""LLL reduction and Fincke-Pohst enumeration, both driven by a Gram matrix.

Working from the Gram matrix lets the same code enumerate a lattice and its
exterior powers.  All integer transforms are tracked so results can be
reported as coefficient vectors in the caller's basis.
"""
import math

import numpy as np

from .errors import ResourceError

DEFAULT_CAP = 10**7


def _basis_from_gram(G):
    # columns of the upper Cholesky factor have Gram matrix G
    return np.linalg.cholesky(G).T


def lll_reduce_gram(G, delta=0.99):
    """LLL-reduce the lattice with Gram matrix ``G``.

    Returns ``(U, Gred)`` with ``U`` an integer unimodular matrix (columns are
    the reduced basis in old coordinates) and ``Gred = U.T @ G @ U``.
    """
    G = np.asarray(G, dtype=float)
    if G.shape[0] <= 1:
        return np.eye(G.shape[0], dtype=np.int64), G.copy()
    U = _lll(_basis_from_gram(G), delta)
    Gred = U.T.astype(float) @ G @ U.astype(float)
    return U, (Gred + Gred.T) / 2


def lll_reduce_basis(B, delta=0.99):
    """LLL-reduce the lattice spanned by the columns of ``B``.

    Working on the basis avoids squaring its condition number.  Returns
    ``(U, B @ U)``.
    """
    B = np.array(B, dtype=float)
    U = _lll(B.copy(), delta)
    # a second pass cleans up rounding left by the first on skewed input
    Bred = B @ U.astype(float)
    U2 = _lll(Bred.copy(), delta)
    U = U @ U2
    return U, B @ U.astype(float)


def _lll(B, delta):
    m = B.shape[1]
    U = np.eye(m, dtype=np.int64)
    if m <= 1:
        return U
    R = np.linalg.qr(B, mode="r")
    k = 1
    swaps = 0
    while k < m:
        for j in range(k - 1, -1, -1):
            q = round(R[j, k] / R[j, j])
            if q:
                B[:, k] -= q * B[:, j]
                R[:, k] -= q * R[:, j]
                U[:, k] -= q * U[:, j]
        if delta * R[k - 1, k - 1] ** 2 > R[k - 1, k] ** 2 + R[k, k] ** 2:
            B[:, [k - 1, k]] = B[:, [k, k - 1]]
            U[:, [k - 1, k]] = U[:, [k, k - 1]]
            R = np.linalg.qr(B, mode="r")
            k = max(k - 1, 1)
            swaps += 1
            if swaps > 100000:
                raise RuntimeError("LLL did not terminate; the Gram matrix is too ill-conditioned")
        else:
            k += 1
    return U


def fincke_pohst(G, radius_sq, cap=DEFAULT_CAP, half=True):
    """All nonzero integer vectors ``y`` with ``y^T G y <= radius_sq``.

    With ``half=True`` only one of each ``±y`` pair is returned (the one whose
    last nonzero coordinate is positive).  Raises ResourceError past ``cap``.
    """
    G = np.asarray(G, dtype=float)
    m = G.shape[0]
    R = np.linalg.cholesky(G).T
    d = [R[i, i] ** 2 for i in range(m)]
    mu = [[R[i, j] / R[i, i] for j in range(m)] for i in range(m)]
    bound = radius_sq * (1 + 1e-10) + 1e-300
    x = [0] * m
    out = []

    def rec(i, remaining, nonzero_above):
        c = -sum(mu[i][j] * x[j] for j in range(i + 1, m))
        w = math.sqrt(max(remaining, 0.0) / d[i])
        lo = math.ceil(c - w - 1e-12)
        hi = math.floor(c + w + 1e-12)
        if half and not nonzero_above:
            lo = max(lo, 0)
        for xi in range(lo, hi + 1):
            r = remaining - d[i] * (xi - c) ** 2
            if r < -1e-12 * bound:
                continue
            x[i] = xi
            nz = nonzero_above or xi != 0
            if i == 0:
                if nz:
                    out.append(tuple(x))
                    if len(out) > cap:
                        raise ResourceError(
                            f"enumeration exceeded the cap of {cap} vectors", cap=cap
                        )
            else:
                rec(i - 1, r, nz)
        x[i] = 0

    rec(m - 1, bound, False)
    return out


def short_vectors_gram(G, radius, cap=DEFAULT_CAP, reduce=True, transform=None):
    """Coefficient vectors of lattice vectors of norm <= radius.

    One representative per ±pair, sorted by (norm², coefficients).  Returns a
    list of ``(norm_sq, coeffs)`` with integer tuples.  If ``transform`` is
    given, ``G`` is the Gram matrix of the basis ``B @ transform`` and the
    coefficients are reported with respect to ``B``.
    """
    G = np.asarray(G, dtype=float)
    if reduce:
        U, Gr = lll_reduce_gram(G)
    else:
        U, Gr = np.eye(G.shape[0], dtype=np.int64), G
    if transform is not None:
        U = np.asarray(transform).astype(object).dot(U.astype(object))
    else:
        U = U.astype(object)
    found = fincke_pohst(Gr, radius * radius, cap=cap)
    out = []
    for y in found:
        c = tuple(int(v) for v in U.dot(np.asarray(y, dtype=object)))
        for v in c:
            if v:
                if v < 0:
                    c = tuple(-t for t in c)
                break
        a = np.asarray(y, dtype=float)
        out.append((float(a @ Gr @ a), c))
    out.sort()
    return out
