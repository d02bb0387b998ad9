import math
from fractions import Fraction

import numpy as np
import pytest

from hnorbit.errors import PreconditionError, ResourceError
from hnorbit.lattice import (
    Lattice,
    NormSpec,
    Sublattice,
    covolume,
    enumerate_short_vectors,
    is_well_rounded,
    minimal_covolume_sublattice,
    saturate,
    successive_minima,
    sublattices_below,
)
from hnorbit.generate import random_lattice
from hnorbit.oracles import box_vectors, brute_force_minima, oracle_min_covolume

from conftest import hexagonal, random_rational_lattice, random_unimodular_int

Z2 = Lattice.identity(2)
Z3 = Lattice.identity(3)
D2 = Lattice.diagonal([2, Fraction(1, 2)])
D3 = Lattice.diagonal([Fraction(1, 4), 1, 4])


def test_lattice_validation():
    with pytest.raises(PreconditionError):
        Lattice([[1, 2], [2, 4]])
    with pytest.raises(PreconditionError):
        Lattice([[1, 0, 0], [0, 1, 0]])
    with pytest.raises(PreconditionError):
        Lattice([[2, 0], [0, 1]], unimodular=True)
    L = Lattice([["1/2", 0], [0, "2"]], unimodular=True)
    assert L.is_exact and L.det_exact == 1


def test_covolume_examples():
    assert covolume(Sublattice(Z2, ((1, 0),))) == 1
    assert covolume(Sublattice(D2, ((0, 1),))) == 0.5
    # 2x2 Gram of (1,0,0),(1,1,0) is [[1,1],[1,2]], determinant 1
    assert covolume(Sublattice(Z3, ((1, 0, 0), (1, 1, 0)))) == 1
    assert covolume(Sublattice(Z3, ())) == 1
    with pytest.raises(PreconditionError):
        Sublattice(Z3, ((1, 0, 0), (2, 0, 0)))


def test_saturate_examples():
    g = saturate(Sublattice(Z2, ((2, 0),)))
    assert g == Sublattice(Z2, ((1, 0),))
    assert covolume(g) == 1
    h = Sublattice(Z3, ((1, 1, 0), (0, 1, 0)))
    assert saturate(h) == h
    g6 = Sublattice(Z3, ((2, 0, 0), (0, 3, 0)))
    assert covolume(g6) == 6
    assert covolume(saturate(g6)) == 1


def test_sublattice_contains_and_saturation():
    big = Sublattice(Z3, ((1, 0, 0), (0, 1, 0)))
    assert big.contains(Sublattice(Z3, ((2, 2, 0),)))
    assert not big.contains(Sublattice(Z3, ((0, 0, 1),)))
    assert not Sublattice(Z3, ((2, 0, 0),)).is_saturated()


def test_enumerate_examples():
    got = {v.coeffs for v in enumerate_short_vectors(Z2, 1.0)}
    assert got == {(1, 0), (0, 1)}
    got = {v.coeffs for v in enumerate_short_vectors(Z2, 1.5)}
    assert got == {(1, 0), (0, 1), (1, 1), (1, -1)}
    norms = [v.norm for v in enumerate_short_vectors(Z3, 2.0)]
    assert norms == sorted(norms)
    with pytest.raises(PreconditionError):
        enumerate_short_vectors(Z2, 0)


def test_enumerate_matches_box_oracle():
    for seed in range(10):
        L = random_lattice(3, seed)
        lam1 = brute_force_minima(L)[0][0]
        R = 2 * lam1
        fast = sorted(v.coeffs for v in enumerate_short_vectors(L, R))
        C, _, _ = box_vectors(L, R)
        slow = sorted(tuple(int(t) for t in c) for c in C)
        assert fast == slow


def test_enumerate_cap():
    with pytest.raises(ResourceError) as exc:
        enumerate_short_vectors(Z3, 10.0, cap=100)
    assert exc.value.cap == 100


def test_successive_minima_examples():
    assert successive_minima(Z3).values == (1, 1, 1)
    assert successive_minima(D2).values == (0.5, 2)
    assert successive_minima(Z2, NormSpec.linf(2)).values == (1, 1)
    m = successive_minima(D3)
    assert m.values == (0.25, 1, 4)
    assert np.linalg.matrix_rank(np.array(m.witnesses)) == 3


def test_well_rounded_examples():
    assert is_well_rounded(Z3)
    assert not is_well_rounded(D2)
    H = hexagonal()
    assert is_well_rounded(H)
    vals, _ = brute_force_minima(H)
    assert vals[0] == pytest.approx(vals[1], rel=1e-12)
    assert vals[0] == pytest.approx((2 / math.sqrt(3)) ** 0.5, rel=1e-12)


def test_minimal_covolume_examples():
    assert minimal_covolume_sublattice(Z3, 2).covolume == 1
    m1 = minimal_covolume_sublattice(D3, 1)
    assert m1.covolume_sq_exact == Fraction(1, 16)
    assert m1.sublattice == Sublattice(D3, ((1, 0, 0),))
    m2 = minimal_covolume_sublattice(D3, 2)
    assert m2.covolume_sq_exact == Fraction(1, 16)
    assert m2.sublattice == Sublattice(D3, ((1, 0, 0), (0, 1, 0)))
    # brute-force pairs oracle
    cov, rows, ex, _ = oracle_min_covolume(D3, 2)
    assert ex == Fraction(1, 16)
    assert m2.certificate["wedge_radius"] >= m2.covolume


def test_minimal_covolume_full_rank_is_det(rng):
    for seed in range(5):
        L = random_lattice(3, seed)
        assert minimal_covolume_sublattice(L, 3).covolume == pytest.approx(abs(L.det), rel=1e-12)
    R = random_rational_lattice(3, rng)
    assert minimal_covolume_sublattice(R, 3).covolume_sq_exact == R.det_exact**2


def test_minimal_covolume_resource_error_is_partial():
    L = Lattice.diagonal([1, 1, 1, 1])
    with pytest.raises(ResourceError) as exc:
        minimal_covolume_sublattice(L, 2, cap=3)
    partial = exc.value.partial
    assert partial is not None and not partial.certified


def test_ties_reported():
    m = minimal_covolume_sublattice(Lattice.identity(3), 1)
    assert len(m.ties) == 2


def test_sublattices_below_sorted_and_bounded(rng):
    L = random_lattice(4, 3)
    out = sublattices_below(L, 2, 1.5)
    covs = [c for c, _ in out]
    assert covs == sorted(covs)
    assert all(c <= 1.5 * (1 + 1e-9) for c in covs)
    assert all(g.is_saturated() for _, g in out)


def test_unimodular_invariance(rng):
    for seed in range(10):
        n = 2 + seed % 3
        L = random_lattice(n, seed)
        U = random_unimodular_int(n, rng)
        L2 = Lattice(L.basis @ U.astype(float))
        assert successive_minima(L2).values == pytest.approx(successive_minima(L).values, rel=1e-9)
        for k in range(1, n):
            a = minimal_covolume_sublattice(L, k).covolume
            b = minimal_covolume_sublattice(L2, k).covolume
            assert a == pytest.approx(b, rel=1e-9)


def test_scaling_law(rng):
    for seed in range(10):
        L = random_lattice(3, seed)
        c = float(rng.uniform(0.2, 5))
        m = successive_minima(L).values
        mc = successive_minima(Lattice(c * L.basis)).values
        assert np.allclose(mc, c * np.array(m), rtol=1e-9)


def test_min_covolume_below_product_of_minima():
    for seed in range(15):
        n = 2 + seed % 3
        L = random_lattice(n, seed)
        lam = successive_minima(L).values
        for k in range(1, n + 1):
            assert minimal_covolume_sublattice(L, k).covolume <= math.prod(lam[:k]) * (1 + 1e-9)


def test_saturate_never_increases(rng):
    for _ in range(30):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, n + 1))
        gens = rng.integers(-4, 5, size=(k, n))
        if np.linalg.matrix_rank(gens) < k:
            continue
        L = random_lattice(n, int(rng.integers(1000)))
        g = Sublattice(L, tuple(map(tuple, gens.tolist())))
        s = saturate(g)
        assert covolume(s) <= covolume(g) * (1 + 1e-9)
        assert saturate(s) == s
        assert s.contains(g)


def test_norm_spec_constants(rng):
    for n in (2, 3, 5):
        for N in (NormSpec.euclidean(), NormSpec.linf(n), NormSpec.l1(n)):
            assert N.spot_check(n, rng)


def test_linf_minima_match_brute_force():
    for seed in range(10):
        n = 2 + seed % 3
        L = random_lattice(n, seed)
        N = NormSpec.linf(n)
        assert successive_minima(L, N).values == pytest.approx(brute_force_minima(L, N)[0], rel=1e-12)
