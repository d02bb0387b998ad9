import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from hnorbit.errors import IntegrityError, PreconditionError
from hnorbit.exterior import MeasuredSubspace
from hnorbit.filtration import (
    MeasuredFlag,
    check_permutation,
    flag_norm_bound_check,
    flag_support_permutation,
    grayson_profile,
    hn_filtration,
    is_stable,
    lower_hull_vertices,
    minkowski_flag,
    minkowski_flag_bound,
)
from hnorbit.generate import random_lattice
from hnorbit.lattice import EUCLIDEAN, Lattice, NormSpec, Sublattice, covolume, is_well_rounded
from hnorbit.oracles import oracle_is_stable
from hnorbit.orbit import apply_diag

from conftest import hexagonal, random_unimodular_int

Z3 = Lattice.identity(3)
D2 = Lattice.diagonal([2, Fraction(1, 2)])
D3 = Lattice.diagonal([Fraction(1, 4), 1, 4])


def test_lower_hull():
    pts = [(0, 0.0), (1, -1.0), (2, -1.0), (3, 0.0)]
    assert lower_hull_vertices(pts) == [0, 1, 2, 3]
    assert lower_hull_vertices([(0, 0.0), (1, 0.0), (2, 0.0)]) == [0, 2]
    # within tolerance of the chord: not a vertex
    assert lower_hull_vertices([(0, 0.0), (1, -1e-12), (2, 0.0)]) == [0, 2]


def test_profile_examples():
    p = grayson_profile(Z3)
    assert [y for _, y in p.points] == [0, 0, 0, 0]
    assert p.vertex_ranks == (0, 3)
    p = grayson_profile(D3)
    assert p.points[1][1] == pytest.approx(-math.log(4))
    assert p.points[2][1] == pytest.approx(-math.log(4))
    assert p.vertex_ranks == (0, 1, 2, 3)
    p = grayson_profile(D2)
    assert p.vertex_ranks == (0, 1, 2)
    assert p.points[1][1] == pytest.approx(math.log(0.5))


def test_profile_csv():
    text = grayson_profile(D2).to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "rank,min_log_cov,is_vertex"
    assert lines[1] == "0,0.0,1" and lines[3] == "2,0.0,1"


def test_hn_examples():
    assert hn_filtration(Lattice.identity(4)).is_trivial
    hn = hn_filtration(D3)
    assert hn.ranks == [0, 1, 2, 3]
    assert hn.chain[1] == Sublattice(D3, ((1, 0, 0),))
    assert hn.chain[2] == Sublattice(D3, ((1, 0, 0), (0, 1, 0)))
    hn = hn_filtration(D2)
    assert hn.ranks == [0, 1, 2]
    assert hn.chain[1] == Sublattice(D2, ((0, 1),))


def test_hn_tie_raises():
    # equal shortest lines never sit on a hull vertex
    L = Lattice.diagonal([Fraction(1, 2), Fraction(1, 2), 4])
    assert hn_filtration(L).ranks == [0, 2, 3]
    # a vertex minimiser reported with a tie is refused
    prof = grayson_profile(D3)
    prof.minimizers[1].ties = [Sublattice(D3, ((0, 1, 0),))]
    with pytest.raises(IntegrityError):
        hn_filtration(D3, profile=prof)


def test_is_stable_examples():
    assert is_stable(Lattice.identity(3)) == (True, None)
    ok, w = is_stable(D2)
    assert not ok and covolume(w) == 0.5
    H = hexagonal()
    assert is_stable(H)[0]
    assert oracle_is_stable(H)[0]
    assert oracle_is_stable(H)[1][0] == pytest.approx((2 / math.sqrt(3)) ** 0.5)
    with pytest.raises(PreconditionError):
        is_stable(Lattice.diagonal([2, 2]))


def test_minkowski_flag_examples():
    assert minkowski_flag(Lattice.identity(3)).is_trivial
    F = minkowski_flag(D2)
    assert F.dims == [1]
    assert F.sublattices[0] == Sublattice(D2, ((0, 1),))
    assert F.flag_norm == 0.5
    F = minkowski_flag(D3)
    assert F.dims == [1, 2]
    assert F.sublattices[0] == Sublattice(D3, ((1, 0, 0),))
    assert F.sublattices[1] == Sublattice(D3, ((1, 0, 0), (0, 1, 0)))


def test_flag_bound_examples():
    v, b = flag_norm_bound_check(Lattice.identity(3))
    assert v == 1 and b >= 1
    v, b = flag_norm_bound_check(D2)
    assert v == 0.5 and v <= b
    for seed in range(100):
        L = random_lattice(3, seed)
        v, b = flag_norm_bound_check(L)
        assert v <= b


def test_flag_bound_formula():
    # Euclidean n=2: (4/pi)^(1/2)
    assert minkowski_flag_bound(2) == pytest.approx(math.sqrt(4 / math.pi))
    # sup norm: unit ball volume 2^n, c_low = n^-1/2
    assert minkowski_flag_bound(2, NormSpec.linf(2)) == pytest.approx(math.sqrt(2))


def test_measured_flag_validation():
    M = MeasuredSubspace.from_basis([[1, 0]])
    with pytest.raises(PreconditionError):
        MeasuredFlag(2, (M, M))
    assert MeasuredFlag(2, ()).flag_norm == 1.0


def test_permutation_examples():
    assert flag_support_permutation([[[1, 0]]]) == (0, 1)
    assert flag_support_permutation([[[0, 1]]]) == (1, 0)


def _random_flag(rng, n):
    # nested spans of the first d columns of a random matrix with some zeros
    M = rng.normal(size=(n, n)) * (rng.random((n, n)) < 0.7)
    while np.linalg.matrix_rank(M) < n:
        M = rng.normal(size=(n, n)) * (rng.random((n, n)) < 0.7)
    dims = sorted(set(rng.integers(1, n, size=int(rng.integers(1, n)))) | {n}) if n > 1 else [1]
    return [M[:, :d].T.tolist() for d in dims]


def test_permutation_random_and_brute_force(rng):
    for _ in range(200):
        n = int(rng.integers(1, 6))
        chain = _random_flag(rng, n)
        sigma = flag_support_permutation(chain, n)
        assert sorted(sigma) == list(range(n))
        assert check_permutation(sigma, chain)
        valid = [p for p in itertools.permutations(range(n)) if check_permutation(p, chain)]
        assert tuple(sigma) in valid


def test_profile_slopes_increase_and_stable_nonnegative():
    for seed in range(40):
        n = 2 + seed % 3
        L = random_lattice(n, seed)
        p = grayson_profile(L)
        s = p.slopes()
        assert all(a < b for a, b in zip(s, s[1:]))
        if is_stable(L)[0]:
            assert all(y >= -1e-9 for _, y in p.points)


def test_hn_nested_saturated_and_trivial_iff_stable():
    for seed in range(40):
        n = 2 + seed % 3
        L = random_lattice(n, seed)
        hn = hn_filtration(L)
        for a, b in zip(hn.chain, hn.chain[1:]):
            assert b.contains(a) and a.rank < b.rank
        assert all(g.is_saturated() for g in hn.chain[1:])
        assert all(c <= 1 + 1e-9 for c in hn.covolumes[1:-1])
        assert hn.is_trivial == is_stable(L)[0]


def test_stability_unimodular_invariance(rng):
    for seed in range(20):
        n = 2 + seed % 3
        L = random_lattice(n, seed)
        U = random_unimodular_int(n, rng)
        assert is_stable(Lattice(L.basis @ U.astype(float)))[0] == is_stable(L)[0]


def test_minkowski_trivial_iff_well_rounded():
    for L in [Lattice.identity(3), D2, D3, hexagonal()] + [random_lattice(3, s) for s in range(10)]:
        for N in (EUCLIDEAN, NormSpec.linf(L.n)):
            assert minkowski_flag(L, N).is_trivial == is_well_rounded(L, N)


def test_hn_equivariance(rng):
    checked = 0
    for seed in range(30):
        n = 2 + seed % 3
        L = random_lattice(n, seed)
        try:
            hn = hn_filtration(L)
        except IntegrityError:
            continue
        x = rng.normal(size=n) * 1e-4
        x -= x.mean()
        aL = apply_diag(x, L)
        try:
            hn2 = hn_filtration(aL)
        except IntegrityError:
            continue
        if hn2.ranks != hn.ranks:
            continue
        # same coefficient subgroups, i.e. subspaces moved by a
        assert [g.key for g in hn2.chain] == [g.key for g in hn.chain]
        checked += 1
    assert checked > 20
