import json
import math
from fractions import Fraction

import numpy as np
import pytest

from hnorbit.errors import BudgetExhausted, PreconditionError
from hnorbit.generate import random_lattice
from hnorbit.lattice import Lattice, NormSpec, Sublattice, covolume, successive_minima
from hnorbit.oracles import oracle_is_stable
from hnorbit.orbit import (
    DiagCoord,
    ScaledCovolume,
    SearchOptions,
    SearchResult,
    active_sublattices,
    apply_diag,
    certified_stable_search,
    find_stable,
    find_well_rounded,
    oracle_check,
    stability_margin,
    verify_result,
    wr_margin,
)

from conftest import hexagonal

D2 = Lattice.diagonal([2, Fraction(1, 2)])
LOG2 = math.log(2)


def test_diag_coord_renormalises():
    c = DiagCoord((1.0, 2.0, 3.0))
    assert abs(sum(c.x)) < 1e-12
    assert c.x == pytest.approx((-1.0, 0.0, 1.0))
    assert DiagCoord.from_box([0.5, 0.25]).x == pytest.approx((0.5, 0.25, -0.75))
    with pytest.raises(PreconditionError):
        DiagCoord((math.nan, 0.0))


def test_apply_diag_examples(rng):
    assert apply_diag([0, 0], D2) is D2
    L = apply_diag([-LOG2, LOG2], D2)
    assert np.allclose(L.basis, np.eye(2))
    for _ in range(10):
        M = random_lattice(3, int(rng.integers(100)))
        x = rng.normal(size=3)
        assert apply_diag(x, M).det == pytest.approx(M.det, rel=1e-12)
    with pytest.raises(PreconditionError):
        apply_diag([0, 0, 0], D2)


def test_stability_margin_examples():
    assert stability_margin([0, 0, 0], Lattice.identity(3)) == 0
    assert stability_margin([0, 0], D2) == pytest.approx(math.log(0.5))
    assert stability_margin([-LOG2, LOG2], D2) == pytest.approx(0, abs=1e-12)


def test_wr_margin_examples():
    assert wr_margin([0, 0, 0], Lattice.identity(3)) == 0
    assert wr_margin([0, 0], D2) == pytest.approx(-math.log(4))
    assert wr_margin([0, 0], hexagonal()) == pytest.approx(0, abs=1e-12)


def test_margin_action_consistency(rng):
    for seed in range(15):
        n = 2 + seed % 3
        L = random_lattice(n, seed)
        x = rng.normal(size=n)
        a = stability_margin(x, L)
        b = stability_margin(np.zeros(n), apply_diag(x, L))
        assert a == pytest.approx(b, abs=1e-9)


def test_find_stable_examples():
    r = find_stable(Lattice.identity(3))
    assert r.success and r.witness.x == (0.0, 0.0, 0.0) and r.iterations == 0
    for t in (2, 7.5, 0.01, 300):
        L = Lattice([[t, 0], [0, 1 / t]])
        r = find_stable(L)
        assert r.margin >= -1e-9
        assert r.witness.x == pytest.approx((-math.log(t), math.log(t)), abs=1e-6)
        assert verify_result(r, L)


def test_find_stable_random_verified_by_oracle():
    for seed in range(15):
        L = random_lattice(3, seed)
        r = find_stable(L)
        assert r.success and r.margin >= -1e-9
        assert oracle_is_stable(apply_diag(r.witness, L))[0]
        assert verify_result(r, L)


def test_certificate_reverifies():
    L = random_lattice(4, 2)
    r = find_stable(L, SearchOptions(certify=True))
    assert len(r.certificate) == 3
    Lx = apply_diag(r.witness, L)
    for entry in r.certificate:
        g = Sublattice(Lx, tuple(map(tuple, entry["subgroup"])))
        assert covolume(g) >= 1 - 1e-9
        assert entry["wedge_radius"] >= entry["covolume"]
    assert r.oracle["passed"]


def test_find_well_rounded_examples():
    r = find_well_rounded(Lattice.identity(3))
    assert r.success and r.witness.x == (0.0, 0.0, 0.0)
    r = find_well_rounded(D2)
    assert r.witness.x == pytest.approx((-LOG2, LOG2), abs=1e-9)
    m = successive_minima(apply_diag(r.witness, D2))
    assert m.values[0] == pytest.approx(m.values[1], rel=1e-9)


@pytest.mark.parametrize("norm", ["euclidean", "linf", "l1"])
def test_find_well_rounded_random(norm):
    for seed in range(10):
        L = random_lattice(3, 100 + seed)
        N = NormSpec.by_name(norm, 3)
        r = find_well_rounded(L, N, SearchOptions(certify=True))
        assert r.success and verify_result(r, L, N)
        assert r.oracle["passed"]


def test_progress_is_monotone_within_segments():
    for seed in range(10):
        L = random_lattice(4, seed)
        for r in (find_stable(L), find_well_rounded(L, NormSpec.linf(4))):
            for (ra, a), (rb, b) in zip(r.progress, r.progress[1:]):
                if ra == rb:
                    assert b >= a + r.options["min_gain"]


def test_budget_exhausted_carries_best():
    L = random_lattice(3, 7)
    with pytest.raises(BudgetExhausted) as exc:
        find_stable(L, SearchOptions(max_iter=0))
    res = exc.value.result
    assert isinstance(res, SearchResult) and not res.success
    assert res.margin == pytest.approx(max(stability_margin(np.zeros(3), L),
                                           res.margin))


def test_search_result_json_roundtrip():
    L = random_lattice(3, 1)
    r = find_stable(L)
    d = json.loads(r.to_json())
    back = SearchResult.from_dict(d)
    assert back.witness == r.witness
    assert back.certificate == r.certificate
    assert "wall_time" not in r.to_dict(timings=False)
    assert d["budgets"] == {"max_iter": 10_000, "max_time": 60.0}


def test_find_stable_requires_unimodular():
    with pytest.raises(PreconditionError):
        find_stable(Lattice.diagonal([2, 1]))


def test_active_sublattice_examples():
    Z2 = Lattice.identity(2)
    lines = {g.gens for g, _ in active_sublattices(Z2, [[0, 0]], 1.0, measure="covolume")}
    assert lines == {((1, 0),), ((0, 1),)}
    # under the MS norm the diagonals also reach 1
    ms = {g.gens for g, _ in active_sublattices(Z2, [[0, 0]], 1.0)}
    assert lines <= ms and len(ms) == 4
    assert active_sublattices(Z2, [[-0.05, 0.05]], 0.5) == []
    got = active_sublattices(D2, [[-1, 1]], 1.0)
    axis2 = [v for g, v in got if g.gens == ((0, 1),)]
    # x = (1, -1) shrinks (0, 1/2) to e^-1/2
    assert axis2 and axis2[0] == pytest.approx(math.exp(-1) / 2)


def test_active_sublattices_complete_against_sampling(rng):
    for seed in range(6):
        n = 2 + seed % 2
        L = random_lattice(n, seed)
        box = [[-0.3, 0.3]] * (n - 1)
        act = {g.key for g, _ in active_sublattices(L, box, 1.0)}
        for _ in range(20):
            y = rng.uniform(-0.3, 0.3, size=n - 1)
            Lx = apply_diag(DiagCoord.from_box(y), L)
            from hnorbit.lattice import sublattices_below

            for k in range(1, n):
                for c, g in sublattices_below(Lx, k, 1.0):
                    ms = float(g.plucker().to_array().__abs__().max())
                    if ms <= 1.0:
                        assert Sublattice(L, g.gens).key in act


def test_scaled_covolume_matches_direct(rng):
    for _ in range(20):
        n = int(rng.integers(2, 5))
        L = random_lattice(n, int(rng.integers(1000)))
        k = int(rng.integers(1, n))
        gens = rng.integers(-2, 3, size=(k, n))
        if np.linalg.matrix_rank(gens) < k:
            continue
        g = Sublattice(L, tuple(map(tuple, gens.tolist())))
        f = ScaledCovolume(g)
        x = rng.normal(size=n)
        x -= x.mean()
        direct = covolume(Sublattice(apply_diag(x, L), g.gens))
        assert f.value(x) == pytest.approx(math.log(direct), abs=1e-9)
        h = 1e-6
        num = [(f.value(x + h * e) - f.value(x - h * e)) / (2 * h) for e in np.eye(n)]
        assert np.allclose(f.gradient(x), num, atol=1e-6)


def test_scaled_covolume_convex_on_segments(rng):
    for _ in range(100):
        n = int(rng.integers(2, 5))
        L = random_lattice(n, int(rng.integers(1000)))
        g = Sublattice(L, ((1,) + (0,) * (n - 1),))
        f = ScaledCovolume(g)
        a, b = rng.normal(size=n) * 2, rng.normal(size=n) * 2
        assert f.value((a + b) / 2) <= (f.value(a) + f.value(b)) / 2 + 1e-9


def test_certified_search_finds_and_excludes():
    Z2 = Lattice.identity(2)
    x, rep = certified_stable_search(Z2, [[-1, 1]])
    assert x is not None and stability_margin(x, Z2) >= -1e-9
    # away from 0 the axis e2 is shrunk by e^-y < 1 throughout
    x, rep = certified_stable_search(Z2, [[0.5, 2.0]])
    assert x is None and rep["complete"]


def test_certified_exclusion_sound_by_sampling(rng):
    for seed in range(4):
        L = random_lattice(3, seed)
        x, rep = certified_stable_search(L, [[-0.3, 0.3]] * 2)
        if x is None:
            assert rep["complete"]
            for _ in range(100):
                y = rng.uniform(-0.3, 0.3, size=2)
                assert stability_margin(DiagCoord.from_box(y), L) < 0


def test_margin_lipschitz_under_perturbation(rng):
    # a rank-k log covolume moves by at most k·|δ|_inf, so positive margins survive
    for seed in range(30):
        n = 2 + seed % 3
        L = random_lattice(n, seed)
        x = rng.normal(size=n) * 0.5
        m = stability_margin(x, L)
        for eps in (1e-6, 1e-3, 0.1):
            d = rng.uniform(-eps, eps, size=n)
            d -= d.mean()
            bound = (n - 1) * np.abs(d).max() + 1e-9
            assert abs(stability_margin(x + d, L) - m) <= bound


def test_stable_witness_robust():
    Z3 = Lattice.identity(3)
    # strictly stable: hexagonal-type lattice has margin > 0 at the origin
    H = hexagonal()
    m = stability_margin([0, 0], H)
    assert m > 0
    for d in np.linspace(-1, 1, 9) * m / 2:
        assert stability_margin([d, -d], H) > 0
    assert stability_margin([0.01, 0, -0.01], Z3) < 0


def test_oracle_check_structure():
    L = random_lattice(2, 3)
    r = find_well_rounded(L)
    o = oracle_check(r, L)
    assert o["passed"] and len(o["minima"]) == 2
