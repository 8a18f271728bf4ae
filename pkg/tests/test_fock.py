from math import comb

import numpy as np
import pytest

from boostcov import fock
from boostcov.rp import Bump, Sharp, SpatialFunction, TestFunction
from boostcov.symbols import BoostSpec

L = 2 * np.pi
PHI4 = fock.PolySpec.phi4(0.1)
FREE = fock.PolySpec(())


@pytest.fixture(scope="module")
def reference():
    return fock.build_operators(fock.FockTruncation(L, 3, 6), PHI4)


def test_truncation_dimension_and_cap():
    t = fock.FockTruncation(L, 2, 4)
    assert t.dimension == sum(comb(4 + p, p) for p in range(5)) == len(t.basis.occupations)
    with pytest.raises(ValueError):
        fock.FockTruncation(L, 4, 8)
    with pytest.raises(ValueError):
        fock.FockTruncation(-1.0, 1, 1)


def test_basis_closed_under_reflection():
    t = fock.FockTruncation(L, 2, 3)
    occ = t.basis.occupations
    flipped = occ[:, ::-1]
    assert {tuple(r) for r in occ} == {tuple(r) for r in flipped}


def test_polynomial_validation():
    with pytest.raises(ValueError):
        fock.PolySpec((0, 0, 0, 1.0))
    with pytest.raises(ValueError):
        fock.PolySpec((0, 0, -1.0))
    assert PHI4.degree == 4 and FREE.degree == -1


def test_free_operators():
    ops = fock.build_operators(fock.FockTruncation(L, 2, 3), FREE)
    assert ops.h_int.nnz == 0 and ops.ground_energy == 0.0
    t = ops.trunc
    assert np.allclose(ops.h_free.diagonal(), t.basis.occupations @ t.energies)
    rows = fock.spectrum_condition(ops, [0.0, 0.6])["rows"]
    assert rows[0]["min_eigenvalue"] == 0.0 and rows[0]["gap"] == pytest.approx(1.0)
    assert rows[1]["min_eigenvalue"] == 0.0 and rows[1]["passed"]


def test_interaction_structure(reference):
    h = reference.h_int
    assert abs(h - h.T).max() <= 1e-12
    assert fock.commutator_norms(reference) == {"int": 0.0, "free": 0.0}
    vac = int(reference.trunc.basis.index(np.array([0]))[0])
    assert h[vac, vac] == 0.0


def test_reference_ground_energy(reference):
    assert reference.ground_energy == pytest.approx(-0.001584653598790453, rel=1e-9)
    assert reference.trunc.dimension == 1716


def test_reference_spectrum_condition(reference):
    out = fock.spectrum_condition(reference, [0.0, 0.3, -0.3, 0.6, -0.6])
    assert out["passed"]
    for row in out["rows"]:
        assert row["min_eigenvalue"] >= -1e-8
        assert row["ground_sector"] == 0 and row["ph_bound_ok"]
        assert row["p_omega_residual"] < 1e-12
    with pytest.raises(ValueError):
        fock.spectrum_condition(reference, [1.0])


def test_ground_energy_refinement_trend():
    energies = [fock.build_operators(fock.FockTruncation(L, k, n), PHI4).ground_energy
                for k, n in ((2, 4), (3, 6), (3, 8), (4, 6))]
    expected = [-0.001163, -0.0015847, -0.0015861, -0.0018760]
    assert energies == pytest.approx(expected, abs=1e-6)


def test_quadratic_model_matches_tensor_route():
    t = fock.FockTruncation(L, 1, 2)
    ops = fock.build_operators(t, fock.PolySpec((0, 0, 0.5)))
    h, _ = fock.tensor_hamiltonian(t, 1.0)
    dense = np.sort(np.linalg.eigvalsh((ops.h_free + ops.h_int).toarray()))
    assert np.max(np.abs(np.linalg.eigvalsh(h) - dense)) < 1e-12


def test_quadratic_model_approaches_bogoliubov():
    e0, _, _ = fock.quadratic_spectrum(fock.FockTruncation(L, 1, 2), 1.0)
    assert e0 == pytest.approx(-0.0786094, abs=1e-7)
    errs = [abs(fock.build_operators(fock.FockTruncation(L, 1, n), fock.PolySpec((0, 0, 0.5))).ground_energy - e0)
            for n in (2, 4, 8)]
    assert errs[0] > errs[1] > errs[2]


def test_heat_kernel_trace_and_gibbs():
    ops = fock.build_operators(fock.FockTruncation(L, 1, 4), PHI4)
    hk, vals = fock.heat_kernel(ops, 0.7, 0.3)
    assert np.trace(hk) == pytest.approx(np.sum(np.exp(-0.7 * vals)), rel=1e-13)
    rep, state = fock.heat_kernel_and_gibbs(ops, 2.0, 0.3)
    assert rep["normalization"] == pytest.approx(1.0, abs=1e-14)
    assert rep["kms_residual"] < 1e-10 and rep["invariance_residual"] < 1e-12
    with pytest.raises(ValueError):
        fock.heat_kernel_and_gibbs(ops, 0.0)


def test_free_partition_product():
    ops = fock.build_operators(fock.FockTruncation(L, 1, 12), FREE)
    rep, _ = fock.heat_kernel_and_gibbs(ops, 2.0, 0.6)
    assert rep["product_ok"]
    assert 0 <= rep["cap_rel_error"] <= rep["cap_budget"]
    assert rep["capped_match"] < 1e-12


def test_analyticity():
    zero_sector = fock.build_operators(fock.FockTruncation(L, 0, 6), PHI4)
    out = fock.analyticity_check(zero_sector, 1.0, 0.5, 0.2, 4)
    assert out["passed"] and all(t == 0.0 for t in out["terms"][1:])
    free = fock.build_operators(fock.FockTruncation(L, 2, 4), FREE)
    out = fock.analyticity_check(free, 1.0, 0.5, 0.2, 6)
    assert out["passed"] and max(out["normalized_roots"]) <= out["ratio_bound"]
    for bad in ((1.0, 0.2), (0.5, 0.6), (0.5, 0.0)):
        with pytest.raises(ValueError):
            fock.analyticity_check(free, 1.0, *bad, 4)


def test_lemma_bound():
    out = fock.lemma_bound_check(200, seed=1)
    assert out["passed"] and out["worst_ratio"] <= 1


def fk_functions(trunc, seed):
    rng = np.random.default_rng(seed)
    n = len(trunc.labels)

    def sf():
        return SpatialFunction(trunc.momenta, rng.normal(size=n) + 1j * rng.normal(size=n),
                               np.full(n, 1 / trunc.length))
    return sf, rng


@pytest.mark.parametrize("T", [0.0, 0.5, 1.0])
def test_feynman_kac_smooth(T):
    t = fock.FockTruncation(L, 3, 0)
    sf, _ = fk_functions(t, 2)
    f = TestFunction(Bump(1.5, 0.15), sf())
    g = TestFunction(Bump(1.1, 0.1, 0.7), sf())
    for sign in "+-":
        assert fock.fk_gaussian_check(T, f, g, t, BoostSpec.create(1.0, 0.6), sign=sign)["rel_dev"] < 1e-8


def test_feynman_kac_sharp_closed_form():
    t = fock.FockTruncation(L, 2, 0)
    sf, _ = fk_functions(t, 3)
    a, c = sf(), sf()
    b = BoostSpec.create(1.0, 0.6)
    out = fock.fk_gaussian_check(0.4, TestFunction(Sharp(0.2), a), TestFunction(Sharp(0.3), c), t, b)
    mu = t.energies
    closed = np.sum(a.weights * np.conj(a.coeffs) * np.exp(-0.9 * (mu + 0.6 * t.momenta)) * c.coeffs / (2 * mu))
    assert out["quantum"] == pytest.approx(closed, rel=1e-14)
    assert out["classical"] == pytest.approx(closed, rel=1e-14)
    with pytest.raises(ValueError):
        fock.fk_gaussian_check(0.4, TestFunction(Sharp(0.2), a), TestFunction(Sharp(0.3), c), t, b, poly=PHI4)


def test_gibbs_matches_torus_kernel():
    ops = fock.build_operators(fock.FockTruncation(L, 1, 18), FREE)
    out = fock.gibbs_torus_check(ops, 2.0, 0.6, [(0.5, 0.7), (1.3, -0.4)])
    assert out["max_rel_dev"] <= 10 * out["cap_budget"] + 1e-12
