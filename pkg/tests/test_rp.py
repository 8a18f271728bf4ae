import numpy as np
import pytest

from boostcov.rp import (Bump, Sharp, Slab, SpatialFunction, TestFunction, TestFunctionFamily, contraction_ratio,
                         gram_reflection, os_quantize, random_family, sobolev_half_inner, verify_isometry)
from boostcov.symbols import BoostSpec

B06 = BoostSpec.create(1.0, 0.6)


def modes():
    k = np.linspace(-6, 6, 25)
    rng = np.random.default_rng(3)
    return SpatialFunction(k, rng.normal(size=25) + 1j * rng.normal(size=25), np.full(25, 0.5 / np.pi))


def test_single_mode_sobolev_norm():
    a = SpatialFunction.single_mode(2.0, 2 * np.pi, 1.5 - 0.5j)
    assert sobolev_half_inner(a, a) == pytest.approx(2.5 / (2 * np.pi) / (2 * np.sqrt(5)))


def test_sharp_quantization_is_exponential():
    a = modes()
    q = os_quantize(TestFunction(Sharp(0.7), a), "+", B06)
    mu = np.sqrt(a.modes**2 + 1)
    assert np.max(np.abs(q.coeffs - np.exp(-0.7 * (mu + 0.6 * a.modes)) * a.coeffs)) < 1e-15


def test_slab_quantization_closed_form():
    a = modes()
    q = os_quantize(TestFunction(Slab(0.0, 1.3), a), "-", B06)
    rate = np.sqrt(a.modes**2 + 1) - 0.6 * a.modes
    expected = (1 - np.exp(-1.3 * rate)) / rate * a.coeffs
    assert np.max(np.abs(q.coeffs - expected)) < 1e-13


def test_hamiltonian_rate_per_mode():
    a = modes()
    q1 = os_quantize(TestFunction(Sharp(0.2), a), "+", B06)
    q2 = os_quantize(TestFunction(Sharp(1.2), a), "+", B06)
    rate = -np.log(np.abs(q2.coeffs / q1.coeffs))
    assert np.max(np.abs(rate - (np.sqrt(a.modes**2 + 1) + 0.6 * a.modes))) < 1e-12


def test_quantize_rejects_negative_time():
    with pytest.raises(ValueError):
        os_quantize(TestFunction(Bump(-1.0, 0.1), Bump(0.0, 0.5)), "+", B06)


def test_family_rejects_wrong_half():
    mixed = [TestFunction(Bump(0.1, 0.3), Bump(0.0, 0.5))]
    with pytest.raises(ValueError):
        TestFunctionFamily(mixed, "positive_time")
    fam = random_family(0, 4, "positive_time")
    with pytest.raises(ValueError):
        gram_reflection(fam, "pi_n", B06)


def test_singleton_gram_nonnegative():
    fam = TestFunctionFamily([TestFunction(Bump(2.0, 0.2), Bump(0.3, 0.5, 1 - 1j, 1.0))], "positive_time")
    rep = gram_reflection(fam, "theta", B06)
    assert rep.matrix.shape == (1, 1)
    assert rep.matrix[0, 0].real > 0 and abs(rep.matrix[0, 0].imag) < 1e-12 * rep.matrix[0, 0].real


@pytest.mark.parametrize("v", [0.0, 0.3, -0.6, 0.9])
def test_temporal_gram_positive(v):
    rep = gram_reflection(random_family(11, 20), "theta", BoostSpec.create(1.0, v))
    assert rep.verdict
    assert rep.hermiticity <= 1e-12 * np.max(np.abs(rep.eigenvalues))


@pytest.mark.parametrize("v", [0.0, -0.6])
def test_spatial_gram_positive(v):
    rep = gram_reflection(random_family(12, 20, "positive_x1"), "pi_n", BoostSpec.create(1.0, v))
    assert rep.verdict


def test_report_json_fields():
    d = gram_reflection(random_family(5, 6), "theta", B06).to_dict()
    assert {"family_seed", "reflection", "velocity", "eigenvalues", "min_eig", "verdict"} <= set(d)
    assert d["family_seed"] == 5 and d["verdict"] == "pass"


def test_isometry_temporal():
    out = verify_isometry(random_family(2, 8), B06)
    assert out["rel_dev"] <= 1e-6


def test_isometry_spatial():
    out = verify_isometry(random_family(2, 8, "positive_x1"), BoostSpec.create(1.0, -0.3))
    assert out["rel_dev"] <= 1e-6


def test_sharp_time_pairs_closed_form():
    a = Bump(0.2, 0.5, 1.0, 0.5)
    c = Bump(-0.3, 0.4, 0.5j)
    fam = TestFunctionFamily([TestFunction(Sharp(0.4), a), TestFunction(Sharp(0.9), c)], "positive_time")
    g = gram_reflection(fam, "theta", B06).matrix
    k = np.linspace(-40, 40, 40001)
    w = np.full(k.size, k[1] - k[0]) / (2 * np.pi)
    mu = np.sqrt(k**2 + 1)
    rate = mu + 0.6 * k
    closed = np.sum(w * np.conj(a.ft(k)) * np.exp(-1.3 * rate) * c.ft(k) / (2 * mu))
    assert g[0, 1] == pytest.approx(closed, rel=1e-8)


def test_v0_sides_agree():
    fam = random_family(8, 6)
    b = BoostSpec.create(1.0, 0.0)
    plus = gram_reflection(fam, "theta", b, side="+").matrix
    minus = gram_reflection(fam, "theta", b, side="-").matrix
    assert np.max(np.abs(plus - minus)) < 1e-12 * np.max(np.abs(plus))


def test_contraction():
    for v in (0.0, 0.6, -0.9):
        f = TestFunction(Bump(1.5, 0.2), Bump(0.0, 0.5, 1.0, 0.7))
        assert contraction_ratio(f, BoostSpec.create(1.0, v)) <= 1 + 1e-9
