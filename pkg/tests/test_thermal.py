import numpy as np
import pytest

from boostcov import thermal as th
from boostcov.periodize import CompactSpec, gram_reflection_compact
from boostcov.rp import Bump, Sharp, SpatialFunction, TestFunction, TestFunctionFamily, sobolev_half_inner
from boostcov.symbols import BoostSpec

B06 = BoostSpec.create(1.0, 0.6)
SPEC = CompactSpec(2.0, B06)
LAT = th.mode_lattice(2 * np.pi, 16)


def alphas(seed=0, real=False):
    rng = np.random.default_rng(seed)
    return th.random_alpha(rng, LAT, real), th.random_alpha(rng, LAT, real)


def test_lattice_is_symmetric():
    assert len(LAT.modes) == 33
    p = th.reflect_index(LAT.modes)
    assert np.allclose(LAT.modes[p], -LAT.modes)
    with pytest.raises(ValueError):
        th.reflect_index(np.array([0.0, 1.0]))


def test_zero_temperature_doubling():
    a, _ = alphas()
    ka, _ = th.doubling_maps(a, CompactSpec(1e4, B06), "+")
    assert np.max(np.abs(ka.analytic.coeffs - a.coeffs)) < 1e-15
    assert np.max(np.abs(ka.conjugate.coeffs)) == 0.0


@pytest.mark.parametrize("sign", "+-")
def test_kappa_norm(sign):
    a, _ = alphas(1)
    ka, _ = th.doubling_maps(a, SPEC, sign)
    mu_s, _ = th.hamiltonians(a.modes, SPEC, sign)
    rho, _ = th.bose(mu_s, 2.0)
    expected = sobolev_half_inner(a, a.scaled(1 + 2 * rho)).real
    assert ka.inner(ka).real == pytest.approx(expected, rel=1e-14)


def test_scalar_action_on_slots():
    # multiplying alpha by i multiplies the analytic slot by i and the conjugate slot by -i
    a, _ = alphas(2)
    for idx in (0, 1):
        u = th.doubling_maps(a, SPEC, "+")[idx]
        w = th.doubling_maps(a.scaled(1j), SPEC, "+")[idx]
        assert w.distance(u.slotwise(1j, -1j)) < 1e-15


def test_sharp_quantization_is_translated_kappa():
    a, _ = alphas(3)
    q = th.thermal_quantize(TestFunction(Sharp(0.4), a), SPEC, "+")
    assert q.distance(th.sharp_slice(a, 0.4, SPEC, "+")) < 1e-15


@pytest.mark.parametrize("sign", "+-")
def test_half_period_slice_is_kappa_prime(sign):
    a, _ = alphas(4)
    _, kp = th.doubling_maps(a, SPEC, sign)
    assert th.sharp_slice(a, 1.0, SPEC, sign).distance(kp) < 1e-14


@pytest.mark.parametrize("v", [0.0, 0.6])
def test_thermal_isometry_against_cylinder_gram(v):
    spec = CompactSpec(3.0, BoostSpec.create(1.0, v))
    members = [TestFunction(Bump(0.35 + 0.12 * i, 0.04), Bump(0.25 * i - 0.5, 0.4, 1.0 + 0.2 * i))
               for i in range(5)]
    g = gram_reflection_compact(TestFunctionFamily(members, "positive_time"), spec).matrix
    t = th.thermal_gram(members, spec, "+")
    assert np.max(np.abs(g - t)) <= 1e-6 * np.max(np.abs(g))


def test_thermal_quantize_support():
    a, _ = alphas()
    with pytest.raises(ValueError):
        th.thermal_quantize(TestFunction(Sharp(1.5), a), SPEC, "+")


def test_sharp_time_inner():
    spec0 = CompactSpec(2.0, BoostSpec.create(1.0, 0.0))
    a, b = alphas(5)
    rho, _ = th.bose(a.mu, 2.0)
    assert th.sharp_time_inner(0.0, a, 0.0, a, spec0, "+") == pytest.approx(
        sobolev_half_inner(a, a.scaled(1 + 2 * rho)), rel=1e-14)
    ra, rb = alphas(6, real=True)
    for s, sp in ((0.2, 0.7), (0.0, 1.0)):
        direct = th.sharp_time_inner(s, ra, sp, rb, SPEC, "+")
        paired = th.sharp_slice(ra, s, SPEC, "+").inner(th.sharp_slice(rb, sp, SPEC, "+"))
        assert abs(direct - paired) <= 1e-12 * abs(direct)
    # the doubling is only real-linear, so complex profiles do not pair this way at v != 0
    direct = th.sharp_time_inner(0.2, a, 0.7, b, SPEC, "+")
    paired = th.sharp_slice(a, 0.2, SPEC, "+").inner(th.sharp_slice(b, 0.7, SPEC, "+"))
    assert abs(direct - paired) > 1e-6
    plus = th.sharp_time_inner(0.3, ra, 0.5, rb, SPEC, "+")
    minus = th.sharp_time_inner(0.3, ra, 0.5, rb, SPEC, "-")
    assert abs(minus - np.conj(plus)) < 1e-14
    with pytest.raises(ValueError):
        th.sharp_time_inner(1.2, a, 0.0, a, SPEC, "+")


def test_liouvillian():
    a, _ = alphas(7)
    u, _ = th.doubling_maps(a, SPEC, "-")
    assert th.liouvillian_translate(u, 0.0, SPEC, "-").distance(u) == 0.0
    two = th.liouvillian_translate(th.liouvillian_translate(u, 0.3, SPEC, "-"), 0.5 - 0.2j, SPEC, "-")
    assert two.distance(th.liouvillian_translate(u, 0.8 - 0.2j, SPEC, "-")) < 1e-14
    gap = th.liouvillian_spectrum(LAT.modes, SPEC, "+")
    assert gap["passed"] and gap["min_abs"] >= 0.8
    with pytest.raises(ValueError):
        th.liouvillian_translate(u, 3.0 + 1j, SPEC, "-")


def test_single_mode_kms_identity():
    mu = np.sqrt(2.0)
    rho, one_rho = th.bose(mu, 2.0)
    assert one_rho * np.exp(-2 * mu) == pytest.approx(rho, rel=1e-15)


@pytest.mark.parametrize("v", [0.0, 0.6])
@pytest.mark.parametrize("sign", "+-")
def test_one_particle_kms(v, sign):
    spec = CompactSpec(2.0, BoostSpec.create(1.0, v))
    a, b = alphas(8)
    out = th.one_particle_kms_check(a, b, np.linspace(-5, 5, 41), spec, sign)
    assert out["passed"] and out["max_residual"] < 1e-10


@pytest.mark.parametrize("sign", "+-")
def test_modular(sign):
    pairs = [alphas(s) for s in range(3)]
    out = th.modular_check(SPEC, sign, pairs)
    assert out["passed"] and out["j_kappa"] == 0.0 and out["polar"] <= 1e-12


def test_single_mode_conjugation():
    a = SpatialFunction(np.array([0.0]), np.array([1.0]), np.array([1.0]))
    ka, kpa = th.doubling_maps(a, SPEC, "+")
    rho, one_rho = th.bose(1.0, 2.0)
    assert ka.analytic.coeffs[0] == pytest.approx(np.sqrt(one_rho))
    assert ka.conjugate.coeffs[0] == pytest.approx(np.sqrt(rho))
    j = th.modular_conjugation(ka)
    assert j.analytic.coeffs[0] == -np.sqrt(rho) and j.conjugate.coeffs[0] == -np.sqrt(one_rho)
    assert j.distance(kpa.scaled(-1.0)) == 0.0


def test_two_slice_density():
    lat16 = th.mode_lattice(2 * np.pi, 8)
    out = th.sharp_time_density_check(0.0, 0.5, SPEC, lat16)
    assert out["passed"] and out["min_singular_value"] > 0 and out["single_slice_rank"] == 1
    assert out["contraction"] < 1
    svals = [th.sharp_time_density_check(0.2, 0.2 + h, SPEC, lat16)["min_singular_value"] for h in (0.4, 0.1, 0.01)]
    assert svals[0] > svals[1] > svals[2]
    with pytest.raises(ValueError):
        th.sharp_time_density_check(0.3, 0.3, SPEC, lat16)


def test_two_point_single_mode_coth():
    a = SpatialFunction(np.array([0.0]), np.array([1.0]), np.array([1.0]))
    out = th.thermal_two_point(a, a, 0.0, CompactSpec(2.0, BoostSpec.create(1.0, 0.0)), "+")
    assert out["value"] == pytest.approx(1 / np.tanh(1.0) / 2, rel=1e-14)
    assert out["coth_half_form"] == pytest.approx(out["value"], rel=1e-14)


@pytest.mark.parametrize("sign", "+-")
def test_two_point_residuals(sign):
    a, b = alphas(9)
    out = th.thermal_two_point(a, b, 0.4, SPEC, sign)
    assert out["kms_residual"] < 1e-10
    assert out["commutator_residual"] < 1e-12
    with pytest.raises(ValueError):
        th.two_point_continued(a, b, 0.2 + 2.5j, SPEC, sign)
