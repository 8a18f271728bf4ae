import numpy as np
import pytest

from boostcov.symbols import (BoostSpec, Momentum, full_symbols, one_particle_symbols, propagator_symbol,
                              sample_momenta, sigma_symbol, spatial_symbols, split_symbols,
                              verify_symbol_bounds)


def mom(e, k, b):
    return Momentum.build(e, k, b)


@pytest.fixture
def b06():
    return BoostSpec.create(1.0, 0.6)


def test_boost_validation():
    with pytest.raises(ValueError):
        BoostSpec.create(1.0, 1.0)
    with pytest.raises(ValueError):
        BoostSpec.create(0.0, 0.1)
    with pytest.raises(ValueError):
        BoostSpec(1.0, (0.1,), 3)
    b = BoostSpec.create(1.0, 0.6, 3)
    assert b.velocity == (0.6, 0.0)
    assert b.cosh == pytest.approx(1.25)
    assert b.sinh == pytest.approx(0.75)
    assert b.gap == pytest.approx(0.8)


def test_zero_momentum_bundle(b06):
    s = one_particle_symbols(mom(3.0, 0.0, b06), b06)
    assert (s.mu, s.delta, s.mu_plus, s.mu_minus) == (1.0, 0.0, 1.0, 1.0)


def test_v0_collapse():
    b = BoostSpec.create(1.0, 0.0)
    s = one_particle_symbols(mom(0.5, 1.0, b), b)
    assert s.mu_plus == s.mu_minus == pytest.approx(np.sqrt(2))


def test_boosted_mode_rates(b06):
    s = one_particle_symbols(mom(0.0, 1.0, b06), b06)
    assert s.mu_plus == pytest.approx(np.sqrt(2) + 0.6, abs=1e-15)
    assert s.mu_minus == pytest.approx(np.sqrt(2) - 0.6, abs=1e-15)
    assert min(s.mu_plus, s.mu_minus) >= 0.8


def test_propagator_values(b06):
    assert propagator_symbol(mom(0.0, 0.0, b06), b06) == 1.0
    b0 = BoostSpec.create(1.0, 0.0)
    # 1/(E^2 + k^2 + m^2) at E = |k| = m = 1
    assert propagator_symbol(mom(1.0, 1.0, b0), b0) == pytest.approx(1 / 3, rel=1e-15)
    d = propagator_symbol(mom(1.0, 1.0, b06), b06)
    assert d == pytest.approx(1 / (2.64 + 1.2j), abs=1e-15)
    assert d.real == pytest.approx(0.31392, abs=1e-5)
    assert d.imag == pytest.approx(-0.14269, abs=1e-5)


def test_split_matches_propagator(b06):
    m = mom(1.0, 1.0, b06)
    k, l = split_symbols(m, b06)
    d = propagator_symbol(m, b06)
    assert k == pytest.approx(d.real, rel=1e-14)
    assert l == pytest.approx(d.imag, rel=1e-14)
    assert split_symbols(mom(0.0, 2.0, b06), b06)[1] == 0.0
    b0 = BoostSpec.create(1.0, 0.0)
    k0, l0 = split_symbols(mom(1.5, 0.5, b0), b0)
    assert l0 == 0.0 and k0 == pytest.approx(1 / (1.5**2 + 1.25))


def test_sigma_squares_to_propagator():
    rng = np.random.default_rng(4)
    for v in (0.0, 0.3, -0.9):
        b = BoostSpec.create(1.0, v)
        e, k = sample_momenta(rng, 10_000, b)
        s = sigma_symbol((e, k), b)
        assert np.all(s.real > 0)
        assert np.max(np.abs(s**2 - propagator_symbol((e, k), b))) < 1e-14
    b0 = BoostSpec.create(1.0, 0.0)
    assert sigma_symbol(mom(0.0, 0.0, b0), b0) == 1.0


def test_full_bundle_consistent(b06):
    fb = full_symbols(mom(1.0, 1.0, b06), b06)
    assert fb.d_tilde == pytest.approx(fb.k_tilde + 1j * fb.l_tilde)
    assert fb.sigma_tilde**2 == pytest.approx(fb.d_tilde)


def test_spatial_symbols(b06):
    s = spatial_symbols(0.0, np.zeros(0), b06)
    assert s.nu == pytest.approx(0.8)
    assert s.nu_plus == pytest.approx(1.25)
    assert s.nu_minus == pytest.approx(1.25)
    b0 = BoostSpec.create(1.0, 0.0, 3)
    s0 = spatial_symbols(0.7, np.array([0.4]), b0)
    assert s0.nu == pytest.approx(np.sqrt(0.49 + 0.16 + 1))
    assert s0.k_plus == pytest.approx(s0.nu) and s0.k_minus == pytest.approx(-s0.nu)


def test_spatial_roots_are_poles():
    # the symbol, as a function of k.n, vanishes in its denominator at i k_pm
    b = BoostSpec.create(1.0, 0.6)
    e = 0.9
    s = spatial_symbols(e, np.zeros(0), b)
    for root in (s.k_plus, s.k_minus):
        k = 1j * root
        den = (e + 1j * k * 0.6) ** 2 + k**2 + 1.0
        assert abs(den) < 1e-12


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("v", [0.0, 0.1, -0.3, 0.6, -0.9])
def test_bounds_hold(dim, v):
    b = BoostSpec.create(1.0, v, dim)
    rep = verify_symbol_bounds(sample_momenta(np.random.default_rng(7), 10_000, b), b)
    assert rep.total_violations == 0
    assert rep.passed


def test_sup_sequence_approaches_sinh(b06):
    rep = verify_symbol_bounds(sample_momenta(np.random.default_rng(1), 100, b06), b06)
    ratios = [r for _, r in rep.sup_sequence]
    assert all(r < 0.75 for r in ratios)
    assert ratios == sorted(ratios)
    assert abs(ratios[-1] - 0.75) <= 0.0075


def test_bound_report_detects_violation(b06):
    # pretending the boost is slower makes the cosh bounds fail somewhere
    slow = BoostSpec.create(1.0, 0.1)
    from boostcov.symbols import bound_families, mu_delta
    e, k = sample_momenta(np.random.default_rng(2), 5000, b06)
    mu, de = mu_delta(k, b06)
    checks, _ = bound_families(e, mu, de, slow.cosh, slow.sinh, True)
    assert not all(ok.all() for ok in checks.values())


def test_rejects_nonfinite(b06):
    with pytest.raises(ValueError):
        verify_symbol_bounds((np.array([np.nan]), np.array([0.0])), b06)
    with pytest.raises(ValueError):
        verify_symbol_bounds((np.array([]), np.array([])), b06)
