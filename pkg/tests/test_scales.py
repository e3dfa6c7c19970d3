import math

import pytest
from hypothesis import given, strategies as st
from scipy.constants import hbar, k as k_B

from quasicondensate import (Box, ConfinementResonanceError, GasParameters, Harmonic,
                             check_1d_regime, compute_g1d, compute_g1d_weak, derive_scales, rb87)
from quasicondensate.scales import transverse_length

M_RB = 1.443e-25
A_RB = 5.2e-9
W_PERP = 2 * math.pi * 3e3

# Evaluated once with 40-digit arithmetic (mpmath), exact hbar = h / 2 pi.
G1D_RB87 = 2.1502581612024096e-38
A_PERP_RB87 = 1.969039160155221e-7


def test_g1d_fixture_high_precision():
    assert transverse_length(W_PERP, M_RB) == pytest.approx(A_PERP_RB87, rel=1e-13)
    assert compute_g1d(A_RB, W_PERP, M_RB) == pytest.approx(G1D_RB87, rel=1e-13)


def test_g1d_zero_scattering_length():
    assert compute_g1d(0.0, W_PERP, M_RB) == 0.0


def test_g1d_weak_limit():
    ratios = [compute_g1d(a, W_PERP, M_RB) / compute_g1d_weak(a, W_PERP) for a in (1e-9, 1e-11, 1e-13)]
    assert ratios[0] > ratios[1] > ratios[2] > 1.0
    assert ratios[-1] == pytest.approx(1.0, abs=1e-5)


def test_g1d_resonance_error():
    a_perp = transverse_length(W_PERP, M_RB)
    with pytest.raises(ConfinementResonanceError):
        compute_g1d(a_perp / 1.4603, W_PERP, M_RB)
    with pytest.raises(ConfinementResonanceError):
        compute_g1d(a_perp, W_PERP, M_RB)


def test_derived_scale_formulas():
    p = rb87(60e6, temperature=50e-9, length=100e-6, tunnel_coupling=10.0)
    s = derive_scales(p)
    g, n, m = s.g1d, p.n1d, p.atom_mass
    assert s.chemical_potential == pytest.approx(g * n, rel=1e-12)
    assert s.sound_speed == pytest.approx(math.sqrt(g * n / m), rel=1e-12)
    assert s.gamma == pytest.approx(m * g / (hbar**2 * n), rel=1e-12)
    assert s.luttinger_K == pytest.approx(math.sqrt(n * (hbar * math.pi) ** 2 / (4 * g * m)), rel=1e-12)
    assert s.lambda_T == pytest.approx(2 * hbar**2 * n / (m * k_B * 50e-9), rel=1e-12)
    assert s.xi_n == pytest.approx(hbar / (m * s.sound_speed), rel=1e-12)
    assert s.xi_J == pytest.approx(math.sqrt(hbar / (4 * m * 10.0)), rel=1e-12)
    assert s.q_ratio == pytest.approx(s.lambda_T / s.xi_J, rel=1e-12)
    assert k_B * s.T_eff == pytest.approx(g * n / 2, rel=1e-12)
    assert s.lambda_eff == pytest.approx(hbar**2 * n / (m * k_B * s.T_eff), rel=1e-12)


def test_uncoupled_and_zero_temperature():
    s = derive_scales(rb87(60e6, length=100e-6))
    assert s.uncoupled and s.xi_J == math.inf and s.q_ratio == 0.0
    assert s.zero_temperature and s.lambda_T == math.inf


def test_halving_density_doubles_gamma():
    a = derive_scales(rb87(60e6, length=100e-6))
    b = derive_scales(rb87(30e6, length=100e-6))
    assert b.gamma / a.gamma == pytest.approx(2.0, rel=1e-12)


def test_parameter_validation():
    with pytest.raises(ValueError):
        GasParameters(M_RB, A_RB, W_PERP, Box(100e-6), -1.0)
    with pytest.raises(ValueError):
        GasParameters(M_RB, A_RB, W_PERP, Box(100e-6), 60e6, temperature=-1e-9)
    with pytest.raises(ValueError):
        GasParameters(M_RB, A_RB, W_PERP, Box(100e-6), 60e6, atom_number=7000)
    ok = GasParameters(M_RB, A_RB, W_PERP, Box(100e-6), 60e6, atom_number=6050)
    assert ok.atom_number == 6050
    assert GasParameters(M_RB, A_RB, W_PERP, Box(100e-6), 60e6).atom_number == pytest.approx(6000)
    GasParameters(M_RB, A_RB, W_PERP, Harmonic(2 * math.pi * 5), 60e6)


def test_regime_report():
    e_perp = hbar * W_PERP
    ok = rb87(60e6, temperature=0.1 * e_perp / k_B, length=100e-6)
    rep = check_1d_regime(ok, derive_scales(ok))
    assert rep.ok and not rep.warnings
    assert rep.thermal_ratio == pytest.approx(0.1)
    hot = rb87(60e6, temperature=2 * e_perp / k_B, length=100e-6)
    rep = check_1d_regime(hot, derive_scales(hot))
    assert not rep.one_d and any("1D regime" in w for w in rep.warnings)
    # gamma = 10: very dilute gas
    s = derive_scales(ok)
    n_dilute = ok.n1d * s.gamma / 10.0
    dilute = rb87(n_dilute, temperature=1e-9, length=100e-6)
    rep = check_1d_regime(dilute, derive_scales(dilute))
    assert rep.gamma == pytest.approx(10.0, rel=1e-9)
    assert not rep.quasicondensate


@given(st.floats(1e-9, 1e-6), st.floats(1.01, 3.0))
def test_lambda_T_decreasing_in_T(T, f):
    a = derive_scales(rb87(60e6, temperature=T, length=100e-6))
    b = derive_scales(rb87(60e6, temperature=T * f, length=100e-6))
    assert b.lambda_T < a.lambda_T
    assert a.T_eff == b.T_eff


@given(st.floats(0.1, 1e3), st.floats(1.01, 3.0))
def test_q_increasing_in_J(J, f):
    a = derive_scales(rb87(60e6, temperature=50e-9, length=100e-6, tunnel_coupling=J))
    b = derive_scales(rb87(60e6, temperature=50e-9, length=100e-6, tunnel_coupling=J * f))
    assert b.q_ratio > a.q_ratio


@given(st.floats(1e6, 1e9), st.floats(2 * math.pi * 100, 2 * math.pi * 2e4))
def test_teff_is_half_chemical_potential(n, w):
    p = GasParameters(M_RB, A_RB, w, Box(100e-6), n)
    s = derive_scales(p)
    assert k_B * s.T_eff == pytest.approx(0.5 * s.g1d * n, rel=1e-12)
