import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats
from scipy.constants import hbar, k as k_B

from quasicondensate import (SpatialGrid, build_box_basis, combine_sectors, number_imbalance,
                             phase_diffusion_constant, sample_binomial_split, sample_fast_split,
                             sample_phase_random_walk, sample_squeezed_split, sample_thermal,
                             split_thermal_gas, thermal_occupations)
from quasicondensate.modes import SECTOR_SCALE

T = 50e-9


def test_thermal_equipartition(box):
    ens = sample_thermal(box, T, 4000, seed=3)
    E = ens.mode_energies().mean(axis=0)
    se = ens.mode_energies().std(axis=0, ddof=1) / math.sqrt(ens.R)
    assert np.all(np.abs(E - k_B * T) < 4 * se)
    # the two quadratures carry equal weight and the phase is uniform
    re2 = np.mean(ens.amplitudes.real ** 2, axis=0)
    im2 = np.mean(ens.amplitudes.imag ** 2, axis=0)
    np.testing.assert_allclose(re2 / im2, 1.0, atol=0.12)
    assert stats.kstest(np.angle(ens.amplitudes[:, 3]) / (2 * np.pi) + 0.5, "uniform").pvalue > 1e-3


def test_thermal_vacuum_offset(box):
    n = thermal_occupations(box, T)
    np.testing.assert_allclose(thermal_occupations(box, T, vacuum=True) - n, 0.5)
    np.testing.assert_allclose(n * hbar * box.omegas, k_B * T, rtol=1e-14)
    with pytest.raises(ValueError):
        sample_thermal(box, 0.0, 10, 1)


def _phase_difference_variance(basis, T, i, j, sector="relative"):
    # exact second moment implied by the thermal mode occupations
    s = SECTOR_SCALE[sector][1]
    var_phase = thermal_occupations(basis, T) / 2.0 * (s / basis.B) ** 2
    d = basis.profiles[i] - basis.profiles[j]
    return float(np.sum(var_phase * d**2))


def test_thermal_phase_matches_random_walk(scales):
    # a dense basis reproduces the diffusive phase of a Wiener process
    L = 100e-6
    g = SpatialGrid(L, 1024)
    b = build_box_basis(L, scales.sound_speed, 400, g, scales.g1d)
    D = phase_diffusion_constant(T, scales.n1d, 1.443e-25)
    mid = g.n // 2
    for d in (40, 80, 160):
        v = _phase_difference_variance(b, T, mid - d // 2, mid + d // 2)
        assert v == pytest.approx(D * d * g.dz, rel=0.03)


def test_sampled_phase_slope_against_wiener_oracle(box):
    ens = sample_thermal(box, T, 3000, seed=11)
    phi = ens.fields().phi
    walk = sample_phase_random_walk(box.grid, T, 60e6, 1.443e-25, 3000, seed=12)
    mid, d = box.grid.n // 2, 64
    v_modes = np.var(phi[:, mid + d // 2] - phi[:, mid - d // 2])
    v_walk = np.var(walk.phi[:, mid + d // 2] - walk.phi[:, mid - d // 2])
    D = phase_diffusion_constant(T, 60e6, 1.443e-25)
    assert v_walk == pytest.approx(D * d * box.grid.dz, rel=0.08)
    assert v_modes == pytest.approx(v_walk, rel=0.1)


def test_fast_split_energy_per_mode(box, scales):
    ens = sample_fast_split(box, scales, 10000, seed=5)
    E = ens.mode_energies()
    mean, se = E.mean(axis=0), E.std(axis=0, ddof=1) / math.sqrt(ens.R)
    target = scales.g1d * scales.n1d / 2
    assert np.all(np.abs(mean - target) < 3.5 * se)
    # flat in mode index: no trend
    slope = stats.linregress(np.arange(box.M), mean / target)
    assert abs(slope.slope) < 3 * slope.stderr + 1e-4
    assert not ens.amplitudes.imag.any()


def test_fast_split_shot_noise_covariance(scales):
    L = 100e-6
    g = SpatialGrid(L, 64)
    b = build_box_basis(L, scales.sound_speed, 30, g, scales.g1d)
    ens = sample_fast_split(b, scales, 10000, seed=8)
    nu = ens.fields().nu
    C = nu.T @ nu / ens.R
    expected = 0.5 * scales.n1d * b.profiles @ b.profiles.T
    scale = 0.5 * scales.n1d / g.dz
    assert np.max(np.abs(C - expected)) / scale < 0.08
    # phase quadrature starts at zero
    assert np.max(np.abs(ens.fields().phi)) == 0.0


def test_squeezed_split_zero_modes(box):
    occ = np.where(np.arange(box.M) % 2 == 0, 3.0, 0.0)
    ens = sample_squeezed_split(box, occ, 500, seed=2)
    assert not ens.amplitudes[:, 1::2].any()
    with pytest.raises(ValueError):
        sample_squeezed_split(box, -occ, 5, 1)


def test_binomial_split_limits():
    pairs = sample_binomial_split(1000, 1.0, 50, seed=1)
    assert np.all(pairs[:, 0] == 1000) and np.all(pairs[:, 1] == 0)
    pairs = sample_binomial_split(1000, 0.5, 20000, seed=2)
    dN = number_imbalance(pairs)
    assert np.var(dN) == pytest.approx(1000 / 4, rel=0.05)
    assert np.all(pairs.sum(axis=1) == 1000)


def test_binomial_split_variance_p03():
    pairs = sample_binomial_split(500, 0.3, 40000, seed=4)
    assert np.var(pairs[:, 0]) == pytest.approx(105.0, rel=0.03)
    assert np.mean(pairs[:, 0]) == pytest.approx(150.0, abs=0.2)
    # binomial excess kurtosis (1 - 6 p q) / (N p q)
    k = stats.kurtosis(pairs[:, 0])
    assert k == pytest.approx((1 - 6 * 0.21) / 105.0, abs=0.05)


def test_binomial_split_validation():
    with pytest.raises(ValueError):
        sample_binomial_split(0, 0.5, 1, 1)
    with pytest.raises(ValueError):
        sample_binomial_split(10, 1.5, 1, 1)


def test_determinism_and_thread_invariance(box):
    a = sample_thermal(box, T, 600, seed=9, threads=1)
    b = sample_thermal(box, T, 600, seed=9, threads=4)
    c = sample_thermal(box, T, 600, seed=10)
    assert np.array_equal(a.amplitudes, b.amplitudes)
    assert not np.array_equal(a.amplitudes, c.amplitudes)
    # realization i does not depend on R
    d = sample_thermal(box, T, 300, seed=9)
    assert np.array_equal(a.amplitudes[:300], d.amplitudes)


def test_split_thermal_gas_sectors(box, scales):
    rel, com = split_thermal_gas(box, scales, 80e-9, 200, seed=4)
    rel2, com2 = split_thermal_gas(box, scales, 20e-9, 200, seed=4)
    assert np.array_equal(rel.amplitudes, rel2.amplitudes)
    assert com.sector == "common"
    parts = combine_sectors(rel, com)
    np.testing.assert_allclose(parts["theta_r"] - parts["theta_l"], rel.fields().phi, atol=1e-12)
    np.testing.assert_allclose(parts["n_r"] - parts["n_l"], 2 * rel.fields().nu, atol=1e-3)


@settings(max_examples=15)
@given(st.floats(5e-9, 500e-9), st.integers(0, 2**32 - 1))
def test_thermal_occupation_scales_with_T(small_box, T, seed):
    n = thermal_occupations(small_box, T)
    assert np.all(n > 0)
    np.testing.assert_allclose(n * small_box.omegas, n[0] * small_box.omegas[0], rtol=1e-12)
    ens = sample_thermal(small_box, T, 4, seed)
    assert np.all(np.isfinite(ens.amplitudes))
