import json
import math

import numpy as np
import pytest

import quasicondensate.fitting as fitting
from quasicondensate import (SpatialGrid, build_box_basis, build_calibration, derive_scales,
                             fit_gge, fit_teff_from_decay, fit_temperature_ripples, rb87,
                             ripple_curve, ripple_forward_model, sample_thermal,
                             stationary_correlation)
from quasicondensate.fitting import (CACHE_ENV, CalibrationTable, fit_decay_length, gge_design,
                                     GgeOccupations)
from quasicondensate.observables import CorrelationResult
from quasicondensate.ensembles import shot_noise_occupations

M_RB = 1.443e-25


def _exact_gge_corr(basis, idx, occ, times):
    # Gaussian phases: C = exp(-Var/2), Var linear in the occupations
    A, (a, b) = gge_design(basis, idx, times)
    var = A @ occ
    n = len(idx)
    out = np.ones((len(times), n, n))
    for k in range(len(times)):
        v = var[k * len(a):(k + 1) * len(a)]
        out[k][a, b] = np.exp(-0.5 * v)
        out[k][b, a] = out[k][a, b]
    return out


@pytest.mark.parametrize("profile", ["sawtooth", "flat"])
def test_gge_recovers_exact_occupations(small_box, scales, profile):
    ref = shot_noise_occupations(small_box, scales)
    factors = np.where(np.arange(small_box.M) % 2 == 0, 1.0, 0.25) if profile == "sawtooth" else np.ones(small_box.M)
    occ = ref * factors
    idx = np.arange(1, 64, 2)
    times = np.linspace(0.05, 0.95, 10) * small_box.crossing_time
    C = _exact_gge_corr(small_box, idx, occ, times)
    fit = fit_gge(C, small_box, idx, times=times, stderr=np.full_like(C, 1e-6), scales=scales,
                  reg=0.0, min_corr=1e-6)
    np.testing.assert_allclose(fit.occupations, occ, rtol=1e-6)
    assert fit.residual_rms < 1e-6


def test_gge_dephased_design_is_time_average(small_box):
    idx = np.arange(0, 64, 4)
    A0, _ = gge_design(small_box, idx)
    ts = np.linspace(0, 2 * small_box.crossing_time, 4001)[:-1]
    At, _ = gge_design(small_box, idx, ts)
    avg = At.reshape(len(ts), -1, small_box.M).mean(axis=0)
    np.testing.assert_allclose(avg, A0, rtol=1e-9, atol=1e-12 * A0.max())


def test_gge_truncation_warning(small_box, scales):
    idx = np.arange(0, 64, 8)
    C = np.full((8, 8), 0.9)
    np.fill_diagonal(C, 1)
    with pytest.warns(UserWarning):
        fit = fit_gge(C, small_box, idx, scales=scales)
    assert fit.warnings and fit.occupations.size < small_box.M


def test_gge_csv(tmp_path):
    occ = GgeOccupations(np.array([1.0, 2.0]), np.array([0.1, 0.2]), np.array([1.0, 1.0]), np.array([1, 2]))
    occ.to_csv(tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "j,n_j,stderr,shot_noise_ref" and lines[2].startswith("2,2.0")
    assert occ.squeezed().tolist() == [False, False]


def test_decay_fit_of_exact_exponential():
    z = np.linspace(0, 30e-6, 61)
    fit = fit_decay_length(z, 0.97 * np.exp(-z / 7e-6))
    assert fit.length == pytest.approx(7e-6, rel=1e-10)
    assert fit.residual_rms < 1e-12 and fit.decays_enough


@pytest.fixture(scope="module")
def calib_basis(scales):
    g = SpatialGrid(100e-6, 128)
    return build_box_basis(100e-6, scales.sound_speed, 40, g, scales.g1d)


def test_calibration_cache_roundtrip(calib_basis, tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path))
    t1 = build_calibration(calib_basis, 20e-9, 80e-9, R=100, n_temps=3)
    files = list(tmp_path.glob("calibration-*.json"))
    assert len(files) == 1 and t1.key in files[0].name
    assert np.all(np.diff(t1.lengths) < 0)

    def boom(*a, **k):
        raise AssertionError("cache not used")

    monkeypatch.setattr(fitting, "sample_thermal", boom)
    t2 = build_calibration(calib_basis, 20e-9, 80e-9, R=100, n_temps=3)
    np.testing.assert_array_equal(t1.lengths, t2.lengths)
    back = CalibrationTable.from_json(t1.to_json())
    assert back.temperature_for(back.length_for(40e-9)) == pytest.approx(40e-9, rel=1e-9)


def test_calibration_tracks_coherence_length(calib_basis, scales):
    # thermal decay length is lambda_T / 2 for the relative phase (up to mode cutoff)
    t = build_calibration(calib_basis, 30e-9, 120e-9, R=400, n_temps=3, seed=3)
    lam = np.array([2 * (1.054571817e-34) ** 2 * scales.n1d / (M_RB * 1.380649e-23 * T)
                    for T in t.temperatures])
    np.testing.assert_allclose(t.lengths, lam / 2, rtol=0.12)


def test_teff_flags(calib_basis):
    table = CalibrationTable(np.array([1e-8, 1e-7]), np.array([2e-5, 2e-6]))
    z = np.arange(0, 26) * 1e-6
    flat = CorrelationResult("stationary", np.full(26, 0.99), np.full(26, 1e-3), 10, z)
    rep = fit_teff_from_decay(flat, table)
    assert not rep.reliable
    assert any("1/e" in f for f in rep.flags)
    ok = CorrelationResult("stationary", np.exp(-z / 5e-6), np.full(26, 1e-3), 10, z)
    rep = fit_teff_from_decay(ok, table)
    assert rep.reliable and rep.ci[0] <= rep.estimate <= rep.ci[1]
    assert json.loads(rep.to_json())["units"] == "K"


@pytest.fixture(scope="module")
def ripple_setup():
    L = 200e-6
    g = SpatialGrid(L, 512)
    s = derive_scales(rb87(60e6, length=L))
    return build_box_basis(L, s.sound_speed, 100, g, s.g1d)


def test_ripple_flat_objective_for_flat_phase(ripple_setup):
    b = ripple_setup
    obs = ripple_curve(np.zeros((20, b.grid.n)), b.grid, 60e6, 16e-3, M_RB)
    fwd = ripple_forward_model(b, 60e6, M_RB, 16e-3, 40, seed=1)
    rep = fit_temperature_ripples(obs, fwd, [50e-9, 100e-9, 200e-9])
    assert any("flat objective" in f for f in rep.flags) and not rep.reliable


def test_ripple_fit_tracks_doubling(ripple_setup):
    b = ripple_setup
    grid = np.geomspace(40e-9, 320e-9, 10)
    fwd = ripple_forward_model(b, 60e6, M_RB, 16e-3, 300, seed=100)
    refs = [fwd(T) for T in grid]
    est = []
    for k, T in enumerate((80e-9, 160e-9)):
        phi = sample_thermal(b, T, 150, seed=7 + k, sector="single").fields().phi
        obs = ripple_curve(phi, b.grid, 60e6, 16e-3, M_RB)
        est.append(fit_temperature_ripples(obs, refs, grid).estimate)
    assert est[1] / est[0] == pytest.approx(2.0, rel=0.15)


def test_ripple_fit_is_deterministic(ripple_setup):
    b = ripple_setup
    phi = sample_thermal(b, 100e-9, 40, seed=3, sector="single").fields().phi
    obs = ripple_curve(phi, b.grid, 60e6, 16e-3, M_RB)
    grid = [50e-9, 100e-9, 200e-9]
    r1 = fit_temperature_ripples(obs, ripple_forward_model(b, 60e6, M_RB, 16e-3, 40, seed=5), grid)
    r2 = fit_temperature_ripples(obs, ripple_forward_model(b, 60e6, M_RB, 16e-3, 40, seed=5), grid)
    assert r1.to_dict() == r2.to_dict()
    with pytest.raises(ValueError):
        fit_temperature_ripples(obs, ripple_forward_model(b, 60e6, M_RB, 16e-3, 5, seed=5), grid[::-1])
