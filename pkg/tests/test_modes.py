import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from quasicondensate import (ResolutionError, SpatialGrid, amplitudes_from_fields,
                             build_box_basis, build_harmonic_basis, default_mode_count,
                             fields_from_amplitudes)
from quasicondensate.modes import SECTOR_SCALE


def test_grid_spans_length():
    g = SpatialGrid(100e-6, 64)
    assert g.dz * g.n == pytest.approx(100e-6)
    assert g.z[0] == pytest.approx(-50e-6 + g.dz / 2)
    assert g.z[-1] == pytest.approx(50e-6 - g.dz / 2)
    with pytest.raises(ValueError):
        SpatialGrid(100e-6, 8)


def test_box_frequencies_and_recurrence():
    L, c = 100e-6, 2e-3  # 2 um/ms
    b = build_box_basis(L, c, 20, SpatialGrid(L, 64), 1e-38)
    assert b.omegas[0] == pytest.approx(math.pi * 0.02 * 1e3, rel=1e-14)  # pi * 0.02 rad/ms
    assert b.crossing_time == pytest.approx(50e-3, rel=1e-14)
    np.testing.assert_allclose(b.omegas / b.omegas[0], np.arange(1, 21), rtol=1e-14)


def test_box_orthonormality(box):
    F = box.profiles
    G = F.T @ F * box.grid.dz
    np.testing.assert_allclose(G, np.eye(box.M), atol=1e-10)


def test_box_neumann_boundaries(box):
    # zero slope at the walls: the edge difference is tiny compared with the bulk slope
    F = box.profiles[:, :5]
    d = np.diff(F, axis=0)
    bulk = np.max(np.abs(d), axis=0)
    assert np.all(np.abs(d[0]) < 0.1 * bulk)
    assert np.all(np.abs(d[-1]) < 0.1 * bulk)


def test_box_aliasing_error():
    with pytest.raises(ResolutionError):
        build_box_basis(100e-6, 1e-3, 32, SpatialGrid(100e-6, 64), 1e-38)
    with pytest.raises(ValueError):
        build_box_basis(100e-6, 1e-3, 4, SpatialGrid(90e-6, 64), 1e-38)


def test_harmonic_frequencies():
    w = 2 * math.pi * 5.0
    b = build_harmonic_basis(w, 10, SpatialGrid(100e-6, 512), 1e-38)
    assert b.omegas[0] == pytest.approx(w, rel=1e-15)
    assert b.omegas[1] == pytest.approx(math.sqrt(3) * w, rel=1e-15)
    j = b.indices
    np.testing.assert_allclose(b.omegas, w * np.sqrt(j * (j + 1) / 2), rtol=1e-15)


def test_harmonic_legendre_orthogonality():
    g = SpatialGrid(100e-6, 512)
    b = build_harmonic_basis(2 * math.pi * 5.0, 10, g, 1e-38)
    G = b.profiles.T @ b.profiles * g.dz
    np.testing.assert_allclose(G, np.eye(10), atol=1e-10)
    # low modes are the normalized Legendre polynomials P1 = x, P2 = (3x^2 - 1)/2
    R = 50e-6
    x = g.z / R
    p1 = x * math.sqrt(3 / (2 * R))
    p2 = 0.5 * (3 * x**2 - 1) * math.sqrt(5 / (2 * R))
    assert np.max(np.abs(b.profiles[:, 0] - p1)) / np.max(np.abs(p1)) < 0.01
    assert np.max(np.abs(b.profiles[:, 1] - p2)) / np.max(np.abs(p2)) < 0.01


def test_harmonic_resolution_error():
    with pytest.raises(ResolutionError):
        build_harmonic_basis(2 * math.pi * 5.0, 40, SpatialGrid(100e-6, 256), 1e-38)


def test_default_mode_count(scales):
    M = default_mode_count(scales.chemical_potential, 100e-6, scales.sound_speed)
    assert M == 50
    tiny = default_mode_count(scales.chemical_potential, 1e-6, scales.sound_speed)
    assert tiny >= 1
    w_M = math.pi * scales.sound_speed * tiny / 1e-6
    assert tiny == 1 or w_M < scales.chemical_potential / 1.054571817e-34


def test_zero_amplitudes_give_zero_fields(box):
    phi, nu = fields_from_amplitudes(np.zeros((3, box.M), complex), box)
    assert not phi.any() and not nu.any()


def test_single_real_amplitude(box):
    a = np.zeros(box.M, complex)
    a[0] = 2.0
    phi, nu = fields_from_amplitudes(a, box)
    assert not phi.any()
    np.testing.assert_allclose(nu, 2.0 / box.A[0] * box.profiles[:, 0], rtol=1e-13)


def test_round_trip_projection(box):
    rng = np.random.default_rng(0)
    a = rng.standard_normal((5, box.M)) + 1j * rng.standard_normal((5, box.M))
    for sector in SECTOR_SCALE:
        phi, nu = fields_from_amplitudes(a, box, sector)
        back = amplitudes_from_fields(phi, nu, box, sector)
        np.testing.assert_allclose(back, a, rtol=0, atol=1e-9 * np.abs(a).max())


def test_round_trip_brute_force_integral(small_box):
    # projection by an explicit loop over grid cells (independent of the matrix code)
    rng = np.random.default_rng(1)
    a = rng.standard_normal(small_box.M) + 1j * rng.standard_normal(small_box.M)
    phi, nu = fields_from_amplitudes(a, small_box)
    g = small_box.grid
    for j in range(small_box.M):
        f = np.sqrt(2 / g.length) * np.cos((j + 1) * np.pi * (g.z / g.length + 0.5))
        pj = sum(phi[i] * f[i] * g.dz for i in range(g.n))
        nj = sum(nu[i] * f[i] * g.dz for i in range(g.n))
        rec = small_box.A[j] * nj + 1j * small_box.B[j] * pj
        assert abs(rec - a[j]) < 1e-9 * abs(a[j])


def test_quadrature_normalization(box):
    np.testing.assert_allclose(box.A * box.B, 0.5, rtol=1e-14)


@given(arrays(np.float64, (2, 12), elements=st.floats(-5, 5)))
def test_parseval(small_box, x):
    a = x[0] + 1j * x[1]
    phi, nu = fields_from_amplitudes(a, small_box)
    dz = small_box.grid.dz
    lhs = np.sum(phi**2) * dz + np.sum(nu**2) * dz
    rhs = np.sum((a.imag / small_box.B) ** 2) + np.sum((a.real / small_box.A) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-6, abs=1e-300)
