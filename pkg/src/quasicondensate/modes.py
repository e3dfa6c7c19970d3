"""Phonon eigenmodes for box and harmonic longitudinal confinement.

Complex mode amplitudes are normalised so that ``|a_j|**2`` is the classical
occupation, i.e. the mode energy is ``hbar * omega_j * |a_j|**2``.  For the
relative sector of two tunnel-decoupled gases, with density quadrature
``nu_j`` and phase quadrature ``phi_j``::

    a_j = A_j * nu_j + 1j * B_j * phi_j
    A_j = sqrt(g1d / (hbar omega_j)),   B_j = sqrt(hbar omega_j / (4 g1d))

which makes ``g1d nu_j**2 + (hbar**2 n1d / 4m) k_j**2 phi_j**2`` equal to
``hbar omega_j |a_j|**2`` with ``omega_j = c k_j``.  The free evolution is then
``a_j(t) = a_j(0) exp(-1j omega_j t)``.  The single-gas and common sectors use
the same amplitudes with rescaled quadratures (see ``SECTOR_SCALE``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial import legendre
from scipy.constants import hbar

DEFAULT_MAX_MODES = 50

# (density factor, phase factor) relative to the relative-sector quadratures
SECTOR_SCALE = {
    "relative": (1.0, 1.0),
    "single": (math.sqrt(2.0), 1.0 / math.sqrt(2.0)),
    "common": (2.0, 0.5),
}


class ResolutionError(ValueError):
    """Requested modes cannot be represented on the grid."""


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform cell-centred grid on ``[-length/2, length/2]``."""

    length: float
    n: int

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("grid needs at least 16 points")
        if not self.length > 0:
            raise ValueError("grid length must be positive")

    @property
    def dz(self) -> float:
        return self.length / self.n

    @property
    def z(self) -> np.ndarray:
        return -0.5 * self.length + (np.arange(self.n) + 0.5) * self.dz

    def central(self, fraction: float = 0.5) -> np.ndarray:
        """Indices of points within the central ``fraction`` of the system."""
        return np.flatnonzero(np.abs(self.z) <= 0.5 * fraction * self.length + 1e-12 * self.length)


@dataclass(frozen=True)
class Mode:
    index: int
    omega: float
    profile: np.ndarray
    density_norm: float   # A_j
    phase_norm: float     # B_j


@dataclass(frozen=True)
class ModeBasis:
    geometry: str
    modes: tuple
    grid: SpatialGrid
    sound_speed: float
    g1d: float
    length: float

    def __post_init__(self):
        if len(self.modes) < 1:
            raise ValueError("basis needs at least one mode")
        if np.any(np.diff(self.omegas) <= 0):
            raise ValueError("mode frequencies must increase strictly")

    @property
    def M(self) -> int:
        return len(self.modes)

    @property
    def omegas(self) -> np.ndarray:
        return np.array([m.omega for m in self.modes])

    @property
    def indices(self) -> np.ndarray:
        return np.array([m.index for m in self.modes])

    @property
    def profiles(self) -> np.ndarray:
        """``(n_z, M)`` matrix of mode profiles."""
        return np.stack([m.profile for m in self.modes], axis=1)

    @property
    def A(self) -> np.ndarray:
        return np.array([m.density_norm for m in self.modes])

    @property
    def B(self) -> np.ndarray:
        return np.array([m.phase_norm for m in self.modes])

    @property
    def crossing_time(self) -> float:
        return self.length / self.sound_speed

    def describe(self) -> dict:
        return {
            "geometry": self.geometry,
            "M": self.M,
            "length": self.length,
            "n_z": self.grid.n,
            "sound_speed": self.sound_speed,
            "g1d": self.g1d,
            "omegas": self.omegas.tolist(),
        }


def _quadrature_norms(omega: float, g1d: float) -> tuple:
    return math.sqrt(g1d / (hbar * omega)), math.sqrt(hbar * omega / (4.0 * g1d))


def default_mode_count(mu: float, length: float, c: float) -> int:
    """Cap at ``DEFAULT_MAX_MODES`` or the last box mode below ``mu/hbar``."""
    j_mu = int(math.floor(mu * length / (hbar * math.pi * c)))
    if j_mu * hbar * math.pi * c / length >= mu:
        j_mu -= 1
    return max(1, min(DEFAULT_MAX_MODES, j_mu))


def build_box_basis(L: float, c: float, M: int, grid: SpatialGrid, g1d: float) -> ModeBasis:
    """Neumann cosine modes ``sqrt(2/L) cos(j pi (z/L + 1/2))`` with ``omega_j = pi c j / L``."""
    if not math.isclose(grid.length, L, rel_tol=1e-12):
        raise ValueError(f"grid length {grid.length:g} does not span the box length {L:g}")
    if M >= grid.n / 2:
        raise ResolutionError(f"M = {M} aliases on a grid of {grid.n} points (need M < n_z/2)")
    z = grid.z
    modes = []
    for j in range(1, M + 1):
        omega = math.pi * c * j / L
        prof = math.sqrt(2.0 / L) * np.cos(j * math.pi * (z / L + 0.5))
        A, B = _quadrature_norms(omega, g1d)
        modes.append(Mode(j, omega, prof, A, B))
    return ModeBasis("box", tuple(modes), grid, c, g1d, L)


def build_harmonic_basis(omega_par: float, M: int, grid: SpatialGrid, g1d: float,
                         c: Optional[float] = None, tol: float = 0.05) -> ModeBasis:
    """Legendre modes on ``[-R, R]`` with ``omega_j = omega_par sqrt(j(j+1)/2)``.

    The sampled Legendre polynomials are orthonormalised on the grid (the
    discrete analogue of Legendre polynomials).  If that changes any profile
    by more than ``tol`` of its peak value the grid cannot resolve mode ``M``.
    """
    if M >= grid.n / 2:
        raise ResolutionError(f"M = {M} too large for a grid of {grid.n} points")
    R = 0.5 * grid.length
    x = grid.z / R
    raw = np.stack([legendre.legval(x, np.eye(M + 1)[j]) for j in range(M + 1)], axis=1)
    analytic = raw * np.sqrt((2 * np.arange(M + 1) + 1) / (2.0 * R))
    q, r = np.linalg.qr(raw * math.sqrt(grid.dz))
    disc = q / math.sqrt(grid.dz) * np.sign(np.diag(r))
    dev = np.max(np.abs(disc - analytic), axis=0) / np.max(np.abs(analytic), axis=0)
    if np.any(dev[1:] > tol):
        bad = int(np.argmax(dev[1:] > tol)) + 1
        raise ResolutionError(f"grid of {grid.n} points cannot resolve Legendre mode {bad}")
    if c is None:
        # Thomas-Fermi relation omega_par = sqrt(2) c / R
        c = omega_par * R / math.sqrt(2.0)
    modes = []
    for j in range(1, M + 1):
        omega = omega_par * math.sqrt(j * (j + 1) / 2.0)
        A, B = _quadrature_norms(omega, g1d)
        modes.append(Mode(j, omega, disc[:, j].copy(), A, B))
    return ModeBasis("harmonic", tuple(modes), grid, c, g1d, grid.length)


def fields_from_amplitudes(amplitudes: np.ndarray, basis: ModeBasis,
                           sector: str = "relative") -> tuple:
    """Real-space ``(phi, nu)`` for amplitudes of shape ``(..., M)``.

    Returns arrays of shape ``(..., n_z)``: phase in rad (unwrapped) and
    density fluctuation in atoms/m.
    """
    amplitudes = np.asarray(amplitudes)
    if amplitudes.shape[-1] != basis.M:
        raise ValueError(f"expected {basis.M} amplitudes per realization, got {amplitudes.shape[-1]}")
    dscale, pscale = SECTOR_SCALE[sector]
    F = basis.profiles
    phi = (amplitudes.imag / basis.B) @ F.T * pscale
    nu = (amplitudes.real / basis.A) @ F.T * dscale
    return phi, nu


def amplitudes_from_fields(phi: np.ndarray, nu: np.ndarray, basis: ModeBasis,
                           sector: str = "relative") -> np.ndarray:
    """Project fields back onto the basis (inverse of ``fields_from_amplitudes``)."""
    dscale, pscale = SECTOR_SCALE[sector]
    F = basis.profiles * basis.grid.dz
    phi_j = np.asarray(phi) @ F / pscale
    nu_j = np.asarray(nu) @ F / dscale
    return basis.A * nu_j + 1j * basis.B * phi_j
