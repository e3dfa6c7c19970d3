"""Initial-condition ensembles for the phonon amplitudes.

Every realization draws from its own random stream derived from
``(seed, realization index)``, so results do not depend on how the work is
split over threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Optional, Sequence

import numpy as np
from scipy.constants import hbar, k as k_B

from .modes import SECTOR_SCALE, ModeBasis, SpatialGrid, fields_from_amplitudes
from .scales import DerivedScales, thermal_coherence_length

SAMPLER_THERMAL = "thermal"
SAMPLER_FAST_SPLIT = "fast_split"
SAMPLER_SQUEEZED = "squeezed_split"

# phase-difference variance per unit length, in units of 1/lambda_T
_SECTOR_DIFFUSION = {"relative": 4.0, "single": 2.0, "common": 1.0}


def realization_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _per_realization(draw: Callable[[np.random.Generator], np.ndarray], R: int, seed: int,
                     threads: Optional[int] = None, chunk: int = 256) -> np.ndarray:
    """Stack ``draw(rng_i)`` for i in range(R); chunks may run on a thread pool."""

    def run(start):
        stop = min(start + chunk, R)
        return np.stack([draw(realization_rng(seed, i)) for i in range(start, stop)])

    starts = range(0, R, chunk)
    if threads is None or threads <= 1 or R <= chunk:
        parts = [run(s) for s in starts]
    else:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, starts))
    return np.concatenate(parts, axis=0)


@dataclass(frozen=True)
class FieldRealization:
    phi: np.ndarray
    nu: Optional[np.ndarray]
    grid: SpatialGrid


@dataclass(frozen=True)
class FieldEnsemble:
    """Stack of field realizations: ``phi`` (and optionally ``nu``) are ``(R, n_z)``."""

    phi: np.ndarray
    grid: SpatialGrid
    nu: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.phi.shape[0]

    def __iter__(self) -> Iterator[FieldRealization]:
        for i in range(len(self)):
            yield FieldRealization(self.phi[i], None if self.nu is None else self.nu[i], self.grid)

    @property
    def R(self) -> int:
        return len(self)


@dataclass(frozen=True)
class PhononEnsemble:
    amplitudes: np.ndarray
    basis: ModeBasis
    sampler: str
    seed: int
    time: float = 0.0
    sector: str = "relative"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.amplitudes.ndim != 2 or self.amplitudes.shape[1] != self.basis.M:
            raise ValueError("amplitudes must have shape (R, M)")

    @property
    def R(self) -> int:
        return self.amplitudes.shape[0]

    def with_amplitudes(self, amplitudes: np.ndarray, **changes) -> "PhononEnsemble":
        return replace(self, amplitudes=amplitudes, **changes)

    def occupations(self) -> np.ndarray:
        return np.mean(np.abs(self.amplitudes) ** 2, axis=0)

    def mode_energies(self) -> np.ndarray:
        """Per-realization mode energies (J), shape ``(R, M)``."""
        return hbar * self.basis.omegas * np.abs(self.amplitudes) ** 2

    def fields(self) -> FieldEnsemble:
        phi, nu = fields_from_amplitudes(self.amplitudes, self.basis, self.sector)
        return FieldEnsemble(phi, self.basis.grid, nu,
                             {"sampler": self.sampler, "seed": self.seed, "time": self.time})

    def describe(self) -> dict:
        return {"sampler": self.sampler, "seed": self.seed, "R": self.R, "time": self.time,
                "sector": self.sector, "basis": self.basis.describe(), **self.meta}


def thermal_occupations(basis: ModeBasis, T: float, vacuum: bool = False) -> np.ndarray:
    n = k_B * T / (hbar * basis.omegas)
    return n + 0.5 if vacuum else n


def shot_noise_occupations(basis: ModeBasis, scales: DerivedScales) -> np.ndarray:
    """Occupations injected by a fast balanced split: energy ``g n / 2`` per mode."""
    return scales.g1d * scales.n1d / (2.0 * hbar * basis.omegas)


def _check_coupling(basis: ModeBasis, scales: DerivedScales):
    if not math.isclose(basis.g1d, scales.g1d, rel_tol=1e-9):
        raise ValueError("basis and scales were built with different g1d")


def sample_thermal(basis: ModeBasis, T: float, R: int, seed: int, *,
                   sector: str = "relative", vacuum: bool = False,
                   threads: Optional[int] = None) -> PhononEnsemble:
    """Classical (Rayleigh-Jeans) thermal state: phase-uniform complex Gaussians
    with ``<|a_j|^2> = k_B T / (hbar omega_j)`` (plus 1/2 when ``vacuum``)."""
    if not T > 0:
        raise ValueError("thermal sampling requires T > 0")
    sigma = np.sqrt(thermal_occupations(basis, T, vacuum) / 2.0)
    M = basis.M

    def draw(rng):
        x = rng.standard_normal((2, M))
        return sigma * (x[0] + 1j * x[1])

    amps = _per_realization(draw, R, seed, threads)
    return PhononEnsemble(amps, basis, SAMPLER_THERMAL, seed, sector=sector,
                          meta={"temperature": T, "vacuum": vacuum})


def sample_squeezed_split(basis: ModeBasis, occupations: Sequence[float], R: int, seed: int, *,
                          threads: Optional[int] = None,
                          sampler: str = SAMPLER_SQUEEZED) -> PhononEnsemble:
    """Density-quadrature-aligned state with ``<|a_j|^2> = n_j`` at t = 0."""
    occ = np.asarray(occupations, dtype=float)
    if occ.shape != (basis.M,):
        raise ValueError(f"need {basis.M} occupations")
    if np.any(occ < 0):
        raise ValueError("occupations must be non-negative")
    sigma = np.sqrt(occ)
    M = basis.M

    def draw(rng):
        return (sigma * rng.standard_normal(M)).astype(complex)

    amps = _per_realization(draw, R, seed, threads)
    return PhononEnsemble(amps, basis, sampler, seed, meta={"occupations": occ.tolist()})


def sample_fast_split(basis: ModeBasis, scales: DerivedScales, R: int, seed: int, *,
                      threads: Optional[int] = None) -> PhononEnsemble:
    """Relative sector right after a fast balanced split.

    Binomial shot noise ``<nu(z) nu(z')> = (n1d/2) delta(z - z')`` projected on
    the modes; the phase quadrature starts at exactly zero.
    """
    _check_coupling(basis, scales)
    ens = sample_squeezed_split(basis, shot_noise_occupations(basis, scales), R, seed,
                                threads=threads, sampler=SAMPLER_FAST_SPLIT)
    return replace(ens, meta={"n1d": scales.n1d})


def sample_binomial_split(N: int, p1: float, R: int, seed: int) -> np.ndarray:
    """``(R, 2)`` integer array of ``(N_l, N_r)`` with ``N_l ~ Binomial(N, p1)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0 <= p1 <= 1:
        raise ValueError("p1 must lie in [0, 1]")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    Nl = rng.binomial(N, p1, size=R)
    return np.stack([Nl, N - Nl], axis=1)


def number_imbalance(pairs: np.ndarray) -> np.ndarray:
    """``Delta N = (N_l - N_r) / 2``."""
    pairs = np.asarray(pairs)
    return 0.5 * (pairs[:, 0] - pairs[:, 1])


def sample_phase_random_walk(grid: SpatialGrid, T: float, n1d: float, m: float, R: int,
                             seed: int, *, sector: str = "relative") -> FieldEnsemble:
    """Thermal phase as a Wiener process along z (no mode truncation).

    Increments over one cell have variance ``D dz`` with ``D = 4/lambda_T``
    for the relative phase (2/lambda_T for a single gas).  Used as an
    independent reference for the mode-based thermal sampler.
    """
    D = _SECTOR_DIFFUSION[sector] / thermal_coherence_length(T, n1d, m)
    n = grid.n

    def draw(rng):
        steps = rng.standard_normal(n - 1) * math.sqrt(D * grid.dz)
        phi = np.concatenate([[0.0], np.cumsum(steps)])
        return phi - phi.mean()

    phi = _per_realization(draw, R, seed)
    return FieldEnsemble(phi, grid, None, {"sampler": "random_walk", "seed": seed, "T": T})


def phase_diffusion_constant(T: float, n1d: float, m: float, sector: str = "relative") -> float:
    """Slope of ``Var(phi(z) - phi(z'))`` in ``|z - z'|`` for a thermal gas."""
    return _SECTOR_DIFFUSION[sector] / thermal_coherence_length(T, n1d, m)


def combine_sectors(relative: PhononEnsemble, common: PhononEnsemble) -> dict:
    """Left/right single-gas phases from independent relative and common ensembles.

    ``theta_r = phi_sy + phi_as / 2``, ``theta_l = phi_sy - phi_as / 2``.
    """
    if relative.R != common.R:
        raise ValueError("sectors need the same number of realizations")
    phi_as = relative.fields().phi
    phi_sy, nu_sy = fields_from_amplitudes(common.amplitudes, common.basis, "common")
    _, nu_as = fields_from_amplitudes(relative.amplitudes, relative.basis, "relative")
    return {
        "theta_r": phi_sy + 0.5 * phi_as,
        "theta_l": phi_sy - 0.5 * phi_as,
        "n_r": 0.5 * nu_sy + nu_as,
        "n_l": 0.5 * nu_sy - nu_as,
    }


def split_thermal_gas(basis: ModeBasis, scales: DerivedScales, T_initial: float, R: int, seed: int, *,
                      threads: Optional[int] = None) -> tuple:
    """Fast balanced split of a single gas that was thermal at ``T_initial``.

    The pre-split phonons all end up in the common sector (thermal at
    ``T_initial``); the relative sector receives only the partition shot
    noise.  Returns ``(relative, common)`` ensembles drawn from independent
    streams derived from ``seed``.
    """
    common_seed = int(np.random.SeedSequence(seed, spawn_key=(2**31 - 1,)).generate_state(1)[0])
    relative = sample_fast_split(basis, scales, R, seed, threads=threads)
    common = sample_thermal(basis, T_initial, R, common_seed, sector="common", threads=threads)
    return relative, common


__all__ = [
    "FieldEnsemble", "FieldRealization", "PhononEnsemble", "SECTOR_SCALE",
    "combine_sectors", "number_imbalance", "phase_diffusion_constant", "realization_rng",
    "sample_binomial_split", "sample_fast_split", "sample_phase_random_walk",
    "sample_squeezed_split", "sample_thermal", "shot_noise_occupations", "split_thermal_gas",
    "thermal_occupations",
]
