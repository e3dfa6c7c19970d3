"""Classical thermal sampling of the relative phase of two tunnel-coupled gases.

The discretised Boltzmann weight is ``exp(-S)`` with::

    S = a * sum_i (phi_{i+1} - phi_i)**2 - b * sum_i cos(phi_i)
    a = lambda_T / (8 dz),   b = lambda_T dz / (4 xi_J**2)

which is ``E/k_B T`` for ``E = int [ (hbar^2 n/4m)(d phi)^2 - 2 hbar J n cos phi ] dz``.
The density sector is Gaussian and decoupled, so it is not sampled.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ensembles import FieldEnsemble
from .modes import SpatialGrid
from .scales import thermal_coherence_length
from scipy.constants import hbar

TARGET_ACCEPTANCE = 0.4
BLOCK_SIZE = 64


class SamplerConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChainCouplings:
    a: float
    b: float

    @classmethod
    def from_physics(cls, grid: SpatialGrid, T: float, n1d: float, J: float, m: float):
        lam_T = thermal_coherence_length(T, n1d, m)
        if J > 0:
            xi_J = math.sqrt(hbar / (4.0 * m * J))
            b = lam_T * grid.dz / (4.0 * xi_J**2)
        else:
            b = 0.0
        return cls(lam_T / (8.0 * grid.dz), b)


def action(phi: np.ndarray, c: ChainCouplings) -> np.ndarray:
    """Dimensionless action ``E / k_B T`` per chain (last axis = sites)."""
    return c.a * np.sum(np.diff(phi, axis=-1) ** 2, axis=-1) - c.b * np.sum(np.cos(phi), axis=-1)


def _local_delta(phi, new, sites, c: ChainCouplings):
    """Change of action when ``phi[:, sites]`` is replaced by ``new``."""
    n = phi.shape[1]
    old = phi[:, sites]
    d = np.zeros_like(old)
    left = sites - 1
    has_left = left >= 0
    if np.any(has_left):
        pl = phi[:, left[has_left]]
        d[:, has_left] += (new[:, has_left] - pl) ** 2 - (old[:, has_left] - pl) ** 2
    right = sites + 1
    has_right = right < n
    if np.any(has_right):
        pr = phi[:, right[has_right]]
        d[:, has_right] += (new[:, has_right] - pr) ** 2 - (old[:, has_right] - pr) ** 2
    return c.a * d - c.b * (np.cos(new) - np.cos(old))


def _kink_move(phi, c, rng):
    """Insert or remove one sine-Gordon kink per chain.

    Adds ``sign * 4 arctan(exp((i - i0)/w))`` with ``w = sqrt(a/b)`` lattice
    units (the continuum kink width) and uniform ``i0``; the proposal is
    symmetric because flipping ``sign`` at the same ``i0`` undoes it.
    """
    n_chains, n = phi.shape
    w = math.sqrt(c.a / c.b)
    i0 = rng.uniform(-0.5, n - 0.5, size=(n_chains, 1))
    sign = np.where(rng.random((n_chains, 1)) < 0.5, -1.0, 1.0)
    new = phi + sign * 4.0 * np.arctan(np.exp((np.arange(n) - i0) / w))
    dS = action(new, c) - action(phi, c)
    acc = np.log(rng.random(n_chains)) < -dS
    phi[acc] = new[acc]
    return np.count_nonzero(acc)


def _sweep(phi, step, c, rng):
    """One checkerboard Metropolis sweep in place; returns the acceptance rate.

    With a cosine term present each sweep ends with a kink move per chain;
    local updates alone change the winding sector far too slowly.
    """
    n = phi.shape[1]
    accepted = 0
    for parity in (0, 1):
        sites = np.arange(parity, n, 2)
        new = phi[:, sites] + step * rng.standard_normal((phi.shape[0], sites.size))
        dS = _local_delta(phi, new, sites, c)
        acc = np.log(rng.random(dS.shape)) < -dS
        phi[:, sites] = np.where(acc, new, phi[:, sites])
        accepted += np.count_nonzero(acc)
    if c.b > 0:
        _kink_move(phi, c, rng)
    return accepted / phi.size


def integrated_autocorr_time(x: np.ndarray, c: float = 5.0) -> float:
    """Integrated autocorrelation time (in samples) with Sokal's windowing.

    ``x`` has shape ``(n_samples,)`` or ``(n_samples, n_chains)``; chains are
    averaged at the level of the autocorrelation function.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    x = x - x.mean(axis=0)
    f = np.fft.rfft(x, n=2 * n, axis=0)
    acf = np.fft.irfft(f * np.conj(f), axis=0)[:n].mean(axis=1)
    if acf[0] <= 0:
        return 1.0
    rho = acf / acf[0]
    tau = 1.0
    for w in range(1, n):
        tau = 1.0 + 2.0 * np.sum(rho[1:w + 1])
        if w >= c * tau:
            break
    return max(float(tau), 1.0)


@dataclass
class ChainStats:
    step: float
    acceptance: float
    tau: float
    burn_in: int
    sweeps_used: int


def run_chains(c: ChainCouplings, n_sites: int, n_chains: int, rng: np.random.Generator,
               sweeps: int, thin: int = 0) -> tuple:
    """Adapt, measure the autocorrelation time, burn in, and return final states.

    With ``thin > 0`` also returns snapshots every ``thin`` sweeps after burn-in
    (used by the detailed-balance check).
    """
    phi = np.zeros((n_chains, n_sites))
    step = 1.0 / math.sqrt(2.0 * c.a + c.b + 1e-12)
    n_adapt = max(50, sweeps // 10)
    acc_hist = []
    for s in range(n_adapt):
        acc = _sweep(phi, step, c, rng)
        acc_hist.append(acc)
        if (s + 1) % 10 == 0:
            rate = np.mean(acc_hist[-10:])
            step *= math.exp(rate - TARGET_ACCEPTANCE)
    n_meas = max(100, sweeps // 5)
    energies = np.empty((n_meas, n_chains))
    winding = np.empty((n_meas, n_chains))
    accs = []
    for s in range(n_meas):
        accs.append(_sweep(phi, step, c, rng))
        energies[s] = action(phi, c)
        winding[s] = phi[:, -1] - phi[:, 0]
    # the end-to-end phase difference tracks the kink sector, the slowest observable
    tau = max(integrated_autocorr_time(energies), integrated_autocorr_time(winding))
    burn = int(math.ceil(10 * tau))
    used = n_adapt + n_meas + burn
    if used > sweeps:
        raise SamplerConvergenceError(
            f"autocorrelation time {tau:.1f} sweeps needs burn-in {burn}; "
            f"budget of {sweeps} sweeps exceeded")
    for _ in range(burn):
        accs.append(_sweep(phi, step, c, rng))
    snaps = []
    if thin:
        for s in range(sweeps - used):
            accs.append(_sweep(phi, step, c, rng))
            if (s + 1) % thin == 0:
                snaps.append(phi.copy())
    stats = ChainStats(step, float(np.mean(accs)), tau, burn, used)
    return phi, stats, snaps


def sample_sine_gordon(grid: SpatialGrid, T: float, n1d: float, J: float, m: float, R: int,
                       seed: int, sweeps: int = 4000, *, threads: Optional[int] = None,
                       method: Optional[str] = None) -> FieldEnsemble:
    """Thermal relative-phase fields of the classical sine-Gordon model.

    Each realization is the final state of an independent Metropolis chain.
    Chains are grouped in blocks of ``BLOCK_SIZE`` with one random stream per
    block derived from ``(seed, block)``.  For ``J == 0`` the measure is
    Gaussian with independent increments and is sampled exactly unless
    ``method="metropolis"``.
    """
    if J < 0:
        raise ValueError("J must be >= 0")
    if not T > 0:
        raise ValueError("T must be > 0")
    if J > 0:
        xi_J = math.sqrt(hbar / (4.0 * m * J))
        if grid.dz >= xi_J / 4:
            raise ValueError(f"grid spacing {grid.dz:.3g} m does not resolve xi_J = {xi_J:.3g} m")
    c = ChainCouplings.from_physics(grid, T, n1d, J, m)
    if method is None:
        method = "exact" if J == 0 else "metropolis"
    if method == "exact":
        if J != 0:
            raise ValueError("exact sampling only exists for J = 0")
        from .ensembles import sample_phase_random_walk
        ens = sample_phase_random_walk(grid, T, n1d, m, R, seed)
        return FieldEnsemble(ens.phi, grid, None, {"sampler": "sine_gordon_exact", "seed": seed})

    n_blocks = -(-R // BLOCK_SIZE)

    def block(b):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(b,))))
        size = min(BLOCK_SIZE, R - b * BLOCK_SIZE)
        phi, stats, _ = run_chains(c, grid.n, size, rng, sweeps)
        return phi, stats

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(block, range(n_blocks)))
    else:
        results = [block(b) for b in range(n_blocks)]
    phi = np.concatenate([r[0] for r in results], axis=0)
    meta = {
        "sampler": "sine_gordon_metropolis", "seed": seed, "sweeps": sweeps,
        "a": c.a, "b": c.b,
        "tau_max": max(r[1].tau for r in results),
        "acceptance": float(np.mean([r[1].acceptance for r in results])),
    }
    return FieldEnsemble(phi, grid, None, meta)
