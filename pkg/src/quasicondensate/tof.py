"""Time-of-flight expansion of a single phase-fluctuating gas (density ripples)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.constants import hbar
from scipy.ndimage import gaussian_filter1d

from .modes import SpatialGrid

DEFAULT_RESOLUTION = 3e-6
DEFAULT_TOF = 16e-3
PAD_WIDTHS = 4.0


class PaddingError(ValueError):
    """Guard band too small for the requested expansion time."""


def spreading_length(t_tof: float, m: float) -> float:
    return math.sqrt(hbar * t_tof / m)


@dataclass(frozen=True)
class TofProfile:
    t_tof: float
    z: np.ndarray
    density: np.ndarray
    bulk: np.ndarray          # boolean mask of analysis region
    source_index: Optional[int] = None


def padded_grid(cloud: SpatialGrid, t_tof: float, m: float, factor: float = 1.5) -> tuple:
    """Extend the cloud grid by at least ``factor * PAD_WIDTHS`` spreading lengths per side.

    Returns ``(padded_grid, offset)``; the cloud occupies ``[offset, offset + cloud.n)``.
    """
    need = factor * PAD_WIDTHS * spreading_length(t_tof, m)
    n_pad = int(math.ceil(need / cloud.dz))
    n_tot = cloud.n + 2 * n_pad
    # FFT-friendly size
    n_fft = 1 << int(math.ceil(math.log2(n_tot)))
    n_pad = (n_fft - cloud.n) // 2
    return SpatialGrid(n_fft * cloud.dz, n_fft), n_pad


def propagate(psi: np.ndarray, dz: float, t: float, m: float) -> np.ndarray:
    """Free-particle propagation by multiplying with ``exp(-i hbar k^2 t / 2m)`` in k-space."""
    k = 2 * np.pi * np.fft.fftfreq(psi.shape[-1], d=dz)
    return np.fft.ifft(np.fft.fft(psi, axis=-1) * np.exp(-0.5j * hbar * k**2 * t / m), axis=-1)


def _edge_density(z: np.ndarray, L: float, width: float) -> np.ndarray:
    """Box density profile with tanh edges centred on ``+-L/2``; integrates to ``L``."""
    return 0.5 * (np.tanh((z + 0.5 * L) / width) - np.tanh((z - 0.5 * L) / width))


def expand_tof(phi: np.ndarray, cloud: SpatialGrid, n1d: float, t_tof: float, m: float, *,
               pad_grid: Optional[tuple] = None, edge_width: Optional[float] = None) -> list:
    """Density after free expansion for each phase profile in ``phi`` (R, n_z).

    The initial field is ``sqrt(n1d) exp(i phi)`` with tanh edges of width
    ``edge_width`` at the cloud boundary; the phase is continued with its edge
    values into the guard bands, where the density vanishes.  The default edge
    width is the spreading length ``sqrt(hbar t/m)``: sharper edges send
    Fresnel fringes into the bulk.
    """
    if not t_tof > 0:
        raise ValueError("t_tof must be > 0")
    if edge_width is None:
        edge_width = spreading_length(t_tof, m)
    phi = np.atleast_2d(phi)
    grid, off = pad_grid if pad_grid is not None else padded_grid(cloud, t_tof, m)
    pad_len = off * cloud.dz
    if pad_len < PAD_WIDTHS * spreading_length(t_tof, m):
        raise PaddingError(
            f"guard band {pad_len:.3g} m < {PAD_WIDTHS} x sqrt(hbar t/m) = "
            f"{PAD_WIDTHS * spreading_length(t_tof, m):.3g} m")
    z = grid.z
    amp = np.sqrt(n1d * _edge_density(z, cloud.length, edge_width))
    phi_ext = np.pad(phi, ((0, 0), (off, grid.n - cloud.n - off)), mode="edge")
    psi = amp * np.exp(1j * phi_ext)
    rho = np.abs(propagate(psi, grid.dz, t_tof, m)) ** 2
    margin = PAD_WIDTHS * spreading_length(t_tof, m) + 3 * edge_width
    zc = cloud.z
    bulk = (z >= zc[0] + margin) & (z <= zc[-1] - margin)
    return [TofProfile(t_tof, z, rho[i], bulk, i) for i in range(rho.shape[0])]


def blur(profiles: Sequence[TofProfile], sigma: float = DEFAULT_RESOLUTION) -> list:
    """Gaussian imaging-resolution kernel of rms width ``sigma`` applied to each density."""
    if sigma <= 0:
        return list(profiles)
    out = []
    for p in profiles:
        dz = p.z[1] - p.z[0]
        out.append(TofProfile(p.t_tof, p.z, gaussian_filter1d(p.density, sigma / dz, mode="constant"),
                              p.bulk, p.source_index))
    return out


@dataclass(frozen=True)
class RippleCorrelation:
    x: np.ndarray
    g2: np.ndarray
    stderr: np.ndarray
    R: int
    variance: float           # <(rho - <rho>)^2> / <rho>^2 in the bulk
    per_realization: Optional[np.ndarray] = None

    def covariance(self, shrinkage: float = 0.1) -> np.ndarray:
        """Covariance of the mean curve from per-realization curves, shrunk towards its diagonal."""
        if self.per_realization is None or self.R < 2:
            return np.diag(self.stderr**2)
        S = np.cov(self.per_realization, rowvar=False) / self.R
        return (1.0 - shrinkage) * S + shrinkage * np.diag(np.diag(S))


def ripple_correlation(profiles: Sequence[TofProfile], max_shift: float = 20e-6) -> RippleCorrelation:
    """``g2(x) = <rho(z) rho(z+x)> / <rho>^2`` averaged over the bulk and realizations."""
    rho = np.stack([p.density for p in profiles])
    bulk = profiles[0].bulk
    z = profiles[0].z
    dz = z[1] - z[0]
    idx = np.flatnonzero(bulk)
    n_shift = int(round(max_shift / dz))
    if idx.size <= n_shift + 1:
        raise ValueError("bulk region shorter than the correlation range")
    mean = rho[:, idx].mean()
    per = np.empty((rho.shape[0], n_shift + 1))
    # pairs (z, z+x) with z in the bulk window shrunk by the shift range
    base = idx[: idx.size - n_shift]
    for s in range(n_shift + 1):
        per[:, s] = np.mean(rho[:, base] * rho[:, base + s], axis=1) / mean**2
    R = rho.shape[0]
    err = per.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(n_shift + 1)
    var = float(np.mean((rho[:, idx] - mean) ** 2) / mean**2)
    return RippleCorrelation(np.arange(n_shift + 1) * dz, per.mean(axis=0), err, R, var, per)


def gaussian_packet_width(sigma0: float, t: float, m: float) -> float:
    """rms width of a free Gaussian packet (density) after time ``t``."""
    return sigma0 * math.sqrt(1.0 + (hbar * t / (2 * m * sigma0**2)) ** 2)


def ripple_curve(phi: np.ndarray, cloud: SpatialGrid, n1d: float, t_tof: float, m: float, *,
                 sigma_res: float = DEFAULT_RESOLUTION, max_shift: float = 20e-6,
                 edge_width: Optional[float] = None) -> RippleCorrelation:
    """Expand, blur and correlate a stack of in-situ phase profiles."""
    profiles = expand_tof(phi, cloud, n1d, t_tof, m, edge_width=edge_width)
    return ripple_correlation(blur(profiles, sigma_res), max_shift)
