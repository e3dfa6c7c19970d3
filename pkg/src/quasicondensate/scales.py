"""Physical inputs of a 1D quasicondensate and every scale derived from them.

All quantities are SI. Frequencies are angular (rad/s).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

from scipy.constants import hbar, k as k_B

# Olshanii confinement correction coefficient
CIR_COEFF = 1.4603

QUASICONDENSATE_GAMMA = 0.1


class ConfinementResonanceError(ValueError):
    """The 1D coupling formula has a non-positive denominator."""


@dataclass(frozen=True)
class Box:
    length: float


@dataclass(frozen=True)
class Harmonic:
    omega_par: float


Geometry = Union[Box, Harmonic]


@dataclass(frozen=True)
class GasParameters:
    """Experimental inputs for one (per-well) 1D gas.

    ``atom_number`` defaults to ``n1d * L`` for a box. For a box geometry a
    mismatch above 1% between ``atom_number`` and ``n1d * L`` is rejected.
    """

    atom_mass: float
    scattering_length: float
    omega_perp: float
    geometry: Geometry
    n1d: float
    temperature: float = 0.0
    tunnel_coupling: float = 0.0
    atom_number: Optional[float] = None

    def __post_init__(self):
        for name in ("atom_mass", "scattering_length", "omega_perp", "n1d"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.temperature < 0 or self.tunnel_coupling < 0:
            raise ValueError("temperature and tunnel_coupling must be >= 0")
        if isinstance(self.geometry, Box):
            if not self.geometry.length > 0:
                raise ValueError("box length must be strictly positive")
            expected = self.n1d * self.geometry.length
            if self.atom_number is None:
                object.__setattr__(self, "atom_number", expected)
            elif abs(self.atom_number - expected) > 0.01 * expected:
                raise ValueError(
                    f"atom_number {self.atom_number:g} inconsistent with "
                    f"n1d*L = {expected:g} (tolerance 1%)")
        elif isinstance(self.geometry, Harmonic):
            if not self.geometry.omega_par > 0:
                raise ValueError("omega_par must be strictly positive")
        else:
            raise TypeError("geometry must be Box or Harmonic")
        if self.atom_number is not None and not self.atom_number > 0:
            raise ValueError("atom_number must be strictly positive")


@dataclass(frozen=True)
class DerivedScales:
    g1d: float
    a_perp: float
    chemical_potential: float
    sound_speed: float
    luttinger_K: float
    gamma: float
    lambda_T: float
    xi_n: float
    xi_J: float
    q_ratio: float
    T_eff: float
    lambda_eff: float
    # explicit flags instead of relying on inf arithmetic downstream
    uncoupled: bool = field(default=False)
    zero_temperature: bool = field(default=False)
    n1d: float = 0.0
    atom_mass: float = 0.0


def transverse_length(omega_perp: float, m: float) -> float:
    return math.sqrt(hbar / (m * omega_perp))


def compute_g1d(a_s: float, omega_perp: float, m: float) -> float:
    """1D coupling constant with the confinement-induced correction.

    Raises
    ------
    ConfinementResonanceError
        If ``1 - 1.4603 a_s / a_perp <= 0``.
    """
    a_perp = transverse_length(omega_perp, m)
    denom = 1.0 - CIR_COEFF * a_s / a_perp
    if denom <= 0:
        raise ConfinementResonanceError(
            f"a_s/a_perp = {a_s / a_perp:.4g} reaches the confinement-induced "
            "resonance; outside the modeled regime")
    return 2.0 * hbar * a_s * omega_perp / denom


def compute_g1d_weak(a_s: float, omega_perp: float) -> float:
    """Weak-interaction limit ``2 hbar a_s omega_perp``."""
    return 2.0 * hbar * a_s * omega_perp


def thermal_coherence_length(T: float, n1d: float, m: float) -> float:
    if T == 0:
        return math.inf
    return 2.0 * hbar**2 * n1d / (m * k_B * T)


def derive_scales(params: GasParameters) -> DerivedScales:
    m = params.atom_mass
    n = params.n1d
    g = compute_g1d(params.scattering_length, params.omega_perp, m)
    mu = g * n
    c = math.sqrt(mu / m)
    K = math.sqrt(n * (hbar * math.pi) ** 2 / (4.0 * g * m))
    gamma = m * g / (hbar**2 * n)
    lam_T = thermal_coherence_length(params.temperature, n, m)
    xi_n = hbar / (m * c)
    J = params.tunnel_coupling
    if J == 0:
        xi_J, q, uncoupled = math.inf, 0.0, True
    else:
        xi_J = math.sqrt(hbar / (4.0 * m * J))
        q = lam_T / xi_J
        uncoupled = False
    T_eff = mu / (2.0 * k_B)
    lam_eff = hbar**2 * n / (m * k_B * T_eff)
    return DerivedScales(
        g1d=g, a_perp=transverse_length(params.omega_perp, m),
        chemical_potential=mu, sound_speed=c, luttinger_K=K, gamma=gamma,
        lambda_T=lam_T, xi_n=xi_n, xi_J=xi_J, q_ratio=q, T_eff=T_eff,
        lambda_eff=lam_eff, uncoupled=uncoupled,
        zero_temperature=params.temperature == 0, n1d=n, atom_mass=m)


@dataclass(frozen=True)
class RegimeReport:
    thermal_ratio: float       # k_B T / (hbar omega_perp)
    interaction_ratio: float   # mu / (hbar omega_perp)
    gamma: float
    one_d: bool
    quasicondensate: bool
    warnings: tuple = ()

    @property
    def ok(self) -> bool:
        return self.one_d and self.quasicondensate


def check_1d_regime(params: GasParameters, scales: DerivedScales) -> RegimeReport:
    e_perp = hbar * params.omega_perp
    tr = k_B * params.temperature / e_perp
    ir = scales.chemical_potential / e_perp
    warnings = []
    if tr >= 1:
        warnings.append(f"1D regime violated: k_B T / (hbar omega_perp) = {tr:.3g} >= 1")
    if ir >= 1:
        warnings.append(f"1D regime violated: mu / (hbar omega_perp) = {ir:.3g} >= 1")
    qc = scales.gamma < QUASICONDENSATE_GAMMA
    if not qc:
        warnings.append(
            f"gamma = {scales.gamma:.3g} is not << 1 (threshold {QUASICONDENSATE_GAMMA}); "
            "outside the quasicondensate regime")
    return RegimeReport(tr, ir, scales.gamma, tr < 1 and ir < 1, qc, tuple(warnings))


def rb87(n1d: float, temperature: float = 0.0, length: Optional[float] = None,
         omega_par: Optional[float] = None, omega_perp: float = 2 * math.pi * 3e3,
         tunnel_coupling: float = 0.0) -> GasParameters:
    """Convenience constructor for a 87Rb gas on an atom chip."""
    geometry = Box(length) if length is not None else Harmonic(omega_par or 2 * math.pi * 5.0)
    return GasParameters(
        atom_mass=1.443e-25, scattering_length=5.2e-9, omega_perp=omega_perp,
        geometry=geometry, n1d=n1d, temperature=temperature,
        tunnel_coupling=tunnel_coupling)
