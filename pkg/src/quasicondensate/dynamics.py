"""Free phonon evolution, recurrences and the quench-cooling model."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.constants import hbar, k as k_B

from .ensembles import PhononEnsemble
from .modes import ModeBasis


def evolve(ensemble: PhononEnsemble, t: float) -> PhononEnsemble:
    """Rotate every mode by ``exp(-i omega_j t)``."""
    if t < 0:
        raise ValueError("evolution time must be >= 0")
    if t == 0:
        return ensemble
    phase = np.exp(-1j * ensemble.basis.omegas * t)
    return ensemble.with_amplitudes(ensemble.amplitudes * phase, time=ensemble.time + t)


@dataclass(frozen=True)
class EvolutionPlan:
    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("plan needs a 1D list of times")
        if np.any(t < 0) or np.any(np.diff(t) <= 0):
            raise ValueError("plan times must be >= 0 and strictly increasing")
        object.__setattr__(self, "times", t)

    @classmethod
    def linspace(cls, t_max: float, n: int) -> "EvolutionPlan":
        return cls(np.linspace(0.0, t_max, n))


def evolve_series(ensemble: PhononEnsemble, plan) -> Iterator[PhononEnsemble]:
    """Yield ``evolve(ensemble, t_k)`` for each plan time, one snapshot at a time."""
    if not isinstance(plan, EvolutionPlan):
        plan = EvolutionPlan(plan)
    for t in plan.times:
        yield evolve(ensemble, float(t))


@dataclass(frozen=True)
class RecurrencePrediction:
    geometry: str
    period: Optional[float]
    full_period: Optional[float]
    frequency_ratio: float
    commensurate: bool
    note: str = ""


def recurrence_time(basis: ModeBasis) -> RecurrencePrediction:
    """Recurrence of phase correlations from the mode ladder.

    Box: ``t_rec = L/c`` (all amplitudes pick up ``(-1)^j``, i.e. the field is
    mirrored) and full amplitude periodicity at ``2L/c``.  Harmonic: the ladder
    is incommensurate, no finite recurrence is reported.
    """
    w = basis.omegas
    ratio = w[1] / w[0] if basis.M > 1 else 1.0
    if basis.geometry == "box":
        t_rec = basis.length / basis.sound_speed
        return RecurrencePrediction("box", t_rec, 2 * t_rec, ratio, True,
                                    "omega_j / omega_1 = j")
    return RecurrencePrediction(basis.geometry, None, None, ratio, False,
                                f"omega_2 / omega_1 = {ratio:.12g} (sqrt(3)), no commensurate ladder")


def recurrence_fidelity(a0: np.ndarray, at: np.ndarray) -> float:
    """Overlap ``|<a0, a(t)>| / |a0|^2`` averaged over realizations."""
    num = np.abs(np.sum(np.conj(a0) * at, axis=1))
    den = np.sum(np.abs(a0) ** 2, axis=1)
    return float(np.mean(num / den))


@dataclass
class CoolingTrace:
    step: np.ndarray
    atom_number: np.ndarray
    temperature: np.ndarray
    energy: np.ndarray
    intervals: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "N", "T_fit", "total_energy"])
            for row in zip(self.step, self.atom_number, self.temperature, self.energy):
                w.writerow([int(row[0])] + [repr(float(x)) for x in row[1:]])


def mode_temperature(ensemble: PhononEnsemble) -> float:
    """Equipartition readout: mean mode energy over k_B."""
    return float(np.mean(ensemble.mode_energies()) / k_B)


def simulate_quench_cooling(ensemble: PhononEnsemble, n_steps: int, extraction_fraction: float,
                            dephase_interval: Optional[float] = None, seed: int = 0, *,
                            atom_number: Optional[float] = None,
                            atom_loss: bool = False) -> tuple:
    """Repeated density quenches followed by dephasing.

    Each step multiplies the density quadrature of every mode by
    ``sqrt(1 - extraction_fraction)`` and then evolves for a dephasing
    interval, drawn uniformly from ``[0.5, 1.5] L/c`` unless given.

    With ``atom_loss`` the density fluctuations shrink in proportion to the
    atom number, so ``N`` is multiplied by the same ``sqrt(1 - fraction)``.
    """
    if not 0 < extraction_fraction < 1:
        raise ValueError("extraction_fraction must lie in (0, 1)")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    factor = math.sqrt(1.0 - extraction_fraction)
    t_cross = ensemble.basis.crossing_time
    N = float(atom_number) if atom_number is not None else float("nan")
    steps, Ns, Ts, Es, dts = [0], [N], [mode_temperature(ensemble)], [], []
    Es.append(float(np.mean(np.sum(ensemble.mode_energies(), axis=1))))
    ens = ensemble
    for s in range(1, n_steps + 1):
        a = ens.amplitudes
        ens = ens.with_amplitudes(factor * a.real + 1j * a.imag)
        if atom_loss:
            N *= factor
        dt = dephase_interval if dephase_interval is not None else rng.uniform(0.5, 1.5) * t_cross
        dts.append(dt)
        ens = evolve(ens, dt)
        steps.append(s)
        Ns.append(N)
        Ts.append(mode_temperature(ens))
        Es.append(float(np.mean(np.sum(ens.mode_energies(), axis=1))))
    trace = CoolingTrace(np.array(steps), np.array(Ns), np.array(Ts), np.array(Es), np.array(dts))
    return ens, trace


def linear_fit_r2(x: Sequence[float], y: Sequence[float], through_origin: bool = False) -> tuple:
    """Least-squares line; returns ``(slope, intercept, R^2)`` with centred R^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if through_origin:
        slope = float(np.dot(x, y) / np.dot(x, x))
        intercept = 0.0
    else:
        slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)
