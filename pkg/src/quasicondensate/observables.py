"""Phase-correlation observables, connected correlation functions and FDFs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy import optimize, stats

from .dynamics import evolve
from .ensembles import FieldEnsemble, PhononEnsemble
from .modes import SpatialGrid

EnsembleLike = Union[FieldEnsemble, PhononEnsemble]


def _fields(ens: EnsembleLike, t: Optional[float] = None) -> FieldEnsemble:
    if isinstance(ens, PhononEnsemble):
        if t is not None:
            ens = evolve(ens, t - ens.time) if t >= ens.time else _rewind(ens, t)
        return ens.fields()
    if t is not None:
        raise ValueError("a time can only be given for phonon ensembles")
    return ens


def _rewind(ens: PhononEnsemble, t: float) -> PhononEnsemble:
    phase = np.exp(1j * ens.basis.omegas * (ens.time - t))
    return ens.with_amplitudes(ens.amplitudes * phase, time=t)


def bootstrap(statistic: Callable[[np.ndarray], np.ndarray], data: np.ndarray,
              n_boot: int = 200, seed: int = 0) -> np.ndarray:
    """Standard error of ``statistic`` by resampling realizations (rows) of ``data``."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    R = data.shape[0]
    reps = [statistic(data[rng.integers(0, R, R)]) for _ in range(n_boot)]
    return np.std(np.asarray(reps), axis=0, ddof=1)


@dataclass(frozen=True)
class CorrelationResult:
    kind: str                     # "matrix" | "stationary" | "npoint"
    values: np.ndarray
    stderr: np.ndarray
    R: int
    coords: np.ndarray            # positions (m), separations (m) or index tuples
    extra: dict = field(default_factory=dict)


# --- two-point phase correlations -----------------------------------------


def phase_correlation_matrix(ens: EnsembleLike, indices: Optional[Sequence[int]] = None,
                             t: Optional[float] = None) -> CorrelationResult:
    """``C(z1, z2) = <exp(i phi(z1) - i phi(z2))>`` over realizations.

    The standard error refers to the real part.  The matrix is Hermitian and
    its diagonal is exactly one.
    """
    f = _fields(ens, t)
    idx = np.arange(f.grid.n) if indices is None else np.asarray(indices)
    phi = f.phi[:, idx]
    R = phi.shape[0]
    E = np.exp(1j * phi)
    C = E.T @ E.conj() / R
    C = 0.5 * (C + C.conj().T)
    np.fill_diagonal(C, 1.0)
    E2 = E * E
    C2 = E2.T @ E2.conj() / R
    mean_cos2 = 0.5 * (1.0 + C2.real)
    var = np.clip(mean_cos2 - C.real**2, 0.0, None)
    err = np.sqrt(var / max(R - 1, 1))
    np.fill_diagonal(err, 0.0)
    return CorrelationResult("matrix", C, err, R, f.grid.z[idx])


def stationary_correlation(ens: EnsembleLike, t: Optional[float] = None, window: float = 0.5,
                           max_separation: Optional[float] = None) -> CorrelationResult:
    """Pair-averaged ``C(zbar)`` with both points in the central ``window`` fraction.

    Standard errors come from per-realization averages, so correlations
    between pairs inside one realization are accounted for.
    """
    f = _fields(ens, t)
    idx = f.grid.central(window)
    phi = f.phi[:, idx]
    n = idx.size
    s_max = n - 1
    if max_separation is not None:
        s_max = min(s_max, int(round(max_separation / f.grid.dz)))
    E = np.exp(1j * phi)
    per_real = np.empty((phi.shape[0], s_max + 1))
    for s in range(s_max + 1):
        per_real[:, s] = np.mean((E[:, : n - s] * E[:, s:].conj()).real, axis=1)
    R = phi.shape[0]
    vals = per_real.mean(axis=0)
    err = per_real.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros_like(vals)
    return CorrelationResult("stationary", vals, err, R, np.arange(s_max + 1) * f.grid.dz,
                             {"per_realization": per_real})


@dataclass
class HorizonReport:
    separations: np.ndarray
    times: np.ndarray
    correlations: np.ndarray      # (n_times, n_separations)
    long_time: np.ndarray
    settling_times: np.ndarray
    velocity: float
    velocity_ci: tuple
    intercept: float
    r2: float
    outside_max_deviation: float  # max |1 - C| over points with zbar > v t
    monotone: bool
    flags: list
    outside_plateau_spread: float = 0.0  # max_t relative spread of C over zbar > v t

    def velocity_ratio(self, c: float) -> float:
        return self.velocity / c


def light_cone_scan(ens: PhononEnsemble, times: Sequence[float], separations: Sequence[float],
                    tol: float = 0.05, window: float = 0.5,
                    late_fraction: float = 0.25) -> HorizonReport:
    """Settling time of ``C(zbar, t)`` at each separation and the horizon velocity.

    The long-time value is the mean over the last ``late_fraction`` of the
    time series.  ``t*(zbar)`` is the first time after which ``C`` stays within
    ``tol`` (relative) of it; ``t* = zbar / v + t0`` is fitted by least squares.
    """
    if ens.basis.geometry != "box":
        raise ValueError("light-cone scan needs a homogeneous (box) basis")
    times = np.asarray(times, dtype=float)
    seps = np.asarray(separations, dtype=float)
    dz = ens.basis.grid.dz
    s_idx = np.round(seps / dz).astype(int)
    curves = []
    for t in times:
        cr = stationary_correlation(ens, t=t, window=window, max_separation=seps.max() + dz)
        curves.append(cr.values[s_idx])
    Cs = np.array(curves)
    n_late = max(1, int(round(late_fraction * len(times))))
    C_inf = Cs[-n_late:].mean(axis=0)
    t_star = np.empty(len(seps))
    flags = []
    for k in range(len(seps)):
        inside = np.abs(Cs[:, k] - C_inf[k]) <= tol * abs(C_inf[k])
        outside_idx = np.flatnonzero(~inside)
        first = 0 if outside_idx.size == 0 else outside_idx[-1] + 1
        if first >= len(times) - n_late:
            flags.append(f"separation {seps[k]:.3g} m never settles before the late window")
        t_star[k] = times[min(first, len(times) - 1)]
    monotone = bool(np.all(np.diff(t_star) >= 0))
    if not monotone:
        flags.append("non-monotone settling times (increase R)")
    fit = stats.linregress(seps, t_star)
    slope = fit.slope
    v = 1.0 / slope if slope > 0 else float("inf")
    if slope > 0:
        lo, hi = slope - fit.stderr, slope + fit.stderr
        ci = (1.0 / hi, 1.0 / lo if lo > 0 else float("inf"))
    else:
        ci = (float("nan"), float("nan"))
        flags.append("settling time does not grow with separation")
    outside = seps[None, :] > v * times[:, None]
    dev = float(np.max(np.abs(1.0 - Cs[outside]))) if np.any(outside) else 0.0
    spread = 0.0
    for k in range(len(times)):
        row = Cs[k, outside[k]]
        if row.size > 1:
            spread = max(spread, float(np.ptp(row) / np.mean(row)))
    return HorizonReport(seps, times, Cs, C_inf, t_star, v, ci, fit.intercept, fit.rvalue**2,
                         dev, monotone, flags, spread)


# --- N-point phase correlations and cumulants -----------------------------


def set_partitions(items: Sequence[int]):
    """All set partitions of ``items`` (lists of blocks)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


@lru_cache(maxsize=None)
def _partitions(n: int) -> tuple:
    return tuple(tuple(tuple(sorted(b)) for b in p) for p in set_partitions(range(n)))


def joint_cumulant(moment: Callable[[tuple], float], n: int) -> float:
    """Joint cumulant of ``n`` variables from their mixed moments.

    ``moment(block)`` returns ``E[prod_{i in block} X_i]`` for a sorted index
    tuple.  Uses ``sum_pi (|pi|-1)! (-1)^(|pi|-1) prod_B moment(B)``.
    """
    if n > 10:
        raise ValueError("orders above 10 are not supported")
    cache = {}

    def mu(block):
        if block not in cache:
            cache[block] = moment(block)
        return cache[block]

    total = 0.0
    for part in _partitions(n):
        k = len(part)
        term = math.factorial(k - 1) * (-1) ** (k - 1)
        for b in part:
            term *= mu(b)
        total += term
    return total


def sample_moments(X: np.ndarray) -> Callable[[tuple], float]:
    """Moment oracle for the columns of a ``(R, n)`` sample matrix."""

    def moment(block):
        return float(np.mean(np.prod(X[:, list(block)], axis=1)))

    return moment


def phase_differences(ens: EnsembleLike, pairs: Sequence[tuple], t: Optional[float] = None) -> np.ndarray:
    """``(R, N)`` matrix of unwrapped ``phi(z_i) - phi(z_i')`` for grid-index pairs."""
    f = _fields(ens, t)
    pairs = np.asarray(pairs, dtype=int)
    return f.phi[:, pairs[:, 0]] - f.phi[:, pairs[:, 1]]


def npoint_phase_correlation(ens: EnsembleLike, pairs: Sequence[tuple], t: Optional[float] = None,
                             n_boot: int = 200, seed: int = 0) -> CorrelationResult:
    """Full, connected and disconnected N-th order phase correlation.

    ``values`` holds ``[G, G_con, G_dis]``; standard errors come from a
    realization-level bootstrap.
    """
    X = phase_differences(ens, pairs, t)
    N = X.shape[1]
    if N > 10:
        raise ValueError("order N must be <= 10")

    def stat(data):
        G = float(np.mean(np.prod(data, axis=1)))
        con = joint_cumulant(sample_moments(data), N)
        return np.array([G, con, G - con])

    vals = stat(X)
    err = bootstrap(stat, X, n_boot, seed) if n_boot else np.full(3, np.nan)
    extra = {"order": N}
    if N % 2 == 1:
        extra["odd_order_consistent_with_zero"] = bool(abs(vals[0]) <= 3 * err[0])
    return CorrelationResult("npoint", vals, err, X.shape[0], np.asarray(pairs), extra)


# --- full distribution functions ------------------------------------------


@dataclass(frozen=True)
class FdfHistogram:
    variable: str
    edges: np.ndarray
    weights: np.ndarray           # sums to one
    R: int
    samples: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def density(self) -> np.ndarray:
        return self.weights / np.diff(self.edges)


def _histogram(values: np.ndarray, variable: str, bins) -> FdfHistogram:
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    if bins is None:
        bins = 30
    if np.isscalar(bins):
        if hi - lo < 1e-12 * max(1.0, abs(lo)):
            lo, hi = lo - 0.5e-6 * max(1.0, abs(lo)), hi + 0.5e-6 * max(1.0, abs(hi))
            bins = 1
        edges = np.linspace(lo, hi, int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    counts, _ = np.histogram(values, bins=edges)
    return FdfHistogram(variable, edges, counts / counts.sum(), values.size, values)


@dataclass(frozen=True)
class SidePeakReport:
    peak_count: int
    valley_count: int
    significance: float
    resolved: bool


def side_peak_contrast(delta_phi: np.ndarray, peak_halfwidth: float = math.pi / 4,
                       valley: tuple = (math.pi, 1.5 * math.pi), sigma: float = 3.0) -> SidePeakReport:
    """Excess of ``|dphi|`` samples near ``2 pi`` over the valley between the peaks.

    Both windows have the same width by default (``pi / 2``), so the counts
    compare directly; the significance uses Poisson errors.  The sign is
    folded because the ensembles are symmetric under ``phi -> -phi``.
    """
    x = np.abs(np.asarray(delta_phi, dtype=float))
    peak = int(np.count_nonzero(np.abs(x - 2 * math.pi) <= peak_halfwidth))
    vwidth = valley[1] - valley[0]
    vcount = np.count_nonzero((x >= valley[0]) & (x < valley[1])) * (2 * peak_halfwidth / vwidth)
    total = peak + vcount
    sig = (peak - vcount) / math.sqrt(total) if total > 0 else 0.0
    return SidePeakReport(peak, int(round(vcount)), float(sig), bool(sig > sigma))


def correlation_trace(ens: PhononEnsemble, times: Sequence[float], separation: float,
                      window: float = 0.5) -> CorrelationResult:
    """``C(zbar, t)`` at one separation, pair-averaged in the central window, vs time."""
    grid = ens.basis.grid
    idx = grid.central(window)
    s = int(round(separation / grid.dz))
    if s >= idx.size:
        raise ValueError("separation exceeds the central window")
    vals, errs = [], []
    for t in times:
        phi = _fields(ens, float(t)).phi[:, idx]
        per = np.cos(phi[:, : idx.size - s] - phi[:, s:]).mean(axis=1)
        vals.append(per.mean())
        errs.append(per.std(ddof=1) / math.sqrt(len(per)))
    return CorrelationResult("trace", np.array(vals), np.array(errs), ens.R,
                             np.asarray(times, dtype=float), {"separation": s * grid.dz})


def local_maxima(values: Sequence[float]) -> np.ndarray:
    """Indices of peaks: interior points not below either neighbour (plateaus count once),
    plus the last point if it is above its neighbour.  The first point is never a peak."""
    v = np.asarray(values, dtype=float)
    out = []
    for i in range(1, len(v)):
        left = v[i] > v[i - 1]
        right = i == len(v) - 1 or v[i] >= v[i + 1]
        if left and right:
            out.append(i)
    return np.array(out, dtype=int)


def integrated_phasor(ens: EnsembleLike, L: float, t: Optional[float] = None) -> tuple:
    """Per-realization ``A(L) = int_{-L/2}^{L/2} exp(i phi) dz`` and the length used."""
    f = _fields(ens, t)
    z = f.grid.z
    if L > f.grid.length * (1 + 1e-12):
        raise ValueError("integration length exceeds the grid")
    sel = np.abs(z) <= 0.5 * L + 1e-12 * L
    A = np.exp(1j * f.phi[:, sel]).sum(axis=1) * f.grid.dz
    return A, sel.sum() * f.grid.dz


def squared_contrast(ens: EnsembleLike, L: float, t: Optional[float] = None) -> np.ndarray:
    A, Lused = integrated_phasor(ens, L, t)
    return np.abs(A) ** 2 / Lused**2


def contrast_fdf(ens: EnsembleLike, L: float, t: Optional[float] = None, bins=None) -> FdfHistogram:
    """FDF of ``alpha = C^2 / <C^2>`` for integration length ``L``."""
    c2 = squared_contrast(ens, L, t)
    return _histogram(c2 / c2.mean(), "alpha", bins)


def phase_diff_fdf(ens: EnsembleLike, i1: int, i2: int, t: Optional[float] = None,
                   bins=None) -> FdfHistogram:
    """FDF of the unwrapped ``phi(z1) - phi(z2)`` (grid indices)."""
    f = _fields(ens, t)
    return _histogram(f.phi[:, i1] - f.phi[:, i2], "delta_phi", bins)


def polar_fdf(ens: EnsembleLike, L: float, t: Optional[float] = None, bins=(24, 20)) -> dict:
    """Joint histogram of integrated phase ``arg A`` and contrast ``|A|/L``."""
    A, Lused = integrated_phasor(ens, L, t)
    H, pe, ce = np.histogram2d(np.angle(A), np.abs(A) / Lused, bins=bins,
                               range=[[-math.pi, math.pi], [0.0, 1.0]])
    return {"weights": H / H.sum(), "phase_edges": pe, "contrast_edges": ce}


def exponential_contrast_model(L: np.ndarray, ell: float) -> np.ndarray:
    """``<C^2(L)>`` for ``C(zbar) = exp(-zbar/ell)``."""
    x = np.asarray(L, dtype=float) / ell
    return 2.0 * (x - 1.0 + np.exp(-x)) / x**2


@dataclass
class ContrastCurve:
    lengths: np.ndarray
    mean_sq: np.ndarray
    stderr: np.ndarray
    crossover_length: float       # fitted decay length ell of the universal form
    asymptote_intersection: float  # 2 * ell, where the flat and 2 ell/L asymptotes meet


def mean_sq_contrast_vs_length(ens: EnsembleLike, lengths: Sequence[float],
                               t: Optional[float] = None) -> ContrastCurve:
    """``<C^2(L)>`` for several integration lengths and the crossover scale."""
    f = _fields(ens, t)
    Ls, means, errs = [], [], []
    for L in lengths:
        A, Lused = integrated_phasor(f, L)
        c2 = np.abs(A) ** 2 / Lused**2
        Ls.append(Lused)
        means.append(c2.mean())
        errs.append(c2.std(ddof=1) / math.sqrt(len(c2)))
    Ls, means, errs = map(np.asarray, (Ls, means, errs))
    guess = Ls[np.argmin(np.abs(means - 0.5))]
    popt, _ = optimize.curve_fit(exponential_contrast_model, Ls, means, p0=[guess],
                                 sigma=np.maximum(errs, 1e-6), bounds=(1e-12, np.inf))
    return ContrastCurve(Ls, means, errs, float(popt[0]), float(2 * popt[0]))


def unwrap_phase(phi: np.ndarray, axis: int = -1) -> np.ndarray:
    """Remove 2 pi jumps along z from wrapped (imported) phase profiles."""
    return np.unwrap(np.asarray(phi, dtype=float), axis=axis)


def positions_to_indices(grid: SpatialGrid, z: Iterable[float]) -> np.ndarray:
    return np.array([int(np.argmin(np.abs(grid.z - zi))) for zi in z])
