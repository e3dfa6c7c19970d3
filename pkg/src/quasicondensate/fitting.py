"""Inverse problems: temperatures from correlation decay and density ripples,
GGE mode occupations from the two-point phase correlation matrix."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg, optimize
from scipy.constants import hbar

from .ensembles import FieldEnsemble, PhononEnsemble, sample_thermal, shot_noise_occupations
from .modes import ModeBasis
from .tof import DEFAULT_RESOLUTION, RippleCorrelation, ripple_curve
from .observables import CorrelationResult, phase_correlation_matrix, stationary_correlation

CACHE_ENV = "QUASICONDENSATE_CACHE"
DECAY_FLOOR = math.exp(-1.5)
RESIDUAL_LIMIT = 0.05


@dataclass
class FitReport:
    estimate: float
    units: str
    ci: tuple
    objective: float
    iterations: int
    converged: bool
    calibration: str = ""
    flags: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def reliable(self) -> bool:
        return self.converged and not self.flags

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ci"] = list(self.ci)
        d["reliable"] = self.reliable
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=float)


# --- exponential decay and the thermal calibration ------------------------


@dataclass
class DecayFit:
    length: float
    length_err: float
    residual_rms: float
    n_points: int
    decays_enough: bool


def fit_decay_length(separations: np.ndarray, values: np.ndarray, stderr: Optional[np.ndarray] = None,
                     floor: float = DECAY_FLOOR) -> DecayFit:
    """Straight-line fit of ``ln C`` against separation, with free intercept.

    Uses the points with ``0 < zbar`` up to the first value below ``floor``.
    The zero-separation point is excluded (it is 1 by construction and sits
    inside the short-distance cutoff region).  ``stderr`` only supplies the
    error of the slope.
    """
    separations = np.asarray(separations, dtype=float)
    values = np.asarray(values, dtype=float)
    below = np.flatnonzero(values < floor)
    stop = below[0] if below.size else len(values)
    decays = bool(np.min(values) <= math.exp(-1.0))
    x, y = separations[1:max(stop, 4)], values[1:max(stop, 4)]
    keep = y > 0
    x, y = x[keep], y[keep]
    (slope, icpt), cov = np.polyfit(x, np.log(y), 1, cov="unscaled") if len(x) > 3 else (
        np.polyfit(x, np.log(y), 1), np.full((2, 2), np.nan))
    resid = np.log(y) - (slope * x + icpt)
    length = -1.0 / slope if slope < 0 else float("inf")
    if stderr is not None:
        sig = np.asarray(stderr, dtype=float)[1:max(stop, 4)][keep] / y
        sxx = np.sum((x - x.mean()) ** 2)
        slope_err = math.sqrt(np.sum(((x - x.mean()) / sxx) ** 2 * sig**2))
    else:
        dof = max(len(x) - 2, 1)
        slope_err = math.sqrt(np.sum(resid**2) / dof / np.sum((x - x.mean()) ** 2))
    length_err = slope_err * length**2 if math.isfinite(length) else float("nan")
    return DecayFit(length, length_err, float(np.sqrt(np.mean(resid**2))), len(x), decays)


@dataclass
class CalibrationTable:
    """Thermal decay length of the stationary relative-phase correlation vs temperature."""

    temperatures: np.ndarray
    lengths: np.ndarray
    key: str = ""
    meta: dict = field(default_factory=dict)

    def length_for(self, T: float) -> float:
        return float(np.exp(np.interp(np.log(T), np.log(self.temperatures), np.log(self.lengths))))

    def temperature_for(self, length: float) -> float:
        """Invert the table (lengths decrease with T), log-linear interpolation/extrapolation."""
        lt, ll = np.log(self.temperatures), np.log(self.lengths)
        order = np.argsort(ll)
        ll, lt = ll[order], lt[order]
        x = math.log(length)
        if x < ll[0]:
            s = (lt[1] - lt[0]) / (ll[1] - ll[0])
            return float(np.exp(lt[0] + s * (x - ll[0])))
        if x > ll[-1]:
            s = (lt[-1] - lt[-2]) / (ll[-1] - ll[-2])
            return float(np.exp(lt[-1] + s * (x - ll[-1])))
        return float(np.exp(np.interp(x, ll, lt)))

    def in_range(self, length: float) -> bool:
        return bool(self.lengths.min() <= length <= self.lengths.max())

    def to_json(self) -> str:
        return json.dumps({"temperatures": self.temperatures.tolist(), "lengths": self.lengths.tolist(),
                           "key": self.key, "meta": self.meta}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CalibrationTable":
        d = json.loads(text)
        return cls(np.array(d["temperatures"]), np.array(d["lengths"]), d.get("key", ""), d.get("meta", {}))


def _calibration_key(basis: ModeBasis, temperatures, R, seed, window) -> str:
    payload = json.dumps({"basis": basis.describe(), "T": list(map(float, temperatures)),
                          "R": R, "seed": seed, "window": window}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def build_calibration(basis: ModeBasis, T_min: float, T_max: float, R: int = 2000, seed: int = 12345,
                      n_temps: int = 8, window: float = 0.5,
                      cache_dir: Optional[str] = None) -> CalibrationTable:
    """Decay lengths of thermal ensembles at ``n_temps`` log-spaced temperatures.

    Cached as JSON under ``cache_dir`` (or ``$QUASICONDENSATE_CACHE``) when set.
    """
    temps = np.geomspace(T_min, T_max, n_temps)
    key = _calibration_key(basis, temps, R, seed, window)
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    path = Path(cache_dir) / f"calibration-{key}.json" if cache_dir else None
    if path is not None and path.exists():
        return CalibrationTable.from_json(path.read_text())
    lengths = []
    for i, T in enumerate(temps):
        ens = sample_thermal(basis, float(T), R, seed + i)
        cr = stationary_correlation(ens, window=window)
        lengths.append(fit_decay_length(cr.coords, cr.values, cr.stderr).length)
    table = CalibrationTable(temps, np.array(lengths), key,
                             {"R": R, "seed": seed, "window": window, "basis": basis.describe()})
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(table.to_json())
    return table


def fit_teff_from_decay(curve: CorrelationResult, calibration: CalibrationTable) -> FitReport:
    """Effective temperature from the exponential decay of a stationary ``C(zbar)``."""
    fit = fit_decay_length(curve.coords, curve.values, curve.stderr)
    flags = []
    if not fit.decays_enough:
        flags.append("correlation does not decay by 1/e within the window")
    if fit.residual_rms > RESIDUAL_LIMIT:
        flags.append(f"non-exponential decay (ln-residual rms {fit.residual_rms:.3g})")
    if not calibration.in_range(fit.length):
        flags.append("decay length outside the calibration range (extrapolated)")
    T = calibration.temperature_for(fit.length)
    if np.isfinite(fit.length_err):
        lo = calibration.temperature_for(fit.length + fit.length_err)
        hi = calibration.temperature_for(max(fit.length - fit.length_err, 1e-30))
    else:
        lo = hi = T
    return FitReport(T, "K", (lo, hi), fit.residual_rms, 1, math.isfinite(fit.length),
                     calibration.key, flags, {"decay_length": fit.length,
                                              "decay_length_err": fit.length_err,
                                              "n_points": fit.n_points})


# --- GGE occupations ------------------------------------------------------


@dataclass
class GgeOccupations:
    occupations: np.ndarray
    stderr: np.ndarray
    shot_noise: np.ndarray
    mode_indices: np.ndarray
    residual_rms: float = 0.0
    warnings: list = field(default_factory=list)

    @property
    def normalized(self) -> np.ndarray:
        return self.occupations / self.shot_noise

    @property
    def normalized_stderr(self) -> np.ndarray:
        return self.stderr / self.shot_noise

    def squeezed(self, sigma: float = 3.0) -> np.ndarray:
        """Modes whose occupation lies below the shot-noise level by ``sigma`` errors."""
        return self.normalized + sigma * self.normalized_stderr < 1.0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "n_j", "stderr", "shot_noise_ref"])
            for j, n, e, s in zip(self.mode_indices, self.occupations, self.stderr, self.shot_noise):
                w.writerow([int(j), repr(float(n)), repr(float(e)), repr(float(s))])

    def to_dict(self) -> dict:
        return {"j": self.mode_indices.tolist(), "n_j": self.occupations.tolist(),
                "stderr": self.stderr.tolist(), "shot_noise_ref": self.shot_noise.tolist(),
                "normalized": self.normalized.tolist(), "residual_rms": self.residual_rms,
                "warnings": list(self.warnings)}


def gge_design(basis: ModeBasis, indices: Sequence[int], times: Optional[Sequence[float]] = None,
               M_fit: Optional[int] = None) -> tuple:
    """Rows ``w_j(z_a, z_b)`` with ``Var(dphi) = sum_j n_j w_j`` for all pairs ``a < b``.

    Without ``times`` the weights are dephased (time-averaged):
    ``2 g / (hbar w_j) (f_j(z_a) - f_j(z_b))^2``.  With ``times`` each block
    belongs to a density-aligned state observed at ``t``:
    ``4 g / (hbar w_j) sin^2(w_j t) (f_j(z_a) - f_j(z_b))^2``.
    """
    M = basis.M if M_fit is None else M_fit
    F = basis.profiles[np.asarray(indices), :M]
    w = basis.omegas[:M]
    a, b = np.triu_indices(len(indices), k=1)
    dF2 = (F[a] - F[b]) ** 2
    if times is None:
        return dF2 * (2 * basis.g1d / (hbar * w)), (a, b)
    blocks = [dF2 * (4 * basis.g1d / (hbar * w)) * np.sin(w * t) ** 2 for t in times]
    return np.concatenate(blocks, axis=0), (a, b)


def _solve_nnls(A, y, sigma, scale, reg):
    Aw = (A * scale) / sigma[:, None]
    yw = y / sigma
    lam = reg * np.trace(Aw.T @ Aw) / Aw.shape[1]
    Aaug = np.vstack([Aw, math.sqrt(lam) * np.eye(Aw.shape[1])])
    yaug = np.concatenate([yw, np.zeros(Aw.shape[1])])
    x, _ = optimize.nnls(Aaug, yaug, maxiter=50 * Aw.shape[1])
    resid = yw - Aw @ x
    return x, Aw, lam, resid


def fit_gge(corr, basis: ModeBasis, indices: Sequence[int], *, times: Optional[Sequence[float]] = None,
            stderr=None, M_fit: Optional[int] = None, scales=None, reference: Optional[np.ndarray] = None,
            min_corr: float = 0.1, reg: float = 1e-4, max_cond: float = 1e8) -> GgeOccupations:
    """Mode occupations from ``C(z1, z2)`` using ``-2 ln C = sum_j n_j w_j``.

    ``corr`` is a CorrelationResult, an ``(n, n)`` matrix, or a stack
    ``(n_t, n, n)`` matching ``times``.  Occupations are solved for in units
    of the shot-noise reference (``scales`` or ``reference``) with
    non-negativity and a small Tikhonov term; errors are linearised.
    """
    if isinstance(corr, CorrelationResult):
        stderr = corr.stderr if stderr is None else stderr
        corr = corr.values
    C = np.real(np.asarray(corr))
    if C.ndim == 2:
        C = C[None]
        stderr = None if stderr is None else np.asarray(stderr)[None]
    if times is None and C.shape[0] != 1:
        raise ValueError("a stack of correlation matrices needs matching times")
    M = basis.M if M_fit is None else M_fit
    warn = []
    if M > basis.M:
        raise ValueError("M_fit exceeds the basis size")
    if M >= len(indices):
        M = len(indices) - 1
        warn.append(f"M_fit truncated to {M}: not enough sample points")
    A, (ia, ib) = gge_design(basis, indices, times, M)
    while M > 1 and np.linalg.cond(A) > max_cond:
        M -= 1
        warn.append(f"ill-conditioned design matrix, M_fit truncated to {M}")
        A, (ia, ib) = gge_design(basis, indices, times, M)
    y = np.concatenate([c[ia, ib] for c in C])
    if stderr is None:
        err = np.full_like(y, 1e-3)
    else:
        err = np.concatenate([np.real(e)[ia, ib] for e in stderr])
    keep = y > min_corr
    if keep.sum() < M:
        raise ValueError("too few correlation entries above min_corr for the requested modes")
    target = -2.0 * np.log(y[keep])
    sigma = 2.0 * np.maximum(err[keep], 1e-6) / y[keep]
    if reference is None:
        reference = shot_noise_occupations(basis, scales) if scales is not None else np.ones(basis.M)
    ref = np.asarray(reference, dtype=float)[:M]
    x, Aw, lam, resid = _solve_nnls(A[keep], target, sigma, ref, reg)
    H = Aw.T @ Aw + lam * np.eye(M)
    chi2 = float(np.sum(resid**2) / max(len(resid) - M, 1))
    cov = np.linalg.inv(H) * max(chi2, 1.0)
    x_err = np.sqrt(np.diag(cov))
    if warn:
        for w in warn:
            warnings.warn(w)
    return GgeOccupations(x * ref, x_err * ref, ref, basis.indices[:M],
                          float(np.sqrt(np.mean(resid**2))), warn)


def fit_gge_bootstrap(snapshots: Sequence, basis: ModeBasis, indices: Sequence[int], *,
                      times: Optional[Sequence[float]] = None, n_boot: int = 100, seed: int = 0,
                      **kwargs) -> GgeOccupations:
    """``fit_gge`` on correlation matrices measured from ensembles, with bootstrap errors.

    ``snapshots`` are phonon or field ensembles, one per entry of ``times``
    (or a single dephased one), sharing realizations; resampling keeps
    realizations aligned across times.
    """
    phis = [s.fields().phi if isinstance(s, PhononEnsemble) else s.phi for s in snapshots]
    R = phis[0].shape[0]
    stacked = times is not None

    def fit(rows):
        Cs, Es = [], []
        for p in phis:
            cr = phase_correlation_matrix(FieldEnsemble(p[rows], basis.grid), indices)
            Cs.append(cr.values)
            Es.append(cr.stderr)
        C, E = (np.array(Cs), np.array(Es)) if stacked else (Cs[0], Es[0])
        return fit_gge(C, basis, indices, times=times, stderr=E, **kwargs)

    best = fit(np.arange(R))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    reps = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(n_boot):
            reps.append(fit(rng.integers(0, R, R)).occupations)
    best.stderr = np.std(np.array(reps), axis=0, ddof=1)
    return best


# --- density-ripple thermometry -------------------------------------------


def ripple_forward_model(basis: ModeBasis, n1d: float, m: float, t_tof: float, R: int, seed: int, *,
                         sigma_res: float = DEFAULT_RESOLUTION, max_shift: float = 20e-6,
                         threads: Optional[int] = None) -> Callable[[float], RippleCorrelation]:
    """``T -> g2`` reference curves from single-gas thermal phases of ``basis``.

    Each temperature uses its own seed derived from ``seed`` and its index
    in call order, so references never share noise with the observation.
    """
    calls = [0]

    def forward(T: float) -> RippleCorrelation:
        calls[0] += 1
        ens = sample_thermal(basis, T, R, seed + 7919 * calls[0], sector="single", threads=threads)
        return ripple_curve(ens.fields().phi, basis.grid, n1d, t_tof, m,
                            sigma_res=sigma_res, max_shift=max_shift)

    return forward


def fit_temperature_ripples(observed: RippleCorrelation, forward, T_grid: Sequence[float],
                            signal_sigma: float = 3.0) -> FitReport:
    """Temperature minimising chi^2 between an observed ripple ``g2`` and simulated references.

    ``forward`` is either a callable ``T -> RippleCorrelation`` (same forward
    model, independent seeds) or a precomputed list of references on
    ``T_grid``.  Reference curves are interpolated linearly in ln T.  The
    chi^2 uses the covariance between shifts (observation plus reference
    noise); the interval is the chi^2 + 1 contour.
    """
    T_grid = np.asarray(T_grid, dtype=float)
    if np.any(np.diff(T_grid) <= 0):
        raise ValueError("T_grid must be strictly increasing")
    refs = list(forward) if not callable(forward) else [forward(float(T)) for T in T_grid]
    if len(refs) != len(T_grid):
        raise ValueError("need one reference curve per grid temperature")
    G = np.array([r.g2 for r in refs])
    g_obs = np.asarray(observed.g2)
    if G.shape[1] != g_obs.size:
        raise ValueError("reference and observed curves have different lengths")
    flags = []
    amp = g_obs[0] - 1.0
    if not amp > max(signal_sigma * observed.stderr[0], 1e-9):
        flags.append("flat objective: no density-ripple signal above noise")
    cov = observed.covariance() + np.mean([r.covariance() for r in refs], axis=0)
    scale = np.mean(np.diag(cov))
    if not scale > 0:
        cov = np.eye(g_obs.size)
    else:
        cov = cov + 1e-9 * scale * np.eye(g_obs.size)
    cho = linalg.cho_factor(cov)
    logT = np.log(T_grid)

    def chi2(T):
        g = np.array([np.interp(math.log(T), logT, G[:, k]) for k in range(G.shape[1])])
        r = g_obs - g
        return float(r @ linalg.cho_solve(cho, r))

    grid_chi = np.array([chi2(T) for T in T_grid])
    k = int(np.argmin(grid_chi))
    if k in (0, len(T_grid) - 1):
        flags.append("best fit at the boundary of the temperature grid")
    lo_b = T_grid[max(k - 1, 0)]
    hi_b = T_grid[min(k + 1, len(T_grid) - 1)]
    res = optimize.minimize_scalar(chi2, bounds=(lo_b, hi_b), method="bounded",
                                   options={"xatol": 1e-4 * T_grid[k]})
    T_hat, chi_min = float(res.x), float(res.fun)
    if np.ptp(grid_chi) < 1.0:
        flags.append("flat objective: chi^2 varies by less than 1 over the grid")

    def contour(a, b):
        fa, fb = chi2(a) - chi_min - 1.0, chi2(b) - chi_min - 1.0
        if fa * fb > 0:
            return a if abs(fa) < abs(fb) else b
        return optimize.brentq(lambda T: chi2(T) - chi_min - 1.0, a, b)

    ci = (contour(T_grid[0], T_hat) if T_hat > T_grid[0] else T_hat,
          contour(T_hat, T_grid[-1]) if T_hat < T_grid[-1] else T_hat)
    ci = (min(ci[0], T_hat), max(ci[1], T_hat))
    converged = bool(res.success) and not any(f.startswith("flat") for f in flags)
    return FitReport(T_hat, "K", ci, chi_min, int(res.nfev), converged, "ripple-forward-model", flags,
                     {"T_grid": T_grid.tolist(), "chi2_grid": grid_chi.tolist()})
