"""Phonon-ensemble simulation and analysis of one-dimensional quasicondensates.

Typical use::

    from quasicondensate import rb87, derive_scales, SpatialGrid, build_box_basis
    from quasicondensate import sample_fast_split, stationary_correlation

    params = rb87(60e6, length=100e-6)
    scales = derive_scales(params)
    grid = SpatialGrid(100e-6, 256)
    basis = build_box_basis(100e-6, scales.sound_speed, 50, grid, scales.g1d)
    ens = sample_fast_split(basis, scales, R=2000, seed=1)
    curve = stationary_correlation(ens, t=0.25 * basis.crossing_time)
"""

__version__ = "0.1.0"

from .scales import (Box, ConfinementResonanceError, DerivedScales, GasParameters, Harmonic,
                     RegimeReport, check_1d_regime, compute_g1d, compute_g1d_weak, derive_scales,
                     rb87, thermal_coherence_length)
from .modes import (ModeBasis, ResolutionError, SpatialGrid, amplitudes_from_fields,
                    build_box_basis, build_harmonic_basis, default_mode_count,
                    fields_from_amplitudes)
from .ensembles import (FieldEnsemble, PhononEnsemble, combine_sectors, number_imbalance,
                        phase_diffusion_constant, sample_binomial_split, sample_fast_split,
                        sample_phase_random_walk,
                        sample_squeezed_split, sample_thermal, shot_noise_occupations,
                        split_thermal_gas, thermal_occupations)
from .sinegordon import SamplerConvergenceError, sample_sine_gordon
from .dynamics import (CoolingTrace, EvolutionPlan, evolve, evolve_series, recurrence_time,
                       simulate_quench_cooling)
from .observables import (CorrelationResult, FdfHistogram, contrast_fdf, correlation_trace,
                          light_cone_scan, mean_sq_contrast_vs_length, npoint_phase_correlation,
                          phase_correlation_matrix, phase_diff_fdf, side_peak_contrast,
                          stationary_correlation)
from .tof import TofProfile, blur, expand_tof, ripple_correlation, ripple_curve
from .fitting import (CalibrationTable, FitReport, GgeOccupations, build_calibration,
                      fit_gge, fit_gge_bootstrap, fit_teff_from_decay, fit_temperature_ripples,
                      ripple_forward_model)
