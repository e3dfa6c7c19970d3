"""Fast split of a box gas: the relative phase looks thermal at k_B T = g n / 2.

Run: python3 demos/prethermalization.py
"""
import numpy as np
from scipy.constants import k as k_B

from quasicondensate import (SpatialGrid, build_box_basis, build_calibration, derive_scales,
                             fit_teff_from_decay, rb87, sample_fast_split, stationary_correlation)

L = 100e-6
params = rb87(60e6, length=L)
scales = derive_scales(params)
basis = build_box_basis(L, scales.sound_speed, 50, SpatialGrid(L, 256), scales.g1d)
print(f"c = {scales.sound_speed * 1e3:.3f} mm/s, L/c = {basis.crossing_time * 1e3:.2f} ms")
print(f"predicted T_eff = g n / 2k_B = {scales.T_eff * 1e9:.2f} nK")

ens = sample_fast_split(basis, scales, R=2000, seed=1)
table = build_calibration(basis, scales.T_eff / 4, 4 * scales.T_eff, R=1000, seed=2)

for frac in (0.0, 0.05, 0.1, 0.25):
    curve = stationary_correlation(ens, t=frac * basis.crossing_time)
    if frac == 0.0:
        print(f"t = 0: C(zbar) = {curve.values[-1]:.3f} at the largest separation (no phase noise yet)")
        continue
    fit = fit_teff_from_decay(curve, table)
    note = "" if fit.reliable else f"  [{'; '.join(fit.flags)}]"
    print(f"t = {frac:.2f} L/c: T_eff fit = {fit.estimate * 1e9:6.2f} nK "
          f"(ratio {fit.estimate / scales.T_eff:.3f}){note}")

# the decay length is set by the interaction, not by the density
for n in (30e6, 60e6, 120e6):
    s = derive_scales(rb87(n, length=L))
    print(f"n = {n * 1e-6:5.0f} /um: lambda_eff = {s.lambda_eff * 1e6:.3f} um, "
          f"k_B T_eff / (g n) = {k_B * s.T_eff / (s.g1d * n):.2f}")
