"""Density-ripple thermometry: expand thermal phase profiles, fit the temperature.

Run: python3 demos/ripple_thermometry.py   (about 30 s)
"""
import numpy as np

from quasicondensate import (SpatialGrid, build_box_basis, derive_scales, fit_temperature_ripples,
                             rb87, ripple_curve, ripple_forward_model, sample_thermal)

L, T_true, m = 400e-6, 100e-9, 1.443e-25
s = derive_scales(rb87(60e6, temperature=T_true, length=L))
basis = build_box_basis(L, s.sound_speed, 200, SpatialGrid(L, 1024), s.g1d)

phi = sample_thermal(basis, T_true, 500, seed=21, sector="single").fields().phi
observed = ripple_curve(phi, basis.grid, s.n1d, 16e-3, m)
print("x (um)   g2")
for x, g in zip(observed.x[::4], observed.g2[::4]):
    print(f"{x * 1e6:6.2f}   {g:.4f}")

forward = ripple_forward_model(basis, s.n1d, m, 16e-3, R=2000, seed=22)
T_grid = T_true * np.geomspace(0.5, 2.0, 12)
fit = fit_temperature_ripples(observed, forward, T_grid)
print(f"fitted T = {fit.estimate * 1e9:.1f} nK, interval {fit.ci[0] * 1e9:.1f}-{fit.ci[1] * 1e9:.1f} nK "
      f"(true {T_true * 1e9:.0f} nK), flags: {fit.flags or 'none'}")
