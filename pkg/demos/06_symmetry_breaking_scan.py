"""Scan of the period lambda at fixed momentum.

Below a critical period the minimiser stops being y-independent and its
energy drops below the 1D value. The scan brackets that period.
This takes about half a minute.

Run: python demos/06_symmetry_breaking_scan.py
"""

import numpy as np

from twave.dispersion1d import emin1, sweep_dispersion
from twave.minimize2d import MinimizeOptions, lambda_scan, parse_lambda_grid
from twave.nonlinearity import gross_pitaevskii

gp = gross_pitaevskii()
p = 1.0
curve = sweep_dispersion(gp, np.linspace(0.02, 1.4, 200))
e1 = emin1(curve, p)

scan = lambda_scan(gp, p, parse_lambda_grid("0.05:0.2:geometric:7"), nx=256, ny=16,
                   opts=MinimizeOptions(max_iter=4000))
print(f"1D energy {e1:.6f}, grid tolerance {scan.grid_tol:.1e}")
for e in scan.entries:
    print(f"lambda = {e.lam:.4f}  E = {e.energy:.6f}  E - E1 = {e.energy - e1:+.2e}  "
          f"two_dim = {e.two_dimensionality:.3f}")
print("status:", scan.status, " bracket:", scan.lambda_s_bracket)
