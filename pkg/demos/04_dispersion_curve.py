"""Energy-momentum curve of the 1D waves and its lower envelope.

Run: python demos/04_dispersion_curve.py
"""

import math

import numpy as np

from twave.dispersion1d import diagnostics, emin1, envelope, sweep_dispersion
from twave.nonlinearity import example55, gross_pitaevskii

gp = gross_pitaevskii()
curve = sweep_dispersion(gp, np.linspace(0.02, 1.4, 200))
print("E at p = pi/2 - 1:", emin1(curve, math.pi / 2 - 1), "(exact 2/3)")

# The envelope stays below the sonic line E = sqrt(2) p.
env = envelope(curve, n=9)
for p, e in zip(env.p, env.energy):
    print(f"p = {p:.4f}  E = {e:.6f}  sqrt(2) p = {math.sqrt(2) * p:.6f}")

d = diagnostics(curve)
print("concave:", d.concave, " Lipschitz constant:", d.lipschitz_constant)
print("black soliton threshold:", d.threshold, "(exact 4 sqrt(2) / 3 =", 4 * math.sqrt(2) / 3, ")")

# A model whose threshold exceeds sqrt(2) pi: the curve meets p = pi with a cusp.
m = example55()
d55 = diagnostics(sweep_dispersion(m, np.linspace(0.02, 1.4, 120), refine=True))
print("example55 cusp points (p, left slope, right slope):", d55.cusp_points[:1])
