"""Fixed-momentum minimisation on a periodic strip at a large period.

At lambda = 2 the minimiser is the y-independent 1D wave, so the energy
converges to 2/3 and the multiplier (the speed) to 1.

Run: python demos/05_strip_minimizer.py
"""

import math

from twave.minimize2d import minimize_at_momentum
from twave.nonlinearity import gross_pitaevskii

gp = gross_pitaevskii()
p = math.pi / 2 - 1

for nx, ny in ((512, 16), (1024, 32), (2048, 64)):
    r = minimize_at_momentum(gp, 2.0, p, "wave", nx=nx, ny=ny)
    print(f"{nx:5d} x {ny:3d}: E - 2/3 = {r.energy - 2 / 3:+.2e}  c = {r.multiplier:.6f}  "
          f"residual = {r.el_residual_l2:.2e}  two_dim = {r.two_dimensionality:.1e}  "
          f"iterations = {r.iterations}")
