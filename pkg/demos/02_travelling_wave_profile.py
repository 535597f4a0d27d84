"""A 1D travelling wave from quadrature, compared with the closed form.

Run: python demos/02_travelling_wave_profile.py
"""

import numpy as np

from twave.nonlinearity import gross_pitaevskii
from twave.quadrature1d import build_profile, first_integral_residual, gp_oracle, wave_invariants

gp = gross_pitaevskii()
c = 1.0

# rho = |psi|^2 and the phase theta on a uniform x grid
prof = build_profile(gp, c)
ref = gp_oracle(c)
print("max |rho - rho_exact|     ", np.max(np.abs(prof.rho - ref.rho(prof.x))))
print("max |theta - theta_exact| ", np.max(np.abs(prof.theta - ref.theta(prof.x))))
print("first integral residual   ", first_integral_residual(gp, prof))

# Energy and momentum from the wave integrals: 2/3 and pi/2 - 1 at c = 1.
inv = wave_invariants(gp, prof)
print("energy   ", inv.energy, " exact", ref.energy)
print("momentum ", inv.momentum_valuation, " exact", ref.momentum)
