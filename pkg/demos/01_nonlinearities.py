"""Nonlinearities and the structural assumptions they must satisfy.

Run: python demos/01_nonlinearities.py
"""

import numpy as np

from twave.nonlinearity import builtin_models, check_assumptions, discriminant_g, gross_pitaevskii

# The Gross-Pitaevskii model F(s) = 1 - s and its potential V(s) = (1 - s)^2 / 2.
gp = gross_pitaevskii()
s = np.linspace(0.0, 2.0, 5)
print("s    ", s)
print("F(s) ", gp.F(s))
print("V(s) ", gp.V(s))

# Every builtin model is checked on a sample grid; each check reports a witness.
for m in builtin_models():
    rep = check_assumptions(m)
    print(f"{m.name:>10}: passed={rep.passed}",
          ", ".join(f"{c.id}={c.status}" for c in rep.checks))

# Travelling waves of speed c live where g(s, c) = 4 s V(s) - c^2 (s - 1)^2 > 0.
# For GP and c = 1 the turning point is s = 1/2.
print("g(0.5, 1) =", discriminant_g(gp, 0.5, 1.0))
print("g(0.2, 1) =", discriminant_g(gp, 0.2, 1.0))
