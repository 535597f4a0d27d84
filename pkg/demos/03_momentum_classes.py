"""Momentum is only defined modulo 2 pi; classes and their absolute value.

Run: python demos/03_momentum_classes.py
"""

import math

import numpy as np

from twave.momentum import class_of, momentum_compact_support, momentum_lifted_1d

# Representatives that differ by 2 pi give the same class.
a, b = class_of(-0.3), class_of(2 * math.pi - 0.3)
print("canonical", a.canonical, b.canonical, " distance", a.distance(b))
print("|[3 pi / 2]| =", abs(class_of(1.5 * math.pi)))

# A unit-modulus field whose phase winds once has momentum -2 pi by the
# compact-support formula, which is the zero class.
x = np.linspace(-10, 10, 4001)
t = np.clip((x + 2) / 4, 0, 1)
theta = 2 * math.pi * t**3 * (10 - 15 * t + 6 * t**2)
p = momentum_compact_support(np.exp(1j * theta), x)
print("winding field: p =", p, " class", abs(class_of(p)))

# For a field with no zeros the lifted formula int (1 - rho^2) theta' applies.
rho = 1 - 0.5 * np.exp(-x**2)
print("lifted momentum of a dip with phase step:", momentum_lifted_1d(rho, np.tanh(x), x))
