"""Traveling waves of defocusing NLS with nonzero boundary conditions.

One-dimensional waves by quadrature, energy-momentum dispersion curves and
fixed-momentum energy minimization on periodic strips.
"""

__version__ = "0.1.0"
