"""Momentum modulo 2 pi and discrete momentum functionals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import BoundaryNotNormalized, LiftingUnavailable
from .finite_diff import derivative

TWO_PI = 2.0 * math.pi


def _wrap(p: float) -> float:
    r = math.fmod(float(p), TWO_PI)
    if r < 0.0:
        r += TWO_PI
    # fmod of a value just below a multiple of 2 pi can round up to 2 pi
    if r >= TWO_PI:
        r = 0.0
    return r


@dataclass(frozen=True)
class MomentumClass:
    """A real number modulo 2 pi, stored by its representative in [0, 2 pi)."""

    canonical: float

    def __post_init__(self):
        if not (0.0 <= self.canonical < TWO_PI):
            object.__setattr__(self, "canonical", _wrap(self.canonical))

    def __add__(self, other: "MomentumClass") -> "MomentumClass":
        return MomentumClass(_wrap(self.canonical + other.canonical))

    def __neg__(self) -> "MomentumClass":
        return MomentumClass(_wrap(-self.canonical))

    def __sub__(self, other: "MomentumClass") -> "MomentumClass":
        return self + (-other)

    def __abs__(self) -> float:
        return abs_class(self)

    def distance(self, other: "MomentumClass") -> float:
        """Length of the shortest arc between two classes."""
        return abs_class(self - other)

    def to_dict(self, valuation: float | None = None) -> dict:
        out = {"canonical": self.canonical, "abs_class": abs_class(self)}
        if valuation is not None:
            out = {"valuation": float(valuation), **out}
        return out


def class_of(p: float) -> MomentumClass:
    return MomentumClass(_wrap(p))


def abs_class(q: MomentumClass) -> float:
    """min over representatives of |p|, a number in [0, pi]."""
    return min(q.canonical, TWO_PI - q.canonical)


def _dx(values: np.ndarray, x: np.ndarray, axis: int = 0) -> np.ndarray:
    """d/dx by fourth-order differences on uniform grids, second order otherwise."""
    x = np.asarray(x, dtype=float)
    h = np.diff(x)
    if x.size >= 5 and np.allclose(h, h[0], rtol=1e-10, atol=0.0):
        return np.moveaxis(derivative(np.moveaxis(values, axis, 0), h[0]), 0, axis)
    return np.gradient(values, x, axis=axis, edge_order=2)


def momentum_lifted_1d(rho, theta, x) -> float:
    """Valuation int (1 - rho^2) theta' dx for a lifted field rho exp(i theta).

    ``rho`` is the modulus |psi| and ``theta`` an unwrapped phase.
    """
    rho = np.asarray(rho, dtype=float)
    if np.min(rho) <= 0.0:
        raise LiftingUnavailable("modulus vanishes: no lifting")
    dtheta = _dx(np.asarray(theta, dtype=float), x)
    return float(integrate.trapezoid((1.0 - rho**2) * dtheta, x))


def momentum_lifted_2d(field) -> float:
    """Valuation int int (1 - rho^2) theta_x dx dy of a ``Field2D``.

    Uses the same edge-based discretisation as the 2D energy, so that the
    discrete constraint is exactly the quantity held fixed by the minimiser:
    sum over x-edges of (1 - rho_i rho_{i+1}) (theta_{i+1} - theta_i) dy.
    """
    rho, theta = field.rho, field.theta
    if np.min(rho) <= 0.0:
        raise LiftingUnavailable("modulus vanishes: no lifting")
    edge = (1.0 - rho[1:] * rho[:-1]) * np.diff(theta, axis=0)
    return float(edge.sum() * field.dy)


def momentum_compact_support(psi, x, y=None, tol: float = 1e-6) -> float:
    """int <i psi_x, psi> = -int Im(conj(psi) psi_x) for psi = 1 at both x-ends.

    ``psi`` is complex, shape (nx,) or (nx, ny) with y periodic of period 1
    (``y`` is accepted for symmetry with the sampling but only its size matters).
    """
    psi = np.asarray(psi, dtype=complex)
    if np.max(np.abs(psi[0] - 1.0)) > tol or np.max(np.abs(psi[-1] - 1.0)) > tol:
        raise BoundaryNotNormalized("psi must equal 1 at both x-boundaries")
    dpsi = _dx(psi.real, x) + 1j * _dx(psi.imag, x)
    dens = -np.imag(np.conj(psi) * dpsi)
    val = integrate.trapezoid(dens, x, axis=0)
    if psi.ndim == 2:
        val = np.mean(val)
    return float(val)
