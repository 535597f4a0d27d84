"""One-dimensional traveling waves by quadrature of the first integral.

A wave of speed c is psi = sqrt(rho) exp(i theta) where the squared modulus
solves (rho')^2 = g(rho, c) = 4 rho V(rho) - c^2 (rho - 1)^2 and the phase
solves theta' = (c/2) (1 - rho) / rho.  The minimum of rho is the turning
point zeta(c), the largest zero of g(., c) in [0, 1) (or, on the upper
branch, the smallest zero above 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from .finite_diff import derivative
from .errors import NoTurningPoint, NumericalError, PreconditionError, UndecidableFiniteness
from .momentum import MomentumClass, class_of, momentum_lifted_1d
from .nonlinearity import (Nonlinearity, discriminant_g, discriminant_g_ds,
                           discriminant_g_dss)

SQRT2 = math.sqrt(2.0)

# a zero of g with |dg/ds| above this (times 1 + c^2) is treated as simple
SIMPLE_ZERO_TOL = 1e-6
# second-derivative level separating a double zero from a higher-order contact
DOUBLE_ZERO_TOL = 1e-3
# below this u the quotient g(zeta + u^2) / u^2 is replaced by its Taylor polynomial
_TAYLOR_U = 1e-4
_UPPER_S_MAX = 1e3


@dataclass(frozen=True)
class TurningPoint:
    """Turning point of the phase-plane orbit at speed ``c``.

    ``zeta`` is zeta(c) on the lower branch and the upper-branch zero on the
    upper branch. ``l_value`` is G(zeta, c) with G anchored at the midpoint
    between zeta and 1; it is ``-inf`` when the zero is not simple.
    """

    c: float
    zeta: float
    branch: str
    l_value: float
    finite: bool
    derivative_g: float
    second_derivative_g: float

    @property
    def anchor(self) -> float:
        return 0.5 * (self.zeta + 1.0)


def _check_speed(c: float) -> float:
    c = abs(float(c))
    if c * c >= 2.0:
        raise PreconditionError(f"supersonic speed c = {c}: c^2 >= 2 admits only constant waves")
    return c


def _scan_grid_lower():
    base = np.linspace(0.0, 1.0, 4001)[:-1]
    near = 1.0 - np.geomspace(2.5e-4, 1e-9, 60)
    return np.concatenate([base, near])


def _find_zero_lower(model: Nonlinearity, c: float) -> float:
    s = _scan_grid_lower()
    g = discriminant_g(model, s, c)
    nonpos = np.nonzero(g <= 0.0)[0]
    # g(0, c) = -c^2 <= 0, so nonpos is never empty
    k = nonpos[-1]
    if g[k] == 0.0:
        return float(s[k])
    if k + 1 >= s.size:
        raise NumericalError("g(., c) is not positive near s = 1", interval=(float(s[k]), 1.0))
    return optimize.brentq(lambda t: float(discriminant_g(model, t, c)), s[k], s[k + 1],
                           xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def _find_zero_upper(model: Nonlinearity, c: float, s_max: float = _UPPER_S_MAX) -> float:
    s = np.concatenate([1.0 + np.geomspace(1e-9, 1e-3, 40)[:-1],
                        np.linspace(1.001, 3.0, 4000), np.geomspace(3.0, s_max, 2000)[1:]])
    g = discriminant_g(model, s, c)
    nonpos = np.nonzero(g <= 0.0)[0]
    if nonpos.size == 0:
        raise NoTurningPoint(f"g(., {c}) > 0 on (1, {s_max}]: no upper-branch wave")
    k = nonpos[0]
    if g[k] == 0.0 or k == 0:
        return float(s[k])
    return optimize.brentq(lambda t: float(discriminant_g(model, t, c)), s[k - 1], s[k],
                           xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def _quotient(model: Nonlinearity, tp: TurningPoint, u):
    """g(s(u), c) / u^2 with s = zeta + u^2 (lower) or zeta - u^2 (upper)."""
    u = np.asarray(u, dtype=float)
    sign = 1.0 if tp.branch == "lower" else -1.0
    g1 = sign * tp.derivative_g
    g2 = tp.second_derivative_g
    out = np.empty_like(u)
    small = np.abs(u) < _TAYLOR_U
    if np.any(small):
        us = u[small]
        out[small] = g1 + 0.5 * g2 * us * us
    big = ~small
    if np.any(big):
        ub = u[big]
        out[big] = discriminant_g(model, tp.zeta + sign * ub * ub, tp.c) / (ub * ub)
    return np.maximum(out, 0.0)


def _s_of_u(tp: TurningPoint, u):
    sign = 1.0 if tp.branch == "lower" else -1.0
    return tp.zeta + sign * np.asarray(u, dtype=float) ** 2


def _integral_from_zeta(model: Nonlinearity, tp: TurningPoint, s: float, weight=None,
                        epsrel: float = 1e-11) -> float:
    """int between zeta and s of weight(tau) / sqrt(g(tau, c)) d tau (nonnegative)."""
    umax = math.sqrt(abs(s - tp.zeta))
    if umax == 0.0:
        return 0.0

    def integrand(u):
        q = _quotient(model, tp, u.ravel()).reshape(u.shape)
        w = 1.0 if weight is None else weight(_s_of_u(tp, u))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(q > 0.0, 2.0 * w / np.sqrt(q), 0.0)

    pts = [p for p in (math.sqrt(abs(tp.zeta)) * 3.0, 0.5 * umax) if 0 < p < umax]
    # near-tangential zeros of g between zeta and s produce sharp peaks of the
    # integrand; hand their locations to the adaptive rule as break points
    us = np.linspace(0.0, umax, 801)[1:-1]
    q = _quotient(model, tp, us)
    interior = (q[1:-1] < q[:-2]) & (q[1:-1] <= q[2:]) & (q[1:-1] < 0.05 * q.max())
    pts.extend(us[1:-1][interior].tolist())
    # a nearly double zero at zeta itself: the integrand varies on the scale
    # sqrt(g'/g'') in u, far below umax
    g1 = abs(tp.derivative_g)
    g2 = abs(tp.second_derivative_g)
    if g2 > 0 and g1 < 1e-2 * g2 * umax**2:
        w = math.sqrt(g1 / g2)
        pts.extend(p for p in w * np.geomspace(1.0, 1e6, 13) if p < umax)
    # s close to 1, where 1 / sqrt(g) ~ 1 / |1 - s| just beyond the interval
    gap, span = abs(1.0 - s), abs(1.0 - tp.zeta)
    near_pole = 0.0 < gap < 1e-3 * span
    if near_pole:
        # pieces no wider than their distance to the pole
        ds = span * np.geomspace(0.5, gap / span, int(math.ceil(math.log2(0.5 * span / gap))) + 1)[:-1]
        pts.extend(np.sqrt(np.abs(1.0 - np.sign(1.0 - tp.zeta) * ds - tp.zeta)).tolist())
    pts = sorted(set(pts))
    # tanh-sinh on each sub-interval clusters nodes at the break points
    edges = np.array([0.0] + [p for p in pts if 0.0 < p < umax] + [umax])
    if near_pole:
        # 1 - s carries a relative rounding error of order 1e-16 / gap there,
        # which bounds the attainable accuracy
        epsrel = max(epsrel, 1e-14 / gap)
    res = integrate.tanhsinh(integrand, edges[:-1], edges[1:], rtol=epsrel, atol=0.0,
                             maxlevel=14)
    val = float(np.sum(res.integral))
    err = float(np.sum(res.error))
    # short pieces may stop at the maximum level with an error that is tiny
    # relative to the whole integral; judge the sum
    scale = max(abs(val), 1e-300)
    ok = err <= (1e3 if np.all(res.success) else 1.0) * epsrel * scale
    if not np.isfinite(val) or not ok:
        raise NumericalError("singular-endpoint quadrature did not converge",
                             interval=(tp.zeta, s), estimate=val, abserr=err)
    return val


def turning_point(model: Nonlinearity, c: float, branch: str = "lower") -> TurningPoint:
    """Locate zeta(c) (or the upper-branch zero) and classify its order.

    Raises ``UndecidableFiniteness`` when both dg/ds and d^2g/ds^2 vanish at
    the zero (a contact of order three or more, where no wave is built).
    """
    c = _check_speed(c)
    if branch == "lower":
        zeta = _find_zero_lower(model, c)
    elif branch == "upper":
        zeta = _find_zero_upper(model, c)
    else:
        raise PreconditionError(f"unknown branch {branch!r}")
    d1 = float(discriminant_g_ds(model, zeta, c))
    d2 = float(discriminant_g_dss(model, zeta, c))
    scale = 1.0 + c * c
    slope = d1 if branch == "lower" else -d1
    if slope > SIMPLE_ZERO_TOL * scale:
        tp = TurningPoint(c, zeta, branch, 0.0, True, d1, d2)
        l_value = -_integral_from_zeta(model, tp, tp.anchor)
        if branch == "upper":
            l_value = -l_value
        return TurningPoint(c, zeta, branch, l_value, True, d1, d2)
    if abs(d2) > DOUBLE_ZERO_TOL * scale:
        return TurningPoint(c, zeta, branch, -math.inf, False, d1, d2)
    raise UndecidableFiniteness(
        f"degenerate turning point at s = {zeta:.12g} for c = {c}: "
        f"dg/ds = {d1:.3e}, d2g/ds2 = {d2:.3e}")


def primitive_G(model: Nonlinearity, c: float, s: float, branch: str = "lower",
                tp: Optional[TurningPoint] = None) -> float:
    """G(s, c) = int_a^s d tau / sqrt(g(tau, c)) with anchor a = (zeta + 1) / 2.

    The inverse square-root singularity at zeta is removed by tau = zeta + u^2;
    the smooth remainder is integrated by tanh-sinh quadrature.
    """
    tp = tp or turning_point(model, c, branch)
    if not tp.finite:
        raise NumericalError("G is not defined at a non-simple turning point",
                             interval=(tp.zeta, 1.0))
    lo, hi = sorted((tp.zeta, 1.0))
    if not (lo < s < hi):
        raise PreconditionError(f"s must lie strictly between {lo} and {hi}")
    val = _integral_from_zeta(model, tp, s) - _integral_from_zeta(model, tp, tp.anchor)
    return val if branch == "lower" else -val


# ---------------------------------------------------------------------------
# profiles


@dataclass
class WaveProfile1D:
    """Sampled traveling wave; ``rho`` is the squared modulus, ``theta`` the phase."""

    c: float
    x: np.ndarray
    rho: np.ndarray
    theta: np.ndarray
    branch: str = "lower"
    zeta: float = float("nan")
    model_name: str = ""

    @property
    def modulus(self) -> np.ndarray:
        return np.sqrt(self.rho)

    @property
    def psi(self) -> np.ndarray:
        return self.modulus * np.exp(1j * self.theta)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])


def default_x_max(c: float) -> float:
    return 12.0 / math.sqrt(2.0 - c * c)


def _half_grid(x_max: float, n_points: int) -> np.ndarray:
    if n_points % 2 == 0:
        n_points += 1
    return np.linspace(0.0, x_max, n_points // 2 + 1)


def _mirror(xh, even, odd):
    x = np.concatenate([-xh[:0:-1], xh])
    return x, np.concatenate([even[:0:-1], even]), np.concatenate([-odd[:0:-1], odd])


def build_profile(model: Nonlinearity, c: float, branch: str = "lower",
                  x_max: Optional[float] = None, n_points: int = 4001) -> WaveProfile1D:
    """Traveling wave of speed ``c`` on a symmetric grid of ``n_points`` points.

    For x > 0 the squared modulus rho = zeta + u^2 (upper branch: zeta - u^2)
    is obtained from the regular ODE u' = sqrt(g / u^2) / 2, u(0) = 0, whose
    solution starts as rho = zeta + dg/ds(zeta) x^2 / 4. The phase is
    integrated alongside. Negative c gives the complex conjugate wave.
    """
    sign_c = -1.0 if c < 0 else 1.0
    c_abs = _check_speed(c)
    x_max = x_max or default_x_max(c_abs)
    xh = _half_grid(x_max, n_points)

    if c_abs == 0.0 and branch == "lower":
        if not model.positive_below_one():
            raise NoTurningPoint("V vanishes in [0, 1): no black soliton")
        tp = turning_point(model, 0.0, "lower")
        if tp.zeta != 0.0:
            raise NoTurningPoint("black soliton requires zeta(0) = 0")
    else:
        tp = turning_point(model, c_abs, branch)
    if not tp.finite:
        raise UndecidableFiniteness(
            f"L(c) = -inf at c = {c_abs}: the orbit never leaves the turning point")

    sgn = 1.0 if branch == "lower" else -1.0

    def rhs(_x, y):
        u = y[0]
        q = float(_quotient(model, tp, np.array([u]))[0])
        rho = tp.zeta + sgn * u * u
        dtheta = 0.5 * c_abs * (1.0 - rho) / rho if c_abs > 0 else 0.0
        return [0.5 * math.sqrt(q), dtheta]

    sol = integrate.solve_ivp(rhs, (0.0, xh[-1]), [0.0, 0.0], method="DOP853", t_eval=xh,
                              rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise NumericalError(f"profile integration failed: {sol.message}")
    u, th = sol.y
    rho_h = tp.zeta + sgn * u * u
    if c_abs == 0.0:
        # black soliton psi = i sgn(x) sqrt(rho): phase +-pi/2, theta(0) = 0
        th = np.full_like(xh, 0.5 * math.pi)
        th[0] = 0.0
    x, rho, theta = _mirror(xh, rho_h, th)
    return WaveProfile1D(c=sign_c * c_abs, x=x, rho=rho, theta=sign_c * theta, branch=branch,
                         zeta=tp.zeta, model_name=model.name)


def first_integral_residual(model: Nonlinearity, profile: WaveProfile1D) -> float:
    """max |(rho')^2 + c^2 (rho - 1)^2 - 4 rho V(rho)| with rho' by finite differences."""
    drho = derivative(profile.rho, profile.dx)
    res = drho**2 - discriminant_g(model, profile.rho, profile.c)
    return float(np.max(np.abs(res)))


# ---------------------------------------------------------------------------
# energy and momentum


@dataclass
class WaveInvariants:
    c: float
    energy: float
    momentum_valuation: float
    momentum_class: MomentumClass
    decay_rate: float
    branch: str = "lower"
    kinetic: float = float("nan")
    potential: float = float("nan")
    energy_x: float = float("nan")
    momentum_x: float = float("nan")
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "energy": self.energy,
            "momentum_valuation": self.momentum_valuation,
            "momentum_canonical": self.momentum_class.canonical,
            "decay_rate": self.decay_rate,
            "branch": self.branch,
        }


def wave_integrals(model: Nonlinearity, c: float, branch: str = "lower",
                   tp: Optional[TurningPoint] = None) -> tuple:
    """(energy, momentum valuation) from the s-integrals

    E = 4 int V(s) / sqrt(g) ds,  p = c int (1 - s)^2 / (s sqrt(g)) ds

    taken between the turning point and 1. At c = 0 the momentum valuation of
    the black soliton is pi.
    """
    sign_c = -1.0 if c < 0 else 1.0
    c_abs = _check_speed(c)
    tp = tp or turning_point(model, c_abs, branch)
    if not tp.finite:
        raise UndecidableFiniteness(f"no wave at c = {c_abs}: L(c) = -inf")
    energy = 4.0 * _integral_from_zeta(model, tp, 1.0, weight=lambda s: model.V(s))
    if c_abs == 0.0:
        p = math.pi
    else:
        p = c_abs * _integral_from_zeta(model, tp, 1.0, weight=lambda s: (1.0 - s) ** 2 / s)
    return float(energy), sign_c * float(p)


def fit_decay_rate(profile: WaveProfile1D, window=(1e-8, 1e-3)) -> float:
    """Exponential rate of |rho - 1| by log-linear least squares on x > 0."""
    dev = np.abs(profile.rho - 1.0)
    sel = (profile.x > 0) & (dev >= window[0]) & (dev <= window[1])
    if sel.sum() < 5:
        return float("nan")
    slope, _ = np.polyfit(profile.x[sel], np.log(dev[sel]), 1)
    return float(-slope)


def wave_invariants(model: Nonlinearity, profile: WaveProfile1D, rtol: float = 1e-6) -> WaveInvariants:
    """Energy and momentum by the s-integrals and by x-integrals over the samples.

    The x-forms use fourth-order differences of Re psi and Im psi and the
    trapezoid rule. ``DisagreementError`` is raised when the two routes differ
    by more than ``rtol`` relative.
    """
    from .errors import DisagreementError

    energy, p = wave_integrals(model, profile.c, profile.branch)
    h = profile.dx
    psi = profile.psi
    dpsi = derivative(psi.real, h) + 1j * derivative(psi.imag, h)
    kinetic = float(integrate.trapezoid(np.abs(dpsi) ** 2, profile.x))
    potential = float(integrate.trapezoid(model.V(profile.rho), profile.x))
    energy_x = kinetic + potential
    scale = max(abs(energy), 1e-300)
    if abs(energy_x - energy) > rtol * scale:
        raise DisagreementError(
            f"energy: s-form {energy!r} vs x-form {energy_x!r}", estimate=energy_x,
            abserr=abs(energy_x - energy))
    if profile.c != 0.0:
        p_x = momentum_lifted_1d(profile.modulus, profile.theta, profile.x)
        if abs(p_x - p) > rtol * max(abs(p), 1e-300):
            raise DisagreementError(f"momentum: s-form {p!r} vs x-form {p_x!r}",
                                    estimate=p_x, abserr=abs(p_x - p))
    else:
        p_x = float("nan")
    return WaveInvariants(c=profile.c, energy=energy, momentum_valuation=p,
                          momentum_class=class_of(p), decay_rate=fit_decay_rate(profile),
                          branch=profile.branch, kinetic=kinetic, potential=potential,
                          energy_x=energy_x, momentum_x=p_x)


# ---------------------------------------------------------------------------
# closed forms for F(s) = 1 - s


@dataclass(frozen=True)
class GPWave:
    c: float
    rho: object
    theta: object
    energy: float
    momentum: float
    G: object


def gp_oracle(c: float) -> GPWave:
    """Closed-form dark soliton of the Gross-Pitaevskii nonlinearity, 0 <= c < sqrt(2)."""
    c = float(c)
    if not (0.0 <= c < SQRT2):
        raise PreconditionError("gp_oracle needs 0 <= c < sqrt(2)")
    k = math.sqrt(2.0 - c * c)

    def rho(x):
        return 0.5 * c * c + 0.5 * k * k * np.tanh(0.5 * k * np.asarray(x)) ** 2

    def theta(x):
        t = np.tanh(0.5 * k * np.asarray(x))
        if c == 0.0:
            return 0.5 * math.pi * np.sign(t)
        return np.arctan(k / c * t)

    def G(s):
        r = np.sqrt(2.0 * np.asarray(s) - c * c)
        return np.log(np.abs((k + r) / (k - r))) / k

    energy = (2.0 / 3.0) * k**3
    momentum = math.pi if c == 0.0 else 2.0 * math.atan(k / c) - c * k
    return GPWave(c=c, rho=rho, theta=theta, energy=energy, momentum=momentum, G=G)


def black_soliton_threshold(model: Nonlinearity) -> float:
    """4 int_0^1 sqrt(V(s^2)) ds, the least energy of a wave with a zero."""
    if not model.positive_below_one():
        raise PreconditionError("threshold needs V > 0 on [0, 1)")
    val, err = integrate.quad(lambda t: math.sqrt(max(float(model.V(t * t)), 0.0)), 0.0, 1.0,
                              epsabs=1e-13, epsrel=1e-12, limit=400)
    if err > 1e-9:
        raise NumericalError("threshold quadrature did not converge", interval=(0.0, 1.0),
                             estimate=val, abserr=err)
    return 4.0 * val
