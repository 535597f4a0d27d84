"""Nonlinearity models F, V = int_s^1 F and numerical checks of their structure.

A model is normalised so that F(1) = 0 and F'(1) = -1, which gives
V(s) = (s - 1)**2 / 2 + o((s - 1)**2) near s = 1.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import NumericalError, PreconditionError

ASSUMPTION_IDS = ("A1", "A2", "B1", "B2")

_V_QUAD_TOL = 1e-10


def _as_array(s):
    return np.asarray(s, dtype=float)


def _step_value(t):
    # S(t) = 1 - S(1 - t); evaluating the polynomial on the half nearer 0
    # keeps the rounding error relative to min(S, 1 - S)
    def poly(r):
        return r**5 * (126.0 - 420.0 * r + 540.0 * r**2 - 315.0 * r**3 + 70.0 * r**4)

    return np.where(t <= 0.5, poly(t), 1.0 - poly(1.0 - t))


def smoothstep_complement(t):
    """1 - S(t), accurate when S(t) is close to 1."""
    return _step_value(1.0 - np.clip(t, 0.0, 1.0))


def smoothstep(t):
    """C^4 smoothstep on [0, 1]: value, first and second derivative.

    S(t) = t^5 (126 - 420 t + 540 t^2 - 315 t^3 + 70 t^4) has four vanishing
    derivatives at both ends, so a blend of smooth potentials is C^4 and the
    resulting wave profiles are smooth enough for fourth-order differences.
    """
    t = np.clip(t, 0.0, 1.0)
    w = _step_value(t)
    dw = 630.0 * t**4 * (1.0 - t) ** 4
    d2w = 2520.0 * t**3 * (1.0 - t) ** 3 * (1.0 - 2.0 * t)
    return w, dw, d2w


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """A defocusing nonlinearity F together with its potential V.

    ``f``, ``v`` and the optional ``f_prime`` are vectorised callables of
    s >= 0 (s is the squared modulus). ``growth_p0`` and
    ``coercivity_gamma``/``coercivity_s0`` are ``None`` when unknown.
    """

    name: str
    f: Callable
    v: Callable
    f_prime: Optional[Callable] = None
    growth_p0: Optional[float] = None
    coercivity_gamma: Optional[float] = None
    coercivity_s0: Optional[float] = None
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    regularity: str = "smooth"

    def F(self, s):
        return self.f(_as_array(s))

    def V(self, s):
        return self.v(_as_array(s))

    def dF(self, s):
        """F'(s); central difference with step max(1e-6, 1e-6 |s|) if not supplied."""
        s = _as_array(s)
        if self.f_prime is not None:
            return self.f_prime(s)
        h = np.maximum(1e-6, 1e-6 * np.abs(s))
        lo = np.maximum(s - h, 0.0)
        hi = s + h
        return (self.f(hi) - self.f(lo)) / (hi - lo)

    @property
    def model_hash(self) -> str:
        payload = json.dumps({"kind": self.kind, "name": self.name, "params": self.params},
                             sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def positive_below_one(self, n: int = 2001) -> bool:
        """True when V > 0 on the sample grid of [0, 1)."""
        s = np.linspace(0.0, 1.0, n)[:-1]
        return bool(np.all(self.V(s) > 0.0))

    def __repr__(self):
        return f"Nonlinearity({self.name!r}, kind={self.kind!r})"


def potential_from_f(f: Callable) -> Callable:
    """V(s) = int_s^1 F by adaptive Gauss-Kronrod quadrature (abs tol 1e-10)."""

    def v_scalar(s):
        val, err = integrate.quad(f, s, 1.0, epsabs=_V_QUAD_TOL, epsrel=1e-12, limit=200)
        if err > 1e3 * _V_QUAD_TOL:
            raise NumericalError("quadrature of F failed", interval=(s, 1.0), estimate=val, abserr=err)
        return val

    vec = np.vectorize(v_scalar, otypes=[float])

    def v(s):
        out = vec(s)
        return out if np.ndim(out) else float(out)

    return v


def from_f(name: str, f: Callable, f_prime: Optional[Callable] = None, **meta) -> Nonlinearity:
    """Model defined through F only; V is obtained by quadrature."""
    return Nonlinearity(name=name, f=f, v=potential_from_f(f), f_prime=f_prime, **meta)


def from_potential(name: str, v: Callable, dv: Callable, d2v: Optional[Callable] = None,
                   **meta) -> Nonlinearity:
    """Model defined through V and its derivatives (F = -V')."""
    fp = (lambda s: -d2v(s)) if d2v is not None else None
    return Nonlinearity(name=name, f=lambda s: -dv(s), v=v, f_prime=fp, **meta)


# ---------------------------------------------------------------------------
# builtin models


def gross_pitaevskii() -> Nonlinearity:
    return Nonlinearity(
        name="gp",
        f=lambda s: 1.0 - s,
        v=lambda s: 0.5 * (1.0 - s) ** 2,
        f_prime=lambda s: -np.ones_like(s, dtype=float),
        growth_p0=1.0,
        coercivity_gamma=1.0,
        coercivity_s0=4.0,
        kind="gp",
    )


def _blend(t, h, a, b):
    """(1-w) a + w b, w = S(t), for triples (value, d/ds, d2/ds2); ds = h dt."""
    w, dw, d2w = smoothstep(t)
    wc = smoothstep_complement(t)
    dw, d2w = dw / h, d2w / h**2
    a0, a1, a2 = a
    b0, b1, b2 = b
    v0 = wc * a0 + w * b0
    v1 = wc * a1 + w * b1 + dw * (b0 - a0)
    v2 = wc * a2 + w * b2 + 2 * dw * (b1 - a1) + d2w * (b0 - a0)
    return v0, v1, v2


def _gp_triple(s, scale=1.0):
    return 0.5 * scale * (1 - s) ** 2, scale * (s - 1), scale * np.ones_like(s)


def example43(c0: float = 1.2, s0: float = 0.3, a: float = 1.0, delta1: float = 0.1,
              delta2: float = 0.05, blend_low: float = 0.2, low_scale: float = 2.5,
              name: str = "example43") -> Nonlinearity:
    """Potential with a cubic contact g(s, c0) = a^2 (s - s0)^3 at s0.

    Pieces, from left to right:
    ``low_scale * (1-s)^2/2`` on [0, s0-delta2-blend_low], a C^4 blend, the
    cubic-contact form ``(c0^2 (1-s)^2 + a^2 (s-s0)^3) / (4s)`` on
    [s0-delta2, max(s0+delta2, c0^2/2)], a second blend, and
    ``(1-s)^2/2`` on [1-delta1, inf).
    """
    if not (0 < c0 < math.sqrt(2 * (1 - delta1))):
        raise PreconditionError("need 0 < c0 < sqrt(2 (1 - delta1))")
    r1b = s0 - delta2
    r1a = r1b - blend_low
    r2a = max(s0 + delta2, 0.5 * c0**2)
    r2b = 1.0 - delta1
    if r1a <= 0 or r2a >= r2b:
        raise PreconditionError("example43 parameters leave no room for the blends")
    params = dict(c0=c0, s0=s0, a=a, delta1=delta1, delta2=delta2,
                  blend_low=blend_low, low_scale=low_scale)

    def cubic(s):
        n0 = c0**2 * (1 - s) ** 2 + a**2 * (s - s0) ** 3
        n1 = -2 * c0**2 * (1 - s) + 3 * a**2 * (s - s0) ** 2
        n2 = 2 * c0**2 + 6 * a**2 * (s - s0)
        return n0 / (4 * s), n1 / (4 * s) - n0 / (4 * s**2), n2 / (4 * s) - n1 / (2 * s**2) + n0 / (2 * s**3)

    def triple(s):
        s = np.atleast_1d(_as_array(s))
        out = [np.empty_like(s) for _ in range(3)]
        masks = [
            s <= r1a,
            (s > r1a) & (s < r1b),
            (s >= r1b) & (s <= r2a),
            (s > r2a) & (s < r2b),
            s >= r2b,
        ]
        m = masks[0]
        if m.any():
            for o, val in zip(out, _gp_triple(s[m], low_scale)):
                o[m] = val
        m = masks[1]
        if m.any():
            h = r1b - r1a
            vals = _blend((s[m] - r1a) / h, h, _gp_triple(s[m], low_scale), cubic(s[m]))
            for o, val in zip(out, vals):
                o[m] = val
        m = masks[2]
        if m.any():
            for o, val in zip(out, cubic(s[m])):
                o[m] = val
        m = masks[3]
        if m.any():
            h = r2b - r2a
            vals = _blend((s[m] - r2a) / h, h, cubic(s[m]), _gp_triple(s[m]))
            for o, val in zip(out, vals):
                o[m] = val
        m = masks[4]
        if m.any():
            for o, val in zip(out, _gp_triple(s[m])):
                o[m] = val
        return out

    def pick(k):
        def fn(s):
            res = triple(s)[k]
            return res if np.ndim(s) else float(res[0])
        return fn

    v, dv, d2v = pick(0), pick(1), pick(2)
    check = np.linspace(0.0, 1.0, 4001)[:-1]
    if np.any(v(check) <= 0):
        raise PreconditionError("example43 parameters give V <= 0 somewhere on [0, 1)")
    return from_potential(name, v, dv, d2v, growth_p0=1.0, coercivity_gamma=1.0,
                          coercivity_s0=4.0, kind="example43", params=params)


def example56(c0: float = 1.0, s0: float = 0.3, a: float = 1.0, delta1: float = 0.1,
              delta2: float = 0.05, blend_low: float = 0.2, low_scale: float = 0.02,
              name: str = "example56") -> Nonlinearity:
    """Cubic-contact model with c0 in (sqrt(2)/2, sqrt(2(1-delta1))) and a shallow
    potential near 0, so that int_0^1 sqrt(V(s^2)) ds < pi sqrt(2) / 12."""
    if not (math.sqrt(2) / 2 < c0 < math.sqrt(2 * (1 - delta1))):
        raise PreconditionError("need sqrt(2)/2 < c0 < sqrt(2 (1 - delta1))")
    m = example43(c0=c0, s0=s0, a=a, delta1=delta1, delta2=delta2,
                  blend_low=blend_low, low_scale=low_scale, name=name)
    return Nonlinearity(name=m.name, f=m.f, v=m.v, f_prime=m.f_prime, growth_p0=1.0,
                        coercivity_gamma=1.0, coercivity_s0=4.0, kind="example56",
                        params=dict(m.params))


def example55(plateau: float = 4.0, delta: float = 0.2, name: str = "example55") -> Nonlinearity:
    """V = (1-s)^2/2 + plateau * (1 - S(s / (1 - delta))) with S the C^4 smoothstep.

    V is decreasing on [0, 1), equals (1-s)^2/2 on [1 - delta, inf) and, for the
    default plateau, 4 int_0^1 sqrt(V(s^2)) ds > sqrt(2) pi.
    """
    if plateau <= 0 or not (0 < delta < 1):
        raise PreconditionError("need plateau > 0 and 0 < delta < 1")
    width = 1.0 - delta

    def parts(s):
        s = _as_array(s)
        _, dw, d2w = smoothstep(s / width)
        inside = s < width
        bump = np.where(inside, smoothstep_complement(s / width), 0.0)
        dbump = np.where(inside, -dw / width, 0.0)
        d2bump = np.where(inside, -d2w / width**2, 0.0)
        return (0.5 * (1 - s) ** 2 + plateau * bump, (s - 1) + plateau * dbump,
                1.0 + plateau * d2bump)

    return from_potential(name, lambda s: parts(s)[0], lambda s: parts(s)[1],
                          lambda s: parts(s)[2], growth_p0=1.0, coercivity_gamma=1.0,
                          coercivity_s0=4.0, kind="example55",
                          params=dict(plateau=plateau, delta=delta))


def tabulated(s_samples, f_samples, name: str = "table") -> Nonlinearity:
    """Model from sampled (s, F(s)) pairs, monotone-cubic (PCHIP) interpolation.

    The interpolant is C^1; V is the exact antiderivative of the interpolant.
    Outside the table F is extended linearly from the last two samples.
    """
    s_samples = np.asarray(s_samples, dtype=float)
    f_samples = np.asarray(f_samples, dtype=float)
    order = np.argsort(s_samples)
    s_samples, f_samples = s_samples[order], f_samples[order]
    if s_samples[0] > 0 or s_samples[-1] <= 1:
        raise PreconditionError("table must cover [0, s] with s > 1")
    interp = PchipInterpolator(s_samples, f_samples, extrapolate=False)
    dinterp = interp.derivative()
    anti = interp.antiderivative()
    s_end = s_samples[-1]
    f_end = f_samples[-1]
    slope_end = float(dinterp(s_end))
    a_end = float(anti(s_end))
    a_one = float(anti(1.0))

    def f(s):
        s = _as_array(s)
        tail = f_end + slope_end * (s - s_end)
        return np.where(s <= s_end, interp(np.minimum(s, s_end)), tail)

    def fp(s):
        s = _as_array(s)
        return np.where(s <= s_end, dinterp(np.minimum(s, s_end)), slope_end)

    def v(s):
        s = _as_array(s)
        inner = a_one - anti(np.minimum(s, s_end))
        extra = f_end * (s - s_end) + 0.5 * slope_end * (s - s_end) ** 2
        return np.where(s <= s_end, inner, a_one - a_end - extra)

    params = dict(s=s_samples.tolist(), f=f_samples.tolist())
    return Nonlinearity(name=name, f=f, v=v, f_prime=fp, kind="table", params=params,
                        regularity="C1 (monotone cubic interpolation)")


def builtin_models() -> list:
    """GP, the cubic-contact model, the cusp model and the two-speed model."""
    return [gross_pitaevskii(), example43(), example55(), example56()]


def model_by_kind(kind: str, **params) -> Nonlinearity:
    builders = {
        "gp": lambda **kw: gross_pitaevskii(),
        "example43": example43,
        "example55": example55,
        "example56": example56,
    }
    if kind == "table":
        return tabulated(params["s"], params["f"], name=params.get("name", "table"))
    if kind not in builders:
        raise PreconditionError(f"unknown model kind {kind!r}")
    return builders[kind](**params)


# ---------------------------------------------------------------------------
# derived functions


def discriminant_g(model: Nonlinearity, s, c):
    """g(s, c) = 4 s V(s) - c^2 (s - 1)^2."""
    s = _as_array(s)
    return 4.0 * s * model.V(s) - c * c * (s - 1.0) ** 2


def discriminant_g_ds(model: Nonlinearity, s, c):
    """dg/ds = 4 V - 4 s F - 2 c^2 (s - 1)."""
    s = _as_array(s)
    return 4.0 * model.V(s) - 4.0 * s * model.F(s) - 2.0 * c * c * (s - 1.0)


def discriminant_g_dss(model: Nonlinearity, s, c):
    """d^2 g / ds^2 = -8 F - 4 s F' - 2 c^2."""
    s = _as_array(s)
    return -8.0 * model.F(s) - 4.0 * s * model.dF(s) - 2.0 * c * c


def potential_h(model: Nonlinearity, s: float) -> float:
    """H(s) = int_1^s |V(tau^2)|^(1/2) d tau."""
    if s < 0:
        raise PreconditionError("H is defined for s >= 0")
    if s == 1.0:
        return 0.0
    integrand = lambda t: math.sqrt(abs(float(model.V(t * t))))
    lo, hi = sorted((1.0, float(s)))
    # split at the points where the integrand has kinks to help the adaptive rule
    pts = [p for p in (0.5, 2.0) if lo < p < hi]
    val, err = integrate.quad(integrand, lo, hi, epsabs=1e-12, epsrel=1e-11, limit=400,
                              points=pts or None)
    if not np.isfinite(val) or err > 1e-7 * max(1.0, abs(val)):
        raise NumericalError("quadrature for H failed", interval=(lo, hi), estimate=val, abserr=err)
    return val if s > 1 else -val


# ---------------------------------------------------------------------------
# assumption checks


@dataclass
class AssumptionCheck:
    id: str
    status: str  # "pass" | "fail" | "unknown"
    witness: dict

    def __post_init__(self):
        if self.id not in ASSUMPTION_IDS:
            raise ValueError(f"unknown assumption id {self.id}")


@dataclass
class AssumptionReport:
    model: str
    checks: list
    grid: np.ndarray
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status == "pass" for c in self.checks)

    def status(self, aid: str) -> str:
        return next(c.status for c in self.checks if c.id == aid)

    def witness(self, aid: str) -> dict:
        return next(c.witness for c in self.checks if c.id == aid)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "passed": self.passed,
            "checks": [{"id": c.id, "status": c.status, "witness": c.witness} for c in self.checks],
            "grid": {"min": float(self.grid[0]), "max": float(self.grid[-1]), "n": int(self.grid.size)},
            "notes": list(self.notes),
        }


def _tail_fit(s, y):
    """Least squares y ~ a + p log s + b / s + d / s^2; returns (p, residuals).

    The inverse powers absorb the lower-order terms of a polynomial F.
    """
    basis = np.column_stack([np.ones_like(s), np.log(s), 1.0 / s, 1.0 / s**2])
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    return coef[1], y - basis @ coef


def check_assumptions(model: Nonlinearity, s_max: float = 12.0, n: int = 2001,
                      tol: float = 1e-6) -> AssumptionReport:
    """Test (A1), (A2), (B1), (B2) on a sample grid of [0, s_max]."""
    s0_b2 = model.coercivity_s0
    need = max(4.0, 2 * s0_b2) if s0_b2 else 4.0
    if s_max < need:
        raise PreconditionError(f"grid must reach s_max >= {need}")
    grid = np.linspace(0.0, s_max, n)
    checks = []
    notes = []
    if model.regularity != "smooth":
        notes.append(f"F regularity away from 1: {model.regularity}")

    # (A1): normalisation and quadratic contact of V at 1
    f1 = float(model.F(1.0))
    fp1 = float(model.dF(1.0))
    hs = 10.0 ** -np.arange(1, 5)
    ratios = []
    for h in hs:
        for s in (1 - h, 1 + h):
            ratios.append(abs(float(model.V(s)) - 0.5 * h * h) / (h * h))
    ratios = np.array(ratios).reshape(-1, 2).max(axis=1)
    finite = bool(np.all(np.isfinite(model.F(grid))))
    # eps(s) must go to 0; allow for rounding in V near its double zero
    shrinking = ratios[-1] <= ratios[0] + 1e-8 and ratios[-1] < 1e-3
    ok = abs(f1) <= tol and abs(fp1 + 1.0) <= max(tol, 1e-5) and finite and shrinking
    checks.append(AssumptionCheck("A1", "pass" if ok else "fail",
                                  {"F(1)": f1, "F'(1)": fp1, "eps(s)": ratios.tolist(),
                                   "continuous_on_grid": finite}))

    # (A2): |F(s)| <= C (1 + s^p0), exponent from a log-log tail fit
    tail = grid[grid >= 2.0]
    fa = np.abs(model.F(tail))
    keep = fa > 0
    if keep.sum() >= 5:
        p0, res = _tail_fit(tail[keep], np.log(fa[keep]))
        worst = int(np.argmax(np.abs(res)))
        bound_exp = max(p0, 1.0)
        const = float(np.max(np.abs(model.F(grid)) / (1 + grid**bound_exp)))
        good = np.max(np.abs(res)) < 0.1 or p0 <= 1.0
        checks.append(AssumptionCheck("A2", "pass" if good and np.isfinite(const) else "fail",
                                      {"p0_fit": float(p0), "C": const,
                                       "max_log_residual": float(np.max(np.abs(res))),
                                       "s": float(tail[keep][worst])}))
    else:
        checks.append(AssumptionCheck("A2", "pass", {"p0_fit": 0.0, "C": float(np.max(np.abs(model.F(grid)))),
                                                     "note": "F vanishes on the tail"}))

    # (B1): V > 0 off 1 and H unbounded
    off = grid[np.abs(grid - 1.0) > 1e-9]
    vals = model.V(off)
    if np.any(vals <= 0):
        bad = float(off[np.argmin(vals)])
        checks.append(AssumptionCheck("B1", "fail", {"s": bad, "V": float(model.V(bad))}))
        positive = False
    else:
        positive = True
        # H is unbounded iff int^inf sqrt(V(t^2)) dt diverges; judge from a tail
        # fit log V(s) ~ a + q log s + b s + d / s
        t = grid[grid >= 2.0]
        basis = np.column_stack([np.ones_like(t), np.log(t), t, 1.0 / t])
        coef, *_ = np.linalg.lstsq(basis, np.log(model.V(t)), rcond=None)
        q, b = float(coef[1]), float(coef[2])
        r = math.sqrt(s_max)
        h_half = potential_h(model, r / 2)
        h_full = potential_h(model, r)
        unbounded = b > -1e-2 and q > -0.9
        checks.append(AssumptionCheck("B1", "pass" if unbounded else "fail",
                                      {"s": r, "H(s)": h_full, "H(s/2)": h_half,
                                       "tail_power": q, "tail_exponential_rate": b}))

    # (B2): V(s) >= s^gamma for s >= s0
    if not positive:
        checks.append(AssumptionCheck("B2", "fail", {"note": "V not positive off 1"}))
    else:
        gamma = model.coercivity_gamma
        s0 = model.coercivity_s0
        if gamma is None:
            vt = model.V(tail)
            if np.all(vt > 0):
                gfit, _ = _tail_fit(tail, np.log(vt))
                gamma = 0.5 * gfit if gfit > 0 else None
        if gamma is None or gamma <= 0:
            checks.append(AssumptionCheck("B2", "unknown", {"gamma": None}))
        else:
            ok_pts = model.V(grid) >= grid**gamma
            if s0 is None:
                bad = np.nonzero(~ok_pts)[0]
                s0 = float(grid[bad[-1] + 1]) if bad.size and bad[-1] + 1 < grid.size else (
                    1.0 if not bad.size else None)
                if s0 is not None:
                    s0 = max(s0, 1.0)
            if s0 is None or s0 > s_max / 2:
                checks.append(AssumptionCheck("B2", "unknown", {"gamma": gamma, "s0": s0}))
            else:
                sel = grid >= s0
                viol = sel & ~ok_pts
                status = "fail" if viol.any() else "pass"
                wit = {"gamma": gamma, "s0": s0}
                if viol.any():
                    wit["s"] = float(grid[np.argmax(viol)])
                checks.append(AssumptionCheck("B2", status, wit))
    return AssumptionReport(model=model.name, checks=checks, grid=grid, notes=notes)
