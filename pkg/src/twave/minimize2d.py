"""Energy minimisation at fixed momentum on the strip R x [0, 1), periodic in y.

The field is stored in lifted form psi = rho exp(i theta) on the truncated
strip [-x_max, x_max] x [0, 1) with rho = 1 at both x-ends and theta free.
The discrete energy is

    sum over x-edges  (dy/dx) |psi_{i+1,j} - psi_{i,j}|^2
  + sum over y-edges  lam^2 (dx/dy) w_i |psi_{i,j+1} - psi_{i,j}|^2
  + sum over nodes    dx dy w_i V(rho^2)

with trapezoid weights w_i in x, and the momentum is

    Q = dy * sum over x-edges (1 - rho_i rho_{i+1}) (theta_{i+1} - theta_i).

Minimisation is a preconditioned gradient method projected on the tangent
space of {Q = p}, with feasibility restored after each step by a scalar
Newton iteration along the preconditioned constraint gradient.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import fft, optimize

from .errors import NumericalError, PreconditionError, RhoUnderflow, TwaveError
from .finite_diff import derivative
from .momentum import MomentumClass, class_of
from .nonlinearity import Nonlinearity, gross_pitaevskii
from .quadrature1d import build_profile, wave_integrals

RHO_FLOOR = 1e-3


@dataclass
class Field2D:
    """Lifted field on an nx by ny grid; x from -x_max to x_max (both ends included),
    y = j / ny periodic. ``rho`` is the modulus, ``theta`` an unwrapped phase."""

    nx: int
    ny: int
    x_max: float
    lam: float
    rho: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float).reshape(self.nx, self.ny)
        self.theta = np.asarray(self.theta, dtype=float).reshape(self.nx, self.ny)

    @property
    def dx(self) -> float:
        return 2.0 * self.x_max / (self.nx - 1)

    @property
    def dy(self) -> float:
        return 1.0 / self.ny

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.x_max, self.x_max, self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) / self.ny

    @property
    def psi(self) -> np.ndarray:
        return self.rho * np.exp(1j * self.theta)

    def copy(self, **changes) -> "Field2D":
        out = replace(self, rho=self.rho.copy(), theta=self.theta.copy())
        for k, v in changes.items():
            setattr(out, k, v)
        return out


def _weights(nx: int) -> np.ndarray:
    w = np.ones(nx)
    w[0] = w[-1] = 0.5
    return w


def _one_minus_cos(t):
    s = np.sin(0.5 * t)
    return 2.0 * s * s


def _energy_parts(rho, theta, dx, dy, lam, vfun):
    w = _weights(rho.shape[0])[:, None]
    da = np.diff(rho, axis=0)
    prod = rho[1:] * rho[:-1]
    kx = float(np.sum(da**2 + 2.0 * prod * _one_minus_cos(np.diff(theta, axis=0)))) * dy / dx
    if rho.shape[1] > 1:
        rs = np.roll(rho, -1, axis=1)
        ts = np.roll(theta, -1, axis=1)
        edge = (rs - rho) ** 2 + 2.0 * rho * rs * _one_minus_cos(ts - theta)
        ky = lam * lam * dx / dy * float(np.sum(w * edge))
    else:
        ky = 0.0
    pot = dx * dy * float(np.sum(w * vfun(rho * rho)))
    return kx, ky, pot


def energy_2d(field: Field2D, model: Nonlinearity) -> float:
    """Discrete strip energy of ``field`` for the potential of ``model``."""
    return float(sum(_energy_parts(field.rho, field.theta, field.dx, field.dy, field.lam, model.V)))


def _gl_potential(s):
    return 0.5 * (s - 1.0) ** 2


def energy_gl_2d(field: Field2D, lam: Optional[float] = None) -> float:
    """Same discretisation with the Ginzburg-Landau potential (s - 1)^2 / 2."""
    lam = field.lam if lam is None else lam
    return float(sum(_energy_parts(field.rho, field.theta, field.dx, field.dy, lam, _gl_potential)))


def momentum_2d(field: Field2D) -> float:
    return _momentum(field.rho, field.theta, field.dy)


def _momentum(rho, theta, dy):
    return float(np.sum((1.0 - rho[1:] * rho[:-1]) * np.diff(theta, axis=0))) * dy


def _gradients(rho, theta, dx, dy, lam, model):
    """Energy and its gradient, momentum and its gradient (rho rows 0, -1 zeroed)."""
    w = _weights(rho.shape[0])[:, None]
    da = np.diff(rho, axis=0)
    dt = np.diff(theta, axis=0)
    prod = rho[1:] * rho[:-1]
    omc = _one_minus_cos(dt)
    sdt = np.sin(dt)
    cx = dy / dx
    energy = float(np.sum(da**2 + 2.0 * prod * omc)) * cx
    g_rho = np.zeros_like(rho)
    g_th = np.zeros_like(theta)
    # x-edges
    e_a = cx * (-2.0 * da + 2.0 * rho[1:] * omc)   # d/d rho_i   (edge i, i+1)
    e_b = cx * (2.0 * da + 2.0 * rho[:-1] * omc)   # d/d rho_i+1
    g_rho[:-1] += e_a
    g_rho[1:] += e_b
    t_edge = cx * 2.0 * prod * sdt
    g_th[:-1] -= t_edge
    g_th[1:] += t_edge
    # y-edges
    if rho.shape[1] > 1:
        cy = lam * lam * dx / dy
        rs = np.roll(rho, -1, axis=1)
        ts = np.roll(theta, -1, axis=1)
        dty = ts - theta
        omc_y = _one_minus_cos(dty)
        dr = rs - rho
        energy += cy * float(np.sum(w * (dr**2 + 2.0 * rho * rs * omc_y)))
        ga = cy * w * (-2.0 * dr + 2.0 * rs * omc_y)
        gb = cy * w * (2.0 * dr + 2.0 * rho * omc_y)
        g_rho += ga + np.roll(gb, 1, axis=1)
        ty = cy * w * 2.0 * rho * rs * np.sin(dty)
        g_th += -ty + np.roll(ty, 1, axis=1)
    s = rho * rho
    energy += dx * dy * float(np.sum(w * model.V(s)))
    g_rho += dx * dy * w * (-2.0 * rho * model.F(s))
    # momentum
    q = float(np.sum((1.0 - prod) * dt)) * dy
    q_rho = np.zeros_like(rho)
    q_rho[:-1] += -rho[1:] * dt * dy
    q_rho[1:] += -rho[:-1] * dt * dy
    q_th = np.zeros_like(theta)
    q_th[:-1] -= (1.0 - prod) * dy
    q_th[1:] += (1.0 - prod) * dy
    g_rho[0] = g_rho[-1] = 0.0
    q_rho[0] = q_rho[-1] = 0.0
    return energy, g_rho, g_th, q, q_rho, q_th


class _Preconditioner:
    """Inverse of 2 dx dy (alpha + L_x / dx^2 + lam^2 L_y / dy^2), diagonalised by
    sine (rho, Dirichlet), cosine (theta, free ends) and Fourier (y) transforms."""

    def __init__(self, nx, ny, dx, dy, lam, alpha_rho=2.0, alpha_theta=1e-2):
        ky = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(ny // 2 + 1) / ny)
        kx_d = 2.0 - 2.0 * np.cos(np.pi * np.arange(1, nx - 1) / (nx - 1))
        kx_n = 2.0 - 2.0 * np.cos(np.pi * np.arange(nx) / nx)
        scale = 2.0 * dx * dy
        yterm = lam * lam * ky / dy**2 if ny > 1 else np.zeros(1)
        self.inv_rho = 1.0 / (scale * (alpha_rho + kx_d[:, None] / dx**2 + yterm[None, :]))
        self.inv_th = 1.0 / (scale * (alpha_theta + kx_n[:, None] / dx**2 + yterm[None, :]))
        self.ny = ny

    def _apply(self, a, inv, kind):
        ny = self.ny
        t = fft.dst(a, type=1, axis=0, norm="ortho") if kind == "s" else fft.dct(a, type=2, axis=0, norm="ortho")
        t = fft.rfft(t, axis=1)
        t *= inv
        t = fft.irfft(t, n=ny, axis=1)
        return fft.idst(t, type=1, axis=0, norm="ortho") if kind == "s" else fft.idct(t, type=2, axis=0, norm="ortho")

    def __call__(self, g_rho, g_th):
        out_rho = np.zeros_like(g_rho)
        out_rho[1:-1] = self._apply(g_rho[1:-1], self.inv_rho, "s")
        return out_rho, self._apply(g_th, self.inv_th, "c")


@dataclass
class MinimizeOptions:
    max_iter: int = 20000
    tol_e: float = 1e-10          # relative energy decrease per step, over a window
    window: int = 50
    tol_grad: float = 1e-16       # preconditioned tangent gradient, squared norm / |E|
    tol_q: float = 1e-8           # relative constraint tolerance on accepted iterates
    rho_floor: float = RHO_FLOOR
    initial_step: float = 1.0
    record_history: bool = False


@dataclass
class MinimizeResult:
    field: Field2D
    energy: float
    momentum: float
    momentum_class: MomentumClass
    iterations: int
    converged: bool
    multiplier: float
    el_residual: float
    el_residual_l2: float
    two_dimensionality: float
    max_constraint_error: float
    status: str = "converged"
    init: str = ""
    history: list = field(default_factory=list)


def _restore(rho, theta, p_target, d_rho, d_th, dy, tol, max_newton=30):
    """Newton on s -> Q(z + s d) = p along the fixed direction d; returns the new field or None."""
    s = 0.0
    r, t = rho, theta
    for _ in range(max_newton):
        q = _momentum(r, t, dy)
        err = q - p_target
        if abs(err) <= tol:
            return r, t
        prod = r[1:] * r[:-1]
        dt = np.diff(t, axis=0)
        dq = dy * float(np.sum(-(d_rho[1:] * r[:-1] + r[1:] * d_rho[:-1]) * dt
                               + (1.0 - prod) * np.diff(d_th, axis=0)))
        if dq == 0.0:
            return None
        s -= err / dq
        r = rho + s * d_rho
        t = theta + s * d_th
    return (r, t) if abs(_momentum(r, t, dy) - p_target) <= tol else None


def project_momentum(field: Field2D, p_target: float, model: Optional[Nonlinearity] = None,
                     tol: Optional[float] = None) -> Field2D:
    """Feasible copy of ``field`` with discrete momentum ``p_target``."""
    model = model or gross_pitaevskii()
    tol = tol if tol is not None else 1e-12 * max(abs(p_target), 1e-300)
    pre = _Preconditioner(field.nx, field.ny, field.dx, field.dy, field.lam)
    _, _, _, _, q_rho, q_th = _gradients(field.rho, field.theta, field.dx, field.dy, field.lam, model)
    d_rho, d_th = pre(q_rho, q_th)
    res = _restore(field.rho, field.theta, p_target, d_rho, d_th, field.dy, tol)
    if res is None:
        raise NumericalError("could not restore the momentum constraint")
    return field.copy(rho=res[0], theta=res[1])


def minimize_at_momentum(model: Nonlinearity, lam: float, p_target: float, init,
                         opts: Optional[MinimizeOptions] = None, **grid) -> MinimizeResult:
    """Minimise the strip energy at discrete momentum ``p_target``.

    ``init`` is a ``Field2D`` or a strategy name ("wave", "blend", "snake")
    passed to ``initial_field`` together with ``grid`` keywords.
    """
    opts = opts or MinimizeOptions()
    if not (0.0 < p_target <= math.pi):
        raise PreconditionError("p_target must lie in (0, pi]")
    if isinstance(init, Field2D):
        fld = init.copy(lam=float(lam))
        label = "field"
    else:
        fld = initial_field(model, p_target, lam, strategy=init, **grid)
        label = str(init)
    if np.min(fld.rho) <= 0.0:
        raise PreconditionError("initial field must have rho > 0")
    dx, dy = fld.dx, fld.dy
    tol_q = opts.tol_q * p_target
    fld = project_momentum(fld, p_target, model, tol=1e-3 * tol_q)
    pre = _Preconditioner(fld.nx, fld.ny, dx, dy, lam)
    rho, theta = fld.rho, fld.theta

    energy, g_rho, g_th, q, q_rho, q_th = _gradients(rho, theta, dx, dy, lam, model)
    history = [energy]
    max_err = abs(q - p_target)
    step = opts.initial_step
    prev = None
    converged = False
    status = "max_iterations"
    mu = 0.0
    it = 0
    for it in range(1, opts.max_iter + 1):
        pg_rho, pg_th = pre(g_rho, g_th)
        pq_rho, pq_th = pre(q_rho, q_th)
        qpq = float(np.sum(q_rho * pq_rho) + np.sum(q_th * pq_th))
        mu = float(np.sum(q_rho * pg_rho) + np.sum(q_th * pg_th)) / qpq
        d_rho = -(pg_rho - mu * pq_rho)
        d_th = -(pg_th - mu * pq_th)
        lg_rho = g_rho - mu * q_rho
        lg_th = g_th - mu * q_th
        decrease = -float(np.sum(lg_rho * d_rho) + np.sum(lg_th * d_th))
        if decrease <= opts.tol_grad * max(abs(energy), 1e-300):
            converged, status = True, "converged"
            break
        if prev is not None:
            s_rho, s_th, y_rho, y_th = rho - prev[0], theta - prev[1], lg_rho - prev[2], lg_th - prev[3]
            sy = float(np.sum(s_rho * y_rho) + np.sum(s_th * y_th))
            if sy > 0:
                py_rho, py_th = pre(y_rho, y_th)
                yy = float(np.sum(y_rho * py_rho) + np.sum(y_th * py_th))
                step = sy / yy if yy > 0 else step
        accepted = False
        t = step
        for _ in range(40):
            nr = rho + t * d_rho
            nt = theta + t * d_th
            res = _restore(nr, nt, p_target, pq_rho, pq_th, dy, 1e-3 * tol_q)
            if res is not None and np.min(res[0]) > 0.0:
                e_new = float(sum(_energy_parts(res[0], res[1], dx, dy, lam, model.V)))
                if e_new <= energy - 1e-4 * t * decrease or (e_new <= energy and t < 1e-12):
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            status = "line_search_failed"
            break
        prev = (rho, theta, lg_rho, lg_th)
        rho, theta = res
        if np.min(rho) < opts.rho_floor:
            fld = fld.copy(rho=rho, theta=theta)
            exc = RhoUnderflow(f"min rho = {np.min(rho):.3e} below floor {opts.rho_floor}",
                               field=fld, iterations=it)
            exc.max_constraint_error = max(max_err, abs(_momentum(rho, theta, dy) - p_target))
            raise exc
        energy, g_rho, g_th, q, q_rho, q_th = _gradients(rho, theta, dx, dy, lam, model)
        max_err = max(max_err, abs(q - p_target))
        history.append(energy)
        if len(history) > opts.window:
            old = history[-1 - opts.window]
            if old - energy <= opts.window * opts.tol_e * abs(energy):
                converged, status = True, "converged"
                break
    fld = fld.copy(rho=rho, theta=theta)
    q = momentum_2d(fld)
    r_max, r_l2 = el_residual(fld, model, mu)
    result = MinimizeResult(field=fld, energy=energy, momentum=q, momentum_class=class_of(q),
                            iterations=it, converged=converged, multiplier=mu,
                            el_residual=r_max, el_residual_l2=r_l2,
                            two_dimensionality=two_dimensionality(fld),
                            max_constraint_error=max_err, status=status, init=label,
                            history=history if opts.record_history else [])
    return result


# ---------------------------------------------------------------------------
# diagnostics


def two_dimensionality(field: Field2D) -> float:
    """int int |psi - <psi>_y|^2 divided by int int (1 - rho^2)^2."""
    psi = field.psi
    dev = psi - psi.mean(axis=1, keepdims=True)
    num = float(np.sum(np.abs(dev) ** 2))
    den = float(np.sum((1.0 - field.rho**2) ** 2))
    return num / den if den > 0 else 0.0


def _dy_spectral(a, order):
    ny = a.shape[1]
    k = 2.0 * np.pi * fft.fftfreq(ny, d=1.0 / ny)
    return fft.ifft((1j * k) ** order * fft.fft(a, axis=1), axis=1)


def el_residual(field: Field2D, model: Nonlinearity, c: float, layer: float = 0.1):
    """Max and root-mean-square of i c psi_x + psi_xx + lam^2 psi_yy + F(|psi|^2) psi.

    x-derivatives by sixth-order differences, y-derivatives spectrally; nodes
    within ``layer * x_max`` of the x-ends are excluded.
    """
    psi = field.psi
    h = field.dx
    px = derivative(psi.real, h) + 1j * derivative(psi.imag, h)
    pxx = derivative(px.real, h) + 1j * derivative(px.imag, h)
    pyy = _dy_spectral(psi, 2) if field.ny > 1 else 0.0
    res = 1j * c * px + pxx + field.lam**2 * pyy + model.F(field.rho**2) * psi
    keep = np.abs(field.x) <= (1.0 - layer) * field.x_max
    r = np.abs(res[keep])
    return float(r.max()), float(math.sqrt(np.mean(r**2)))


def symmetry_check(field: Field2D) -> dict:
    """Best reflection centre y0 and defect ||psi(x, y0 + y) - psi(x, y0 - y)||.

    Candidates are the half-grid centres j / (2 ny); the best one is refined
    by spectral interpolation in y. The defect is normalised by
    sqrt(int int (1 - rho^2)^2).
    """
    psi = field.psi
    ny = field.ny
    norm = math.sqrt(max(float(np.sum((1.0 - field.rho**2) ** 2)), 1e-300))
    if ny == 1:
        return {"y0": 0.0, "defect": 0.0}
    spec = fft.fft(psi, axis=1)
    k = 2.0 * np.pi * fft.fftfreq(ny, d=1.0 / ny)

    def defect(y0):
        # psi(x, y0 + y) and psi(x, y0 - y) on the grid y = j / ny
        shift = np.exp(1j * k * y0)
        a = fft.ifft(spec * shift, axis=1)
        b = np.roll(a[:, ::-1], 1, axis=1)
        return math.sqrt(float(np.sum(np.abs(a - b) ** 2))) / norm

    cands = np.arange(2 * ny) / (2.0 * ny)
    vals = [defect(y0) for y0 in cands]
    j = int(np.argmin(vals))
    best_y0, best = cands[j], vals[j]
    h = 0.5 / ny
    res = optimize.minimize_scalar(defect, bounds=(best_y0 - h, best_y0 + h), method="bounded",
                                   options={"xatol": 1e-10})
    if res.fun < best:
        best_y0, best = float(res.x) % 1.0, float(res.fun)
    return {"y0": float(best_y0), "defect": float(best)}


# ---------------------------------------------------------------------------
# initial fields


def wave_speed_for_momentum(model: Nonlinearity, p: float) -> float:
    """Speed of the least-energy lower-branch wave with momentum valuation p."""
    def f(c):
        return wave_integrals(model, c)[1] - p

    cs = np.linspace(0.02, 1.41, 140)
    vals = []
    for c in cs:
        try:
            e, q = wave_integrals(model, c)
        except TwaveError:
            vals.append((np.nan, np.nan))
            continue
        vals.append((q - p, e))
    best = None
    for (c0, (a, ea)), (c1, (b, eb)) in zip(zip(cs[:-1], vals[:-1]), zip(cs[1:], vals[1:])):
        if np.isfinite(a) and np.isfinite(b) and a * b <= 0 and abs(a - b) < 1.0:
            c = optimize.brentq(f, c0, c1, xtol=1e-14)
            e = wave_integrals(model, c)[0]
            if best is None or e < best[1]:
                best = (c, e)
    if best is None:
        raise PreconditionError(f"no traveling wave with momentum {p}")
    return best[0]


def default_x_max(c: float) -> float:
    return max(12.0 / math.sqrt(2.0 - c * c), 20.0)


def _profile_on_grid(model, c, x):
    prof = build_profile(model, c, x_max=float(x[-1]) + 1.0, n_points=4 * x.size + 1)
    rho = np.sqrt(np.interp(x, prof.x, prof.rho))
    theta = np.interp(x, prof.x, prof.theta)
    return rho, theta


def _phase_ramp(x, x_max):
    """Smooth odd step from -1/2 to 1/2 supported in the outer half of the grid."""
    from .nonlinearity import smoothstep

    t = (np.abs(x) - 0.5 * x_max) / (0.4 * x_max)
    return 0.5 * np.sign(x) * smoothstep(t)[0]


def initial_field(model: Nonlinearity, p: float, lam: float, strategy: str = "wave",
                  nx: int = 2048, ny: int = 64, x_max: Optional[float] = None,
                  amplitude: float = 1e-3, seed: int = 0, spread: float = 0.5,
                  shift: float = 1.0) -> Field2D:
    """Initial field for momentum p.

    "wave": the 1D wave of momentum p, times 1 + amplitude * cos(2 pi (y - y_r)) * bump(x)
    with a seeded random phase y_r. "blend": chi(y) psi_1 + (1 - chi(y)) psi_2 in
    lifted variables with momenta p (1 +- spread), chi(y) = (1 + cos 2 pi y) / 2; the
    far-field phases of both waves are matched by ramps in the outer part of the grid.
    "snake": the 1D wave translated by shift * cos(2 pi y) in x.
    """
    c = wave_speed_for_momentum(model, p)
    x_max = x_max or default_x_max(c)
    x = np.linspace(-x_max, x_max, nx)
    y = np.arange(ny) / ny
    rng = np.random.default_rng(seed)
    if strategy == "wave":
        r1, t1 = _profile_on_grid(model, c, x)
        phase = rng.uniform(0.0, 1.0)
        bump = np.exp(-x**2 / 4.0)
        pert = 1.0 + amplitude * bump[:, None] * np.cos(2 * np.pi * (y[None, :] - phase))
        rho = r1[:, None] * pert if ny > 1 else r1[:, None].copy()
        theta = np.repeat(t1[:, None], ny, axis=1)
    elif strategy == "blend":
        p1 = min(p * (1.0 + spread), 0.95 * math.pi)
        p2 = max(2.0 * p - p1, 1e-3)
        waves = []
        for pk in (p1, p2):
            ck = wave_speed_for_momentum(model, pk)
            waves.append(_profile_on_grid(model, ck, x))
        jump = 0.5 * sum(t[-1] - t[0] for _, t in waves)
        ramp = _phase_ramp(x, x_max)
        thetas = [t + (jump - (t[-1] - t[0])) * ramp for _, t in waves]
        chi = 0.5 * (1.0 + np.cos(2 * np.pi * y))
        rho = chi[None, :] * waves[0][0][:, None] + (1 - chi[None, :]) * waves[1][0][:, None]
        theta = chi[None, :] * thetas[0][:, None] + (1 - chi[None, :]) * thetas[1][:, None]
    elif strategy == "snake":
        prof = build_profile(model, c, x_max=x_max + abs(shift) + 1.0, n_points=4 * nx + 1)
        offs = shift * np.cos(2 * np.pi * y)
        xs = x[:, None] - offs[None, :]
        rho = np.sqrt(np.interp(xs, prof.x, prof.rho))
        theta = np.interp(xs, prof.x, prof.theta)
    else:
        raise PreconditionError(f"unknown init strategy {strategy!r}")
    rho = np.array(rho, dtype=float)
    rho[0] = rho[-1] = 1.0
    return Field2D(nx=nx, ny=ny, x_max=x_max, lam=float(lam), rho=rho, theta=np.array(theta))


# ---------------------------------------------------------------------------
# scans in lambda


@dataclass
class ScanEntry:
    lam: float
    energy: float
    two_dimensionality: float
    converged: bool
    init: str
    status: str
    max_constraint_error: float
    multiplier: float
    result: Optional[MinimizeResult] = field(default=None, repr=False)


@dataclass
class LambdaScan:
    p: float
    entries: list
    reference_energy: float        # estimate of E1min(p)
    grid_energy_1d: float          # 1D minimum on the same x-grid
    grid_tol: float
    margin: float
    lambda_s_bracket: Optional[tuple]
    status: str
    max_constraint_error: float = 0.0   # over every run made by the scan, kept or not

    @property
    def lambda_s_estimate(self) -> Optional[float]:
        if self.lambda_s_bracket is None:
            return None
        return 0.5 * (self.lambda_s_bracket[0] + self.lambda_s_bracket[1])

    def improved(self, entry: ScanEntry) -> bool:
        return entry.energy < self.reference_energy - self.margin


def one_dimensional_grid_energy(model, p, nx, x_max=None, opts=None) -> MinimizeResult:
    """Minimum of the discrete energy over y-independent fields on the same x-grid."""
    return minimize_at_momentum(model, 1.0, p, "wave", opts=opts, nx=nx, ny=1, x_max=x_max)


def _best_run(model, lam, p, inits, grid, opts, seed, log=None):
    """Lowest-energy result over ``inits``; constraint errors of all runs go to ``log``."""
    best = None
    for init in inits:
        try:
            if isinstance(init, Field2D):
                res = minimize_at_momentum(model, lam, p, init, opts)
            else:
                res = minimize_at_momentum(model, lam, p, init, opts, seed=seed, **grid)
        except RhoUnderflow as exc:
            if log is not None:
                log.append(exc.max_constraint_error)
            continue
        if log is not None:
            log.append(res.max_constraint_error)
        if best is None or res.energy < best.energy:
            best = res
    return best


def _entry(lam, res):
    if res is None:
        return ScanEntry(lam, float("nan"), float("nan"), False, "", "rho_underflow", float("nan"),
                         float("nan"))
    return ScanEntry(lam, res.energy, res.two_dimensionality, res.converged, res.init, res.status,
                     res.max_constraint_error, res.multiplier, res)


def lambda_scan(model: Nonlinearity, p: float, lambda_grid, nx: int = 512, ny: int = 32,
                x_max: Optional[float] = None, opts: Optional[MinimizeOptions] = None,
                reference_energy: Optional[float] = None, bracket_rtol: float = 0.05,
                max_bisections: int = 6, seed: int = 0, jobs: int = 1,
                keep_fields: bool = False) -> LambdaScan:
    """Fixed-momentum minima over ``lambda_grid`` and a bracket for the critical period.

    Each lambda is started from the 1D wave and from a blend of two waves, and
    a backward pass restarts every lambda from the minimiser found at the next
    larger lambda, which makes the energies nondecreasing in lambda. A lambda
    counts as improving when its energy is below the 1D reference by more than
    three times the grid tolerance |E_1D(grid) - reference|. The bracket is
    then narrowed by bisection to relative width ``bracket_rtol``.
    """
    lams = [float(v) for v in lambda_grid]
    if lams != sorted(lams):
        raise PreconditionError("lambda grid must be sorted ascending")
    opts = opts or MinimizeOptions()
    c = wave_speed_for_momentum(model, p)
    x_max = x_max or default_x_max(c)
    grid = dict(nx=nx, ny=ny, x_max=x_max)
    one_d = one_dimensional_grid_energy(model, p, nx, x_max, opts)
    if reference_energy is None:
        reference_energy = wave_integrals(model, c)[0]
    grid_tol = abs(one_d.energy - reference_energy)
    margin = 3.0 * grid_tol

    log = [one_d.max_constraint_error]

    def run(lam, extra=()):
        return _best_run(model, lam, p, ["wave", "blend", *extra], grid, opts, seed, log)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, lams))
    else:
        results = [run(lam) for lam in lams]
    entries = {lam: _entry(lam, r) for lam, r in zip(lams, results)}

    def backward_pass():
        ordered = sorted(entries)
        for lo, hi in zip(ordered[-2::-1], ordered[:0:-1]):
            upper = entries[hi].result
            if upper is None:
                continue
            cur = entries[lo]
            if cur.result is None or not (cur.energy <= upper.energy):
                res = _best_run(model, lo, p, [upper.field], grid, opts, seed, log)
                if res is not None and (cur.result is None or res.energy < cur.energy):
                    entries[lo] = _entry(lo, res)

    backward_pass()
    scan = LambdaScan(p, [], reference_energy, one_d.energy, grid_tol, margin, None, "")

    def bracket():
        ordered = sorted(entries)
        good = [lam for lam in ordered if entries[lam].result is not None and scan.improved(entries[lam])]
        if not good:
            return None
        lo = max(good)
        above = [lam for lam in ordered if lam > lo]
        return (lo, above[0]) if above else (lo, math.inf)

    if margin <= 0 or not np.isfinite(margin):
        status = "no reliable bracket"
    else:
        br = bracket()
        for _ in range(max_bisections):
            if br is None or not np.isfinite(br[1]) or (br[1] - br[0]) <= bracket_rtol * br[0]:
                break
            mid = math.sqrt(br[0] * br[1])
            warm = [entries[br[0]].result.field] if entries[br[0]].result else []
            if entries[br[1]].result is not None:
                warm.append(entries[br[1]].result.field)
            entries[mid] = _entry(mid, run(mid, warm))
            backward_pass()
            br = bracket()
        if br is None:
            status = "no reliable bracket"
        elif not np.isfinite(br[1]):
            status = "improvement at every lambda"
        else:
            status = "bracketed"
        scan.lambda_s_bracket = br if br is not None and np.isfinite(br[1]) else None
    scan.status = status
    scan.max_constraint_error = max(log)
    scan.entries = [entries[lam] for lam in sorted(entries)]
    if not keep_fields:
        for e in scan.entries:
            e.result = None
    return scan


def parse_lambda_grid(spec: str) -> np.ndarray:
    """'min:max:geometric|linear:n' -> array of lambda values."""
    parts = spec.split(":")
    if len(parts) == 2:
        parts += ["geometric", "12"]
    if len(parts) != 4:
        raise ValueError(f"bad lambda grid {spec!r}; expected min:max:geometric|linear:n")
    lo, hi, kind, n = float(parts[0]), float(parts[1]), parts[2], int(parts[3])
    if not (0 < lo <= hi) or n < 1:
        raise ValueError(f"bad lambda grid {spec!r}")
    if kind == "geometric":
        return np.geomspace(lo, hi, n)
    if kind == "linear":
        return np.linspace(lo, hi, n)
    raise ValueError(f"unknown spacing {kind!r}")
