"""Energy-momentum curves of one-dimensional traveling waves.

The least energy at fixed momentum, E1min(p), is estimated from the branch of
traveling waves: every minimiser is a traveling wave whose speed is a
one-sided slope of E1min, so E1min is the lower envelope of the attained
(p, E) pairs, bounded above by sqrt(2) |p| and by the black-soliton energy.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import AmplitudeTooLarge, InsufficientSamples, PreconditionError, TwaveError
from .momentum import TWO_PI, abs_class, class_of
from .nonlinearity import Nonlinearity, gross_pitaevskii
from .quadrature1d import SQRT2, black_soliton_threshold, turning_point, wave_integrals

CUSP_SLOPE_GAP = 0.02 * SQRT2
SPEED_JUMP = 0.05
CONCAVITY_TOL = 1e-6


@dataclass
class DispersionSample:
    c: float
    p: float
    energy: float
    finite_L: bool
    zeta: float = float("nan")
    derivative_g: float = float("nan")
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.finite_L and self.status == "ok"


@dataclass
class DispersionCurve:
    """Samples (c, p(c), E(c)) ordered by speed, split into continuous segments."""

    model_name: str
    samples: list
    threshold: Optional[float]
    segments: list = field(default_factory=list)
    _grid_cache: dict = field(default_factory=dict, repr=False)

    @property
    def finite_samples(self) -> list:
        return [s for s in self.samples if s.ok]

    @property
    def gaps(self) -> list:
        return [s.c for s in self.samples if not s.ok]


def _sample(model: Nonlinearity, c: float) -> DispersionSample:
    try:
        tp = turning_point(model, c)
    except TwaveError as exc:
        return DispersionSample(c, float("nan"), float("nan"), False, status=type(exc).__name__)
    if not tp.finite:
        return DispersionSample(c, float("nan"), float("nan"), False, tp.zeta, tp.derivative_g,
                                status="infinite_L")
    try:
        energy, p = wave_integrals(model, c, tp=tp)
    except TwaveError as exc:
        return DispersionSample(c, float("nan"), float("nan"), True, tp.zeta, tp.derivative_g,
                                status=type(exc).__name__)
    return DispersionSample(c, p, energy, True, tp.zeta, tp.derivative_g)


def _zeta_rate(s: DispersionSample) -> float:
    # d zeta / dc = 2 c (zeta - 1)^2 / dg/ds at the turning point
    return 2.0 * s.c * (s.zeta - 1.0) ** 2 / max(abs(s.derivative_g), 1e-300)


def _continuous(a: DispersionSample, b: DispersionSample) -> bool:
    """Whether two neighbouring samples lie on one continuous piece of the branch."""
    if not (a.ok and b.ok):
        return False
    dc = abs(b.c - a.c)
    allowed = 3.0 * 0.5 * (_zeta_rate(a) + _zeta_rate(b)) * dc + 1e-9
    if abs(b.zeta - a.zeta) > allowed:
        return False
    dp = b.p - a.p
    if dp == 0.0:
        return True
    chord = (b.energy - a.energy) / dp
    lo, hi = sorted((a.c, b.c))
    return lo - 0.1 * (1 + hi - lo) <= chord <= hi + 0.1 * (1 + hi - lo)


def _segments(samples: list) -> list:
    segs, cur = [], []
    for i, s in enumerate(samples):
        if not s.ok:
            if cur:
                segs.append(cur)
            cur = []
            continue
        if cur and not _continuous(samples[cur[-1]], s):
            segs.append(cur)
            cur = []
        cur.append(i)
    if cur:
        segs.append(cur)
    return segs


def _refine(model, samples, dp_max, max_samples, c_tol, evaluate):
    """Insert speeds where the curve is under-resolved or breaks."""
    by_c = {s.c: s for s in samples}
    for _ in range(200):
        ordered = [by_c[c] for c in sorted(by_c)]
        new = []
        for a, b in zip(ordered[:-1], ordered[1:]):
            if b.c - a.c <= c_tol * max(1.0, b.c):
                continue
            if _continuous(a, b):
                if abs(b.p - a.p) > dp_max or abs(b.energy - a.energy) > dp_max:
                    new.append(0.5 * (a.c + b.c))
            elif a.ok or b.ok:
                # localise the break; the samples on either side extend both pieces
                new.append(0.5 * (a.c + b.c))
        new = [c for c in new if c not in by_c]
        if not new or len(by_c) + len(new) > max_samples:
            break
        for s in evaluate(new):
            by_c[s.c] = s
    return [by_c[c] for c in sorted(by_c)]


def sweep_dispersion(model: Nonlinearity, c_grid, refine: bool = False, dp_max: float = 0.05,
                     max_samples: int = 3000, c_tol: float = 1e-13, jobs: int = 1) -> DispersionCurve:
    """Energy and momentum of the lower-branch wave at each speed of ``c_grid``.

    Speeds without a wave (non-simple turning point, failed quadrature) are
    kept as gap samples. With ``refine`` speeds are bisected until adjacent
    samples of a continuous piece differ by at most ``dp_max`` in p and E, and
    breaks of the branch are localised to within ``c_tol``.
    """
    c_grid = np.asarray(sorted(set(float(c) for c in c_grid)))
    if c_grid.size == 0 or c_grid[0] <= 0 or c_grid[-1] >= SQRT2:
        raise PreconditionError("speeds must lie in (0, sqrt(2))")

    def evaluate(cs):
        if jobs > 1 and len(cs) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(lambda c: _sample(model, c), cs))
        return [_sample(model, c) for c in cs]

    samples = evaluate(list(c_grid))
    if refine:
        samples = _refine(model, samples, dp_max, max_samples, c_tol, evaluate)
    try:
        threshold = black_soliton_threshold(model)
    except PreconditionError:
        threshold = None
    return DispersionCurve(model.name, samples, threshold, _segments(samples))


# ---------------------------------------------------------------------------
# envelope


PIECE_BRANCH, PIECE_PLATEAU, PIECE_POINT = 0, 1, 2
_PIECE_FLAGS = {PIECE_BRANCH: "branch", PIECE_PLATEAU: "plateau-extrapolated", PIECE_POINT: "branch"}
# |dg/ds| below this (times 1 + c^2) at the end of a piece marks a merging double zero
PLATEAU_DG = 1e-3


class _Pieces(NamedTuple):
    p0: np.ndarray
    e0: np.ndarray
    c0: np.ndarray
    p1: np.ndarray
    e1: np.ndarray
    c1: np.ndarray
    hermite: np.ndarray
    kind: np.ndarray


def _pieces(curve: DispersionCurve) -> _Pieces:
    """Interpolation pieces between consecutive samples of each continuous segment.

    Cubic Hermite in p with end slopes dE/dp = c when the chord slope lies
    between the end speeds (p monotone on the piece), linear otherwise.
    Extra pieces: the sonic end (0, 0) with slope sqrt(2); the black soliton
    (pi, threshold); and, where a segment ends at a turning point that is
    becoming a double zero, the straight continuation E = E_end + c_end (p - p_end).
    Near such a speed the wave develops a growing plateau at the double zero,
    along which energy and momentum grow in the fixed ratio c, while p(c)
    diverges only logarithmically and cannot be reached by sampling.
    """
    cols = [[] for _ in range(8)]

    def add(a, b, kind=PIECE_BRANCH):
        (pa, ea, ca), (pb, eb, cb) = a, b
        if pa == pb and kind != PIECE_POINT:
            return
        herm = False
        if pa != pb:
            chord = (eb - ea) / (pb - pa)
            lo, hi = sorted((ca, cb))
            herm = kind == PIECE_BRANCH and lo - 1e-9 <= chord <= hi + 1e-9
        for col, v in zip(cols, (pa, ea, ca, pb, eb, cb, herm, kind)):
            col.append(v)

    ok = curve.finite_samples
    if len(ok) < 2:
        raise InsufficientSamples("need at least two finite samples")
    samples = curve.samples
    for k, seg in enumerate(curve.segments):
        pts = [(samples[i].p, samples[i].energy, samples[i].c) for i in seg]
        for a, b in zip(pts[:-1], pts[1:]):
            add(a, b)
        if len(seg) < 2:
            continue
        for end, prev, neighbour in ((seg[0], seg[1], seg[0] - 1), (seg[-1], seg[-2], seg[-1] + 1)):
            if not (0 <= neighbour < len(samples)):
                continue
            s_end, s_prev = samples[end], samples[prev]
            if abs(s_end.derivative_g) >= PLATEAU_DG * (1 + s_end.c**2) or s_end.p == s_prev.p:
                continue
            step = TWO_PI if s_end.p > s_prev.p else -TWO_PI
            add((s_end.p, s_end.energy, s_end.c),
                (s_end.p + step, s_end.energy + s_end.c * step, s_end.c), PIECE_PLATEAU)
    top = max(ok, key=lambda s: s.c)
    if top.c > 1.0 and top.p > 0 and top.c <= top.energy / top.p <= SQRT2:
        add((0.0, 0.0, SQRT2), (top.p, top.energy, top.c))
    if curve.threshold is not None:
        low = min(ok, key=lambda s: s.c)
        black = (math.pi, curve.threshold, 0.0)
        if low.zeta < 0.05 and low.p < math.pi:
            add((low.p, low.energy, low.c), black)
        add(black, black, PIECE_POINT)
    dtypes = [float] * 6 + [bool, int]
    return _Pieces(*(np.asarray(c, dtype=t) for c, t in zip(cols, dtypes)))


def _hermite(t, h, e0, m0, e1, m1):
    t2, t3 = t * t, t * t * t
    return ((2 * t3 - 3 * t2 + 1) * e0 + (t3 - 2 * t2 + t) * h * m0
            + (-2 * t3 + 3 * t2) * e1 + (t3 - t2) * h * m1)


def _lower_envelope(pieces: _Pieces, targets: np.ndarray):
    """Minimum over all pieces and their images +-q + 2 pi k at targets in [0, pi].

    Returns (energy, speed, piece index) with inf energy and index -1 where no
    piece covers a target; the speed of an image under q -> -q is -c.
    """
    best = np.full(targets.shape, np.inf)
    speed = np.full(targets.shape, np.nan)
    which = np.full(targets.shape, -1)
    for j in range(pieces.p0.size):
        p0, p1 = pieces.p0[j], pieces.p1[j]
        for sigma in (1.0, -1.0):
            a, b = sorted((sigma * p0, sigma * p1))
            k_lo = math.ceil((0.0 - b) / TWO_PI - 1e-12)
            k_hi = math.floor((math.pi - a) / TWO_PI + 1e-12)
            for k in range(k_lo, k_hi + 1):
                lo, hi = a + TWO_PI * k, b + TWO_PI * k
                sel = (targets >= lo - 1e-14) & (targets <= hi + 1e-14)
                if not sel.any():
                    continue
                q = sigma * (targets[sel] - TWO_PI * k)
                if p0 == p1:
                    e = np.full(q.shape, pieces.e0[j])
                    c = np.full(q.shape, pieces.c0[j])
                else:
                    h = p1 - p0
                    t = np.clip((q - p0) / h, 0.0, 1.0)
                    if pieces.hermite[j]:
                        e = _hermite(t, h, pieces.e0[j], pieces.c0[j], pieces.e1[j], pieces.c1[j])
                    else:
                        e = (1 - t) * pieces.e0[j] + t * pieces.e1[j]
                    c = (1 - t) * pieces.c0[j] + t * pieces.c1[j]
                cur = best[sel]
                better = e < cur
                idx = np.nonzero(sel)[0][better]
                best[idx] = e[better]
                speed[idx] = sigma * c[better]
                which[idx] = j
    return best, speed, which


@dataclass
class Envelope:
    p: np.ndarray
    energy: np.ndarray
    speed: np.ndarray
    flags: list

    def slopes(self):
        """One-sided three-point slopes (left, right); nan where not available."""
        e, h = self.energy, self.p[1] - self.p[0]
        left = np.full(e.shape, np.nan)
        right = np.full(e.shape, np.nan)
        left[2:] = (3 * e[2:] - 4 * e[1:-1] + e[:-2]) / (2 * h)
        right[:-2] = (-3 * e[:-2] + 4 * e[1:-1] - e[2:]) / (2 * h)
        return left, right


def _evaluate(curve: DispersionCurve, targets: np.ndarray, pieces: Optional[_Pieces] = None):
    """Envelope energies, speeds and flags at reduced momenta targets in [0, pi]."""
    pieces = pieces if pieces is not None else _pieces(curve)
    e, speed, which = _lower_envelope(pieces, targets)
    flags = [[] for _ in targets]
    for i in np.nonzero(which >= 0)[0]:
        if pieces.kind[which[i]] == PIECE_PLATEAU:
            flags[i].append(_PIECE_FLAGS[PIECE_PLATEAU])
    covered = np.isfinite(e)
    if not covered.all():
        ref = _reference_grid(curve, pieces)
        for i in np.nonzero(~covered)[0]:
            e[i] = np.interp(targets[i], ref[0], ref[1])
            flags[i].append("gap-interpolated")
    bound = SQRT2 * targets
    if curve.threshold is not None:
        bound = np.minimum(bound, curve.threshold)
    capped = bound < e
    e = np.where(capped, bound, e)
    for i in np.nonzero(capped)[0]:
        flags[i].append("bound")
    for i in range(targets.size):
        if not flags[i]:
            flags[i].append("branch")
    e[targets == 0.0] = 0.0
    return e, speed, flags


def _reference_grid(curve: DispersionCurve, pieces: _Pieces, n: int = 4097):
    key = ("ref", n)
    if key not in curve._grid_cache:
        grid = np.linspace(0.0, math.pi, n)
        e, _, _ = _lower_envelope(pieces, grid)
        ok = np.isfinite(e)
        ok[0] = True
        e[0] = 0.0
        curve._grid_cache[key] = (grid[ok], e[ok])
    return curve._grid_cache[key]


def reduce_momentum(p: float) -> float:
    return abs_class(class_of(p))


def envelope(curve: DispersionCurve, n: int = 513) -> Envelope:
    """Estimated E1min on a uniform grid of [0, pi]."""
    grid = np.linspace(0.0, math.pi, n)
    e, speed, flags = _evaluate(curve, grid)
    return Envelope(grid, e, speed, flags)


def emin1(curve: DispersionCurve, p: float) -> float:
    """Estimated least energy at momentum class [p]; even and 2 pi periodic in p."""
    q = reduce_momentum(p)
    if q == 0.0:
        return 0.0
    e, _, _ = _evaluate(curve, np.array([q]))
    return float(e[0])


def emin1_many(curve: DispersionCurve, ps) -> np.ndarray:
    q = np.array([reduce_momentum(p) for p in np.atleast_1d(ps)])
    e, _, _ = _evaluate(curve, q)
    return e


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class CurveDiagnostics:
    concave: bool
    worst_concavity_violation: float
    lipschitz_constant: float
    subsonic_gap: float
    subsonic_per_sample: list
    cusp_points: list
    multiplier_jumps: list
    slope_speed_error: float
    threshold: Optional[float]

    def to_dict(self) -> dict:
        return {
            "concave": self.concave,
            "worst_concavity_violation": self.worst_concavity_violation,
            "lipschitz_constant": self.lipschitz_constant,
            "subsonic_gap": self.subsonic_gap,
            "strictly_subsonic_samples": sum(1 for _, ok in self.subsonic_per_sample if ok),
            "samples": len(self.subsonic_per_sample),
            "cusp_points": [{"p": p, "slope_left": l, "slope_right": r} for p, l, r in self.cusp_points],
            "multiplier_jumps": [{"p": p, "c_left": a, "c_right": b} for p, a, b in self.multiplier_jumps],
            "slope_speed_error": self.slope_speed_error,
            "threshold": self.threshold,
        }


def _extended(curve, pieces, n):
    """Envelope on a uniform grid of [0, 2 pi] (n odd so that pi is a node)."""
    half = np.linspace(0.0, math.pi, n // 2 + 1)
    e, speed, _ = _evaluate(curve, half, pieces)
    p = np.concatenate([half, TWO_PI - half[-2::-1]])
    return p, np.concatenate([e, e[-2::-1]]), np.concatenate([speed, -speed[-2::-1]])


def _speed_at(curve, pieces, q):
    q = np.atleast_1d(float(q))
    if q[0] > math.pi:
        _, s, _ = _evaluate(curve, TWO_PI - q, pieces)
        return -s[0]
    _, s, _ = _evaluate(curve, q, pieces)
    return s[0]


def _energy_at(curve, pieces, q):
    q = float(q)
    r = q if q <= math.pi else TWO_PI - q
    e, _, _ = _evaluate(curve, np.array([r]), pieces)
    return e[0]


def _slope_speed_error(curve: DispersionCurve) -> float:
    """Max |dE/dp - c| on continuous pieces, dE/dp from three-point chords of raw samples."""
    worst = 0.0
    for seg in curve.segments:
        s = [curve.samples[i] for i in seg]
        for a, b, d in zip(s[:-2], s[1:-1], s[2:]):
            h1, h2 = b.p - a.p, d.p - b.p
            if h1 == 0 or h2 == 0 or h1 * h2 < 0:
                continue
            # derivative at b of the quadratic through the three points
            slope = (-h2 / (h1 * (h1 + h2)) * a.energy + (h2 - h1) / (h1 * h2) * b.energy
                     + h1 / (h2 * (h1 + h2)) * d.energy)
            worst = max(worst, abs(slope - b.c))
    return worst


def diagnostics(curve: DispersionCurve, n: int = 2049) -> CurveDiagnostics:
    """Concavity, Lipschitz constant, subsonic gap, cusps and speed jumps of E1min."""
    if len(curve.finite_samples) < 10:
        raise InsufficientSamples("diagnostics need at least 10 finite samples")
    if n % 2 == 0:
        n += 1
    pieces = _pieces(curve)
    p, e, speed = _extended(curve, pieces, n)
    h = p[1] - p[0]
    second = e[2:] - 2 * e[1:-1] + e[:-2]
    worst = float(second.max())
    lip = float(np.max(np.abs(np.diff(e)) / h))
    half = p <= math.pi + 1e-12
    sel = half & (p >= 0.05)
    gap = float(np.min(SQRT2 * p[sel] - e[sel]))

    per_sample = []
    for s in curve.finite_samples:
        q = reduce_momentum(s.p)
        per_sample.append((s.c, bool(s.energy < SQRT2 * q) if q > 0 else False))

    # jumps of the attained speed, located by bisection between grid nodes
    jumps = []
    for i in range(1, p.size - 2):
        a, b = speed[i], speed[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)) or abs(a - b) <= SPEED_JUMP:
            continue
        lo, hi = p[i], p[i + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            sm = _speed_at(curve, pieces, mid)
            if abs(sm - a) < abs(sm - b):
                lo = mid
            else:
                hi = mid
        jumps.append((0.5 * (lo + hi), float(_speed_at(curve, pieces, lo)),
                      float(_speed_at(curve, pieces, hi))))
    cusps = []
    d = 1e-7
    for q, _, _ in jumps:
        el = (_energy_at(curve, pieces, q) - _energy_at(curve, pieces, q - d)) / d
        er = (_energy_at(curve, pieces, q + d) - _energy_at(curve, pieces, q)) / d
        if el - er > CUSP_SLOPE_GAP:
            cusps.append((float(q), float(el), float(er)))
    # kinks not carried by a speed jump (gap-interpolated stretches, bounds)
    env = Envelope(p, e, speed, [])
    left, right = env.slopes()
    for i in range(2, p.size - 2):
        if left[i] - right[i] > CUSP_SLOPE_GAP and not any(abs(p[i] - q) < 3 * h for q, _, _ in cusps):
            if (left[i] - right[i]) >= max(left[i - 1] - right[i - 1], left[i + 1] - right[i + 1]):
                cusps.append((float(p[i]), float(left[i]), float(right[i])))
    cusps.sort()
    jumps = [j for j in jumps if j[0] <= math.pi + 1e-9]
    return CurveDiagnostics(concave=worst <= CONCAVITY_TOL, worst_concavity_violation=worst,
                            lipschitz_constant=lip, subsonic_gap=gap, subsonic_per_sample=per_sample,
                            cusp_points=cusps, multiplier_jumps=jumps,
                            slope_speed_error=_slope_speed_error(curve), threshold=curve.threshold)


# ---------------------------------------------------------------------------
# explicit competitor with small momentum


class CompetitorEnergy(NamedTuple):
    momentum: float
    energy: float
    kinetic: float


_BUMP_POWER = 4


def _bump_derivatives(z):
    """chi, chi', chi'' for chi(z) = A (1 - z^2)^4 on [-1, 1], scaled so int chi'^2 = 1."""
    k = _BUMP_POWER
    w = 1.0 - z * z
    chi = w**k
    d1 = -2 * k * z * w ** (k - 1)
    d2 = -2 * k * w ** (k - 1) + 4 * k * (k - 1) * z * z * w ** (k - 2)
    return chi, d1, d2


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(200)
_BUMP_SCALE = 1.0 / math.sqrt(float(np.sum(_GL_WEIGHTS * _bump_derivatives(_GL_NODES)[1] ** 2)))


def test_function_energy(p: float, lam_scale: float, model: Optional[Nonlinearity] = None) -> CompetitorEnergy:
    """Momentum and energy of rho = 1 - (eps/lam) chi'(x/lam), theta = sigma chi(x/lam).

    eps = 2^(-3/4) sqrt(p lam) and sigma = 2^(-1/4) sqrt(p lam), so that the
    momentum is 2 sigma eps / lam = p exactly and the energy tends to
    sqrt(2) p as lam grows. Integrals use 200-point Gauss-Legendre nodes in
    z = x / lam (exact for the polynomial integrands of the GP model).
    """
    model = model or gross_pitaevskii()
    lam = float(lam_scale)
    if p < 0 or lam <= 0:
        raise PreconditionError("need p >= 0 and lam_scale > 0")
    if p == 0:
        return CompetitorEnergy(0.0, 0.0, 0.0)
    eps = 2.0 ** -0.75 * math.sqrt(p * lam)
    sigma = 2.0 ** -0.25 * math.sqrt(p * lam)
    z, wts = _GL_NODES, _GL_WEIGHTS
    chi, d1, d2 = (_BUMP_SCALE * f for f in _bump_derivatives(z))
    if 1.0 - eps / lam * np.max(np.abs(d1)) <= 0.0:
        raise AmplitudeTooLarge("modulus of the test function would vanish: increase lam_scale")
    rho = 1.0 - eps / lam * d1
    drho = -eps / lam**2 * d2
    dtheta = sigma / lam * d1
    kinetic = float(lam * np.sum(wts * (drho**2 + rho**2 * dtheta**2)))
    potential = float(lam * np.sum(wts * model.V(rho**2)))
    momentum = float(lam * np.sum(wts * (1.0 - rho**2) * dtheta))
    return CompetitorEnergy(momentum, kinetic + potential, kinetic)


test_function_energy.__test__ = False
