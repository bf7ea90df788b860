"""Level curves of the smooth advance across the disk.

The level ``-2 pi k/(k+n)`` is followed by pseudo-arclength continuation in
the ``(p, phi)`` chart, which stays well conditioned up to the boundary
circle where the Cartesian chart does not.  Each family starts on the
Y-axis, where the level curve meets the axis at right angles, and is traced
in both directions until ``p`` falls below ``P_STOP``.  Every point of the
chain, read as a rod run through ``k + n`` periods, is closed; the chain
therefore runs from a ``k``-covered circle to an ``n``-covered circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .exceptions import ConvergenceError, DomainError, RodError
from .paramspace import DiskPoint, LocusKind, derive_constants, find_p_max, locus_residuals
from .rodsynth import delta_theta_smooth

LEVEL_TOL = 1e-9
CORRECTOR_TOL = 1e-12
P_STOP = 1e-4
FD_STEP = 1e-6
LANDMARK_KINDS = (LocusKind.ElasticCurve, LocusKind.ConstantTorsion, LocusKind.SelfIntersecting, LocusKind.Kida)


class CoordinateDegeneracyError(DomainError):
    """``(p, U)`` stop being coordinates on the self-intersection locus."""


@dataclass(frozen=True)
class Landmark:
    kind: LocusKind
    point: DiskPoint
    residual: float
    level_residual: float
    chain_index: int


@dataclass
class HomotopyFamily:
    k: int
    n: int
    level: float
    chain: list
    values: np.ndarray
    landmarks: dict
    endpoint_limits: tuple
    edge_phi: tuple = (float("nan"), float("nan"))
    degenerate: bool = False
    notes: list = field(default_factory=list)

    @property
    def periods(self):
        return self.k + self.n

    def physical_delta_theta(self):
        """Physical advance along the chain (level, or level + 2 pi where ``V < 0``)."""
        return np.array([self.level + (2.0 * math.pi if derive_constants(pt).V < 0 else 0.0)
                         for pt in self.chain])

    @property
    def p(self):
        return np.array([pt.p for pt in self.chain])


def _level(k, n):
    if k < 1 or n < 1:
        raise DomainError("k and n must be positive")
    if math.gcd(k, n) != 1:
        raise DomainError(f"k={k} and n={n} must be coprime")
    return -2.0 * math.pi * k / (k + n)


def _dts(p, phi):
    c = derive_constants(DiskPoint.from_polar(p, phi))
    return delta_theta_smooth(c), c


def partials_delta_theta(pt):
    """Analytic partials of the smooth advance at fixed ``p``.

    Returns ``(d/dU, d/dphi)``.  Raises ``CoordinateDegeneracyError`` on ``V = 0``.
    """
    c = derive_constants(pt)
    if c.V == 0.0:
        raise CoordinateDegeneracyError("V = 0: (p, U) are not coordinates here")
    pp2 = c.p_prime ** 2
    cx, sx = math.cos(c.xi), math.sin(c.xi)
    ddu = 2.0 * c.K * (1.0 - c.U * (c.E / c.K - pp2 * sx * sx)
                       / (pp2 * cx * sx * math.sqrt(1.0 - pp2 * sx * sx)))
    s = math.sqrt(c.one_minus_w2)
    X, Y, w, Z, A = c.X, c.Y, c.w, c.Z, c.A
    dudphi = (c.V * (2.0 * X * Z - 2.0 * w * X * X + w * (A - 1.0)) * (2.0 * Y * (w * X - Z) + s * (A - 1.0))
              / (16.0 * c.mu ** 2 * w ** 5 * s))
    return ddu, ddu * dudphi


def _gradient(p, phi):
    """Gradient of the smooth advance in the ``(p, phi)`` chart."""
    h = min(FD_STEP, 0.25 * p)
    gp = (_dts(p + h, phi)[0] - _dts(p - h, phi)[0]) / (2.0 * h)
    try:
        _, gphi = partials_delta_theta(DiskPoint.from_polar(p, phi))
    except CoordinateDegeneracyError:
        gphi = None
    if gphi is None or not math.isfinite(gphi) or abs(derive_constants(DiskPoint.from_polar(p, phi)).V) < 1e-6:
        gphi = (_dts(p, phi + FD_STEP)[0] - _dts(p, phi - FD_STEP)[0]) / (2.0 * FD_STEP)
    return np.array([gp, gphi])


def _start_on_axis(level):
    phi0 = 0.5 * math.pi if level > -math.pi else 1.5 * math.pi
    pm = find_p_max()
    ps = np.linspace(1e-4, pm * (1.0 - 1e-9), 200)
    vals = np.array([_dts(p, phi0)[0] - level for p in ps])
    idx = np.nonzero(vals[:-1] * vals[1:] < 0)[0]
    if len(idx) == 0:
        raise RodError(f"level {level:.6g} does not meet the Y-axis")
    i = int(idx[0])
    p0 = brentq(lambda p: _dts(p, phi0)[0] - level, ps[i], ps[i + 1], xtol=1e-16, rtol=8.9e-16)
    return np.array([p0, phi0])


def _continue(x0, tangent, level, step, max_step, floor, max_points=200000):
    """Follow the level from ``x0`` along ``tangent`` until ``p < P_STOP``."""
    pts, vals = [x0.copy()], [_dts(*x0)[0]]
    x, t = x0.copy(), tangent / np.linalg.norm(tangent)
    grad = _gradient(*x)
    h = step
    pm = find_p_max()
    while x[0] >= P_STOP and len(pts) < max_points:
        # aim no lower than P_STOP/2 so the boundary crossing is resolved
        hh = h
        if x[0] + hh * t[0] < 0.5 * P_STOP:
            hh = (x[0] - 0.5 * P_STOP) / -t[0]
        pred = x + hh * t
        y, ok, iters = pred.copy(), False, 0
        jac = np.array([grad, t])
        for iters in range(1, 9):
            if not (0.0 < y[0] < pm):
                break
            gval = _dts(*y)[0] - level
            if abs(gval) < CORRECTOR_TOL:
                ok = True
                break
            rhs = np.array([gval, t @ (y - pred)])
            y = y - np.linalg.solve(jac, rhs)
        if not ok:
            h *= 0.5
            if h < floor:
                raise ConvergenceError(f"corrector failed near p={x[0]:.6g}, phi={x[1]:.6g} at step floor {floor:g}")
            continue
        new_grad = _gradient(*y)
        new_t = np.array([-new_grad[1], new_grad[0]])
        new_t /= np.linalg.norm(new_t)
        if new_t @ t < 0:
            new_t = -new_t
        x, t, grad = y, new_t, new_grad
        pts.append(x.copy())
        vals.append(gval + level)
        h = min(max_step, h * 1.5) if iters <= 2 else h
    if x[0] >= P_STOP:
        raise ConvergenceError("continuation did not reach the boundary circle")
    return pts, vals


def _edge_phi(level, quadrant):
    # boundary advance is 2 pi sin(phi) on both edges; on quadrant II the smooth
    # branch carries an extra -2 pi
    if quadrant == 4:
        return 2.0 * math.pi + math.asin(level / (2.0 * math.pi))
    return math.pi - math.asin(level / (2.0 * math.pi) + 1.0)


def _project(x, grad, level):
    """Move ``x`` along ``grad`` onto the level set."""
    nvec = grad / (grad @ grad)
    lam = 0.0
    for _ in range(30):
        gval = _dts(*(x + lam * nvec))[0] - level
        if abs(gval) < 1e-14:
            break
        lam -= gval
    return x + lam * nvec


def _landmark_fn(kind):
    if kind is LocusKind.ElasticCurve:
        return lambda x, c: math.cos(x[1])
    if kind is LocusKind.ConstantTorsion:
        return lambda x, c: math.sin(x[1])
    if kind is LocusKind.Kida:
        return lambda x, c: c.U
    return lambda x, c: c.V


def _refine_landmark(kind, xa, xb, level, idx):
    fn = _landmark_fn(kind)
    grad = _gradient(*xa)

    def h(s):
        y = _project(xa + s * (xb - xa), grad, level)
        return fn(y, derive_constants(DiskPoint.from_polar(*y)))

    ha, hb = h(0.0), h(1.0)
    if ha == 0.0:
        s = 0.0
    elif hb == 0.0:
        s = 1.0
    else:
        s = brentq(h, 0.0, 1.0, xtol=1e-15, rtol=8.9e-16)
    y = _project(xa + s * (xb - xa), grad, level)
    pt = DiskPoint.from_polar(*y)
    if kind is LocusKind.ElasticCurve:
        pt = DiskPoint(0.0, pt.Y, pt.p, pt.phi) if abs(pt.X) < 1e-15 else pt
    res = locus_residuals(pt)[kind]
    return Landmark(kind, pt, float(res), float(abs(_dts(pt.p, pt.phi)[0] - level)), idx)


def _scan_landmarks(xs, level):
    out = {}
    consts = [derive_constants(DiskPoint.from_polar(*x)) for x in xs]
    for kind in LANDMARK_KINDS:
        fn = _landmark_fn(kind)
        vals = np.array([fn(x, c) for x, c in zip(xs, consts)])
        hits = []
        for i in range(len(xs) - 1):
            if vals[i] == 0.0 or vals[i] * vals[i + 1] < 0.0:
                hits.append(_refine_landmark(kind, xs[i], xs[i + 1], level, i))
        out[kind] = hits
    return out


def trace_level(k, n, step=1e-3, max_step=None, floor=1e-9):
    """Trace the level curve of the ``(k, n)`` family from the quadrant IV edge to the quadrant II edge."""
    level = _level(k, n)
    if max_step is None:
        max_step = 16.0 * step
    if k == n:
        return _trace_through_origin(k, n, level, step, max_step, floor)
    x0 = _start_on_axis(level)
    halves = [_continue(x0, np.array([0.0, sgn]), level, step, max_step, floor) for sgn in (-1.0, 1.0)]
    # the half ending with sin(phi) < 0 is the quadrant IV end
    ends = [math.sin(h[0][-1][1]) for h in halves]
    first, second = (halves[0], halves[1]) if ends[0] < 0 else (halves[1], halves[0])
    xs = first[0][::-1] + second[0][1:]
    vals = np.array(first[1][::-1] + second[1][1:])
    chain = [DiskPoint.from_polar(*x) for x in xs]
    fam = HomotopyFamily(k, n, level, chain, vals, _scan_landmarks(xs, level),
                         endpoint_limits=(f"{k}-fold circle", f"{n}-fold circle"),
                         edge_phi=(_edge_phi(level, 4), _edge_phi(level, 2)))
    return fam


def _trace_through_origin(k, n, level, step, max_step, floor):
    """The ``(1, 1)`` level passes through the excluded origin.

    Trace the quadrant IV half from the edge inward and complete the family
    by the point reflection that maps the level to itself.
    """
    phi_e = _edge_phi(level, 4)
    p_in = 10.0 * P_STOP
    grid = np.linspace(1.5 * math.pi + 1e-9, 2.0 * math.pi - 1e-9, 400)
    vals = np.array([_dts(p_in, ph)[0] - level for ph in grid])
    i = int(np.nonzero(vals[:-1] * vals[1:] < 0)[0][0])
    phi0 = brentq(lambda ph: _dts(p_in, ph)[0] - level, grid[i], grid[i + 1], xtol=1e-15)
    x0 = np.array([p_in, phi0])
    grad = _gradient(*x0)
    t = np.array([-grad[1], grad[0]])
    t = t if t[0] > 0 else -t
    pm = find_p_max()
    pts, x = [x0], x0
    h = step
    while True:
        grad = _gradient(*x)
        t_new = np.array([-grad[1], grad[0]])
        t = t_new if t_new @ t > 0 else -t_new
        t /= np.linalg.norm(t)
        y = x + h * t
        if y[0] >= pm * (1.0 - 1e-3):
            break
        y = _project(y, grad, level)
        if abs(_dts(*y)[0] - level) > CORRECTOR_TOL:
            h *= 0.5
            if h < floor:
                break
            continue
        pts.append(y)
        x = y
        h = min(max_step, 1.5 * h)
    half = pts
    mirror = [np.array([x[0], x[1] - math.pi]) for x in half[::-1]]
    xs = half + mirror
    chain = [DiskPoint.from_polar(*x) for x in xs]
    vals = np.array([_dts(*x)[0] for x in xs])
    origin = {kind: [] for kind in LANDMARK_KINDS}
    fam = HomotopyFamily(k, n, level, chain, vals, origin,
                         endpoint_limits=(f"{k}-fold circle", f"{n}-fold circle"),
                         edge_phi=(phi_e, _edge_phi(level, 2)), degenerate=True)
    fam.notes.append("level passes through the disk origin (figure-eight limit): all four landmarks "
                     "coalesce there and are not attained inside the punctured disk")
    return fam


@dataclass
class LandmarkTable:
    rows: dict
    violations: list

    @property
    def ok(self):
        return not self.violations


def landmark_points(fam, tol=LEVEL_TOL):
    """One landmark per kind, or a violation entry for each kind that is missing or repeated."""
    rows, violations = {}, []
    for kind in LANDMARK_KINDS:
        hits = fam.landmarks.get(kind, [])
        if len(hits) != 1:
            violations.append(f"{kind.value}: expected exactly one crossing, found {len(hits)}")
            continue
        lm = hits[0]
        if lm.residual > tol or lm.level_residual > tol:
            violations.append(f"{kind.value}: residual {lm.residual:.3e}, level residual {lm.level_residual:.3e}")
        rows[kind] = lm
    if fam.degenerate:
        violations.extend(fam.notes)
    return LandmarkTable(rows, violations)


def v_zero_prediction(pt):
    """``+-2 sqrt(K(2E - K)) - pi`` at ``pt.p``, signed by ``U``."""
    c = derive_constants(pt)
    val = 2.0 * math.sqrt(c.K * (2.0 * c.E - c.K))
    return math.copysign(val, c.U) - math.pi


def frame_indices(fam, frames):
    """Indices of ``frames`` chain points evenly spaced in chain arclength (ends included)."""
    xs = np.array([[pt.X, pt.Y] for pt in fam.chain])
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(xs, axis=0), axis=1))])
    targets = np.linspace(0.0, s[-1], frames)
    return [int(np.argmin(np.abs(s - v))) for v in targets]
