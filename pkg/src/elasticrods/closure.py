"""Closed rods with rational azimuthal advance and their torus-knot type.

A rod closes after ``n`` periods when its per-period advance is ``2 pi m / n``.
Solving is done on rays of fixed polar angle, bracketing in ``p`` against
the smooth branch of the advance; the physical advance differs from it by
``2 pi`` exactly where ``V < 0``, so a positive target can only be reached
where ``V < 0`` and a negative one only where ``V > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .exceptions import DomainError, NoSolutionError, RodError
from .paramspace import DiskPoint, derive_constants, find_p_max
from .rodsynth import delta_theta, delta_theta_smooth, synthesize, torus_embedding_check

TARGET_TOL = 1e-10
CLOSURE_TOL = 1e-6
RAY_SCAN = 64


class Quadrant(Enum):
    I = 1
    II = 2
    III = 3
    IV = 4

    @property
    def bounds(self):
        lo = 0.5 * math.pi * (self.value - 1)
        return lo, lo + 0.5 * math.pi


@dataclass(frozen=True)
class KnotSpec:
    m: int
    n: int

    def __post_init__(self):
        if self.n == 0 or self.m == 0:
            raise DomainError("m and n must be nonzero")
        if math.gcd(abs(self.m), abs(self.n)) != 1:
            raise DomainError(f"m={self.m} and n={self.n} must be coprime")
        if not abs(self.m) < abs(self.n):
            raise DomainError("|m/n| must lie in (0, 1)")

    @property
    def ratio(self):
        return self.m / self.n

    @property
    def delta_theta_target(self):
        return 2.0 * math.pi * self.m / self.n

    @property
    def periods_to_close(self):
        return abs(self.n)


@dataclass(frozen=True)
class KnotClass:
    m: int
    n: int
    embedded: bool
    kind: str  # "torus knot", "unknot", "multiple cover" or "withheld"
    theta_winding: float
    waist_winding: float

    @property
    def knot_type(self):
        return (self.m, self.n)


@dataclass
class ClosedRod:
    point: DiskPoint
    spec: KnotSpec
    curve: object
    knot: KnotClass = None
    residual: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def embedded(self):
        return self.knot.embedded

    @property
    def knot_type(self):
        return self.knot.knot_type if self.knot.kind in ("torus knot", "unknot") else self.knot.kind


def _p_grid(n=RAY_SCAN):
    # cosine spacing crowds samples toward both ends of (0, p_max)
    pm = find_p_max()
    u = 0.5 * (1.0 - np.cos(np.linspace(0.0, math.pi, n)))
    return 1e-6 + (pm * (1.0 - 1e-9) - 1e-6) * u


def solve_on_ray(phi, target, samples=RAY_SCAN):
    """Point on the ray at polar angle ``phi`` whose physical advance equals ``target``.

    Returns the root of smallest ``p``.  Raises ``NoSolutionError`` carrying the
    scanned ``(p, delta_theta)`` pairs when no admissible root exists.
    """
    if not math.isfinite(target) or abs(target) >= 2.0 * math.pi:
        raise DomainError("target must lie in (-2 pi, 2 pi)")
    smooth = target - 2.0 * math.pi if target > 0 else target
    want_neg_v = target > 0

    def g(p):
        return delta_theta_smooth(derive_constants(DiskPoint.from_polar(p, phi))) - smooth

    ps = _p_grid(samples)
    vals = np.array([g(p) for p in ps])
    for i in range(len(ps) - 1):
        if vals[i] == 0.0 or vals[i] * vals[i + 1] < 0.0:
            root = ps[i] if vals[i] == 0.0 else brentq(g, ps[i], ps[i + 1], xtol=1e-16, rtol=8.9e-16, maxiter=200)
            pt = DiskPoint.from_polar(root, phi)
            c = derive_constants(pt)
            if (c.V < 0.0) != want_neg_v or c.V == 0.0:
                continue
            res = abs(delta_theta(c) - target)
            if res > TARGET_TOL:
                raise RodError(f"ray root at p={root!r} misses target by {res:.3e}")
            return pt
    bracket = [(float(p), float(v + smooth)) for p, v in zip(ps, vals)]
    raise NoSolutionError(
        f"no point on ray phi={phi:.6g} has delta_theta={target:.6g}; smooth branch spans "
        f"[{min(v for _, v in bracket):.6g}, {max(v for _, v in bracket):.6g}]", bracket=bracket)


def _default_quadrant(spec):
    return Quadrant.II if spec.ratio > 0 else Quadrant.IV


def _ray_candidates(target, quadrant):
    lo, hi = quadrant.bounds
    # rim value of the advance is 2 pi sin(phi) on quadrants II and IV
    s = max(-1.0, min(1.0, target / (2.0 * math.pi)))
    rim = [math.pi - math.asin(s), 2.0 * math.pi + math.asin(s)]
    anchor = next((r for r in rim if lo < r < hi), 0.5 * (lo + hi))
    out = []
    for d in (0.1, 0.05, 0.2, 0.02, 0.3, -0.02, -0.05, -0.1, -0.2):
        phi = anchor + d
        if lo < phi < hi:
            out.append(phi)
    # fall back to an even sweep of the whole quadrant
    out.extend(np.linspace(lo, hi, RAY_SCAN + 2)[1:-1])
    return out


def _quadrant_arg(quadrant):
    if quadrant is None or isinstance(quadrant, Quadrant):
        return quadrant
    if isinstance(quadrant, str):
        return Quadrant[quadrant.upper()]
    return Quadrant(int(quadrant))


def _finish(pt, spec, samples_per_period, method="closed"):
    curve = synthesize(pt, spec.periods_to_close, samples_per_period, method=method)
    rod = ClosedRod(point=pt, spec=spec, curve=curve, residual=abs(curve.delta_theta - spec.delta_theta_target))
    rod.knot = knot_classify(rod)
    return rod


def solve_knot(spec, quadrant=None, samples_per_period=256, method="closed"):
    """Closed rod with per-period advance ``2 pi m/n``, synthesized over ``n`` periods."""
    q = _quadrant_arg(quadrant) or _default_quadrant(spec)
    target = spec.delta_theta_target
    tried = []
    for phi in _ray_candidates(target, q):
        try:
            pt = solve_on_ray(phi, target)
        except NoSolutionError as exc:
            tried.extend(exc.bracket[:1] + exc.bracket[-1:])
            continue
        rod = _finish(pt, spec, samples_per_period, method)
        rod.meta["ray_phi"] = float(phi)
        return rod
    raise NoSolutionError(f"no closed rod with advance 2pi*{spec.m}/{spec.n} in quadrant {q.name}", bracket=tried)


def x_axis_profile(samples=200, side=+1):
    """``(p, delta_theta)`` along the positive (``side=+1``) or negative X-axis."""
    phi = 0.0 if side > 0 else math.pi
    ps = _p_grid(samples + 2)[1:-1]
    return ps, np.array([delta_theta(derive_constants(DiskPoint.from_polar(p, phi))) for p in ps])


def solve_constant_torsion_knot(k, n, samples=200, samples_per_period=256):
    """The unique closed rod of constant torsion with advance ``2 pi k/n``.

    Only ``|k/n| < 1/2`` is accepted.  Uniqueness is checked by requiring the
    sampled advance along the chosen half-axis to be strictly monotone and to
    cross the target exactly once.
    """
    spec = KnotSpec(k, n)
    if not abs(spec.ratio) < 0.5:
        raise DomainError("constant-torsion closure needs |k/n| < 1/2")
    side = -1 if spec.ratio > 0 else +1
    phi = 0.0 if side > 0 else math.pi
    target = spec.delta_theta_target
    ps, vals = x_axis_profile(samples, side)
    steps = np.diff(vals)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise RodError("advance is not strictly monotone along the X-axis sample")
    diff = vals - target
    idx = np.nonzero(diff[:-1] * diff[1:] < 0)[0]
    if len(idx) != 1:
        raise NoSolutionError(f"expected one crossing of {target:.6g} on the X-axis, found {len(idx)}",
                              bracket=list(zip(ps.tolist(), vals.tolist())))
    i = int(idx[0])

    def g(p):
        return delta_theta(derive_constants(DiskPoint.from_polar(p, phi))) - target

    root = brentq(g, ps[i], ps[i + 1], xtol=1e-16, rtol=8.9e-16, maxiter=200)
    rod = _finish(DiskPoint.from_polar(root, phi), spec, samples_per_period)
    rod.meta["roots_found"] = len(idx)
    return rod


def _winding(u, v):
    ang = np.unwrap(np.arctan2(v, u))
    return (ang[-1] - ang[0]) / (2.0 * math.pi)


def knot_classify(rod, cover_tol=1e-3, closure_tol=CLOSURE_TOL):
    """Torus-knot type from sampled winding numbers.

    ``m`` counts circuits of the azimuth, ``n`` circuits of the meridian loop
    ``(r, z)`` around its centre.  Thin meridian loops (relative size below
    ``cover_tol``) are reported as multiple covers of a circle.
    """
    curve = rod.curve if hasattr(rod, "curve") else rod
    if curve.closure_gap > closure_tol * max(1.0, float(np.max(curve.r))):
        raise RodError(f"curve is not closed (gap {curve.closure_gap:.3e})")
    m_w = _winding(curve.x, curve.y)
    rc = 0.5 * (np.min(curve.r) + np.max(curve.r))
    n_w = _winding(curve.r - rc, curve.z)
    emb = torus_embedding_check(curve)
    # orientation of the meridian loop is a convention; keep n positive
    m, n = int(round(m_w)), abs(int(round(n_w)))
    if not emb.embedded:
        return KnotClass(m, n, False, "withheld", m_w, n_w)
    loop = max(np.ptp(curve.r), np.ptp(curve.z)) / np.max(curve.r)
    if loop < cover_tol:
        return KnotClass(m, n, True, "multiple cover", m_w, n_w)
    g = math.gcd(abs(m), abs(n)) or 1
    m, n = m // g, n // g
    kind = "unknot" if abs(m) == 1 or abs(n) == 1 else "torus knot"
    return KnotClass(m, n, True, kind, m_w, n_w)
