"""The moduli disk of quasiperiodic elastic rods.

A rod (normalized to ``lambda_3 = 1`` and maximum curvature 1) is a point of
the punctured unit disk, with Cartesian chart ``(X, Y)`` and polar chart
``(p, phi)`` where ``X = sqrt(A(p)) cos(phi)``, ``Y = sqrt(A(p)) sin(phi)``
and ``A(p) = 2E(p)/K(p) - 1``.  The elliptic modulus ``p`` runs over
``(0, p_max)``; ``p -> 0`` is the rim and ``p -> p_max`` is the puncture at the
origin (the planar figure-eight).

Near the rim several textbook expressions cancel catastrophically, so the
constants are built from ``B(p) = (1 - A)/p**2`` and ``C(p) = (B - 1)/p**2``,
both evaluated without subtraction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import specfun as sf
from .exceptions import DomainError, UndefinedLimitError

ROOT_XTOL = 1e-15
CLASSIFY_TOL = 1e-9
NEAR_AXIS_GAP = 1e-2
_AXIS_SNAP = 1e-15
_SERIES_P = 0.25


# --- A(p) and its cancellation-free companions ---------------------------------


def _series_coeffs(n=60):
    # a_n = ((2n-1)!!/(2n)!!)**2, the Maclaurin coefficients of 2K/pi in p**2
    a = [1.0]
    for k in range(1, n + 2):
        a.append(a[-1] * ((2 * k - 1) / (2 * k)) ** 2)
    d = [2.0 * a[m + 1] * (2 * m + 2) / (2 * m + 1) - a[m] for m in range(1, n + 1)]
    return a, d


_A_COEF, _D_COEF = _series_coeffs()


def _B_of_p(p):
    """``(1 - A(p))/p**2`` via ``K - E = (p**2/3) R_D(0, p'**2, 1)``."""
    if p == 0.0:
        return 1.0
    pp2 = (1.0 - p) * (1.0 + p)
    rd = float(sf.carlson_rd(0.0, pp2, 1.0))
    return (2.0 / 3.0) * rd / sf.complete_K(p)


def _C_of_p(p):
    """``(B(p) - 1)/p**2``; equals 1/8 at ``p = 0``."""
    if p < _SERIES_P:
        x = p * p
        num = 0.0
        den = 0.0
        xm = 1.0
        for m in range(len(_D_COEF)):
            num += _D_COEF[m] * xm
            den += _A_COEF[m] * xm
            xm *= x
        return num / den
    return (_B_of_p(p) - 1.0) / (p * p)


def A_of_p(p):
    """``A(p) = 2E/K - 1``; decreasing from 1 at ``p = 0`` to -1 at ``p = 1``."""
    p = float(p)
    if not 0.0 <= p < 1.0:
        if p == 1.0:
            return -1.0
        raise DomainError(f"p={p} outside [0, 1)")
    return 1.0 - p * p * _B_of_p(p)


@lru_cache(maxsize=None)
def find_p_max():
    """Modulus at which ``A(p) = 0`` (the figure-eight elastica)."""
    return brentq(A_of_p, 0.5, 0.99, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)


def p_from_radius2(r2):
    """Invert ``X**2 + Y**2 = A(p)`` for ``p`` in ``(0, p_max)``."""
    if not 0.0 < r2 < 1.0:
        raise DomainError(f"X^2+Y^2={r2} must lie in (0, 1)")
    pm = find_p_max()
    # 1 - A ~ p**2 near the rim; start from that guess when it brackets
    return brentq(lambda p: A_of_p(p) - r2, 0.0, pm, xtol=1e-300, rtol=4 * np.finfo(float).eps)


# --- Points and constants -----------------------------------------------------


@dataclass(frozen=True)
class DiskPoint:
    X: float
    Y: float
    p: float
    phi: float

    @classmethod
    def from_polar(cls, p, phi):
        p = float(p)
        pm = find_p_max()
        if p >= pm:
            raise DomainError("origin of the disk (p = p_max) is the figure-eight limit; excluded")
        if p <= 0.0:
            raise DomainError("p <= 0 lies on the boundary circle, not inside the disk")
        r = math.sqrt(A_of_p(p))
        co, si = math.cos(phi), math.sin(phi)
        # floating multiples of pi/2 leave ~1e-16 residue; the axes are loci, so snap
        co = 0.0 if abs(co) < _AXIS_SNAP else co
        si = 0.0 if abs(si) < _AXIS_SNAP else si
        return cls(r * co, r * si, p, float(phi))

    @classmethod
    def from_xy(cls, X, Y):
        X, Y = float(X), float(Y)
        r2 = X * X + Y * Y
        if r2 == 0.0:
            raise DomainError("origin of the disk is the figure-eight limit; excluded")
        if r2 >= 1.0:
            raise DomainError(f"(X, Y)=({X}, {Y}) outside the open unit disk")
        return cls(X, Y, p_from_radius2(r2), math.atan2(Y, X))

    def negated(self):
        return DiskPoint.from_polar(self.p, self.phi + math.pi)


@dataclass(frozen=True)
class RodConstants:
    p: float
    p_prime: float
    K: float
    E: float
    A: float
    one_minus_A: float
    X: float
    Y: float
    phi: float
    w: float
    one_minus_w2: float
    Z: float
    c: float
    lambda1: float
    lambda2: float
    mu: float
    U: float
    a: float
    N: float
    M: float
    one_minus_M: float
    V: float
    xi: float
    xi_hat: float
    F_hat: float
    E_hat: float

    @property
    def point(self):
        return DiskPoint(self.X, self.Y, self.p, self.phi)

    @property
    def sgnN(self):
        return 1.0 if self.N > 0 else -1.0


def _z_minus_wx(X, Y, w, s, p, B):
    """``Z - wX`` with ``Z = Y s``; rewritten where the two terms cancel."""
    if X * Y > 0.0:
        # (Ys)^2 - (wX)^2 = p^2 (B Y^2 - A)
        A = X * X + Y * Y
        return p * p * (B * Y * Y - A) / (Y * s + w * X)
    return Y * s - w * X


def _v_numerator(X, Y, w, s, p, B):
    """``2Xw sqrt(1-w^2) - Y(1 + A - 2w^2)``, rewritten where the terms cancel."""
    G = 1.0 + X * X - Y * Y - 2.0 * p * p
    t1, t2 = 2.0 * X * w * s, Y * G
    if t1 * t2 > 0.0:
        # t1^2 - t2^2 = (2pp'X - gY)(2pp'X + gY) with g = A + 2p^2 - 1; the
        # second factor is the one that vanishes on the V = 0 locus
        g = p * p * (2.0 - B)
        f = 2.0 * p * sf.complementary(p) * X
        return (f - g * Y) * (f + g * Y) / (t1 + t2)
    return t1 - t2


def _n_direct(U, oma, lam2, mu, w, den):
    return (0.5 * U * oma - 2.0 * lam2 * mu * w ** 3) / den - U


def derive_constants(pt):
    """All scalars entering the closed-form rod for a disk point."""
    p = pt.p
    pm = find_p_max()
    if not 0.0 < p < pm:
        raise DomainError(f"p={p} outside (0, p_max)")
    X, Y = pt.X, pt.Y
    if X == 0.0 and Y == 0.0:
        raise DomainError("origin is the figure-eight limit; excluded")
    pp = sf.complementary(p)
    K, E = sf.complete_K(p), sf.complete_E(p)
    B = _B_of_p(p)
    C = _C_of_p(p)
    oma = p * p * B
    A = 1.0 - oma
    w = math.sqrt(Y * Y + p * p)
    # 1 - w^2 = p'^2 - Y^2 = X^2 + p^4 C
    omw2 = X * X + p ** 4 * C
    s = math.sqrt(omw2)
    Z = Y * s
    c = Z / (w * w)
    lam2 = X / w
    lam1 = 0.5 - oma / (4.0 * w * w)
    zmwx = _z_minus_wx(X, Y, w, s, p, B)
    mu = math.sqrt(oma * oma + 4.0 * zmwx * zmwx) / (4.0 * w * w)
    U = (2.0 * w * zmwx + X * oma) / (4.0 * mu * w * w)
    a = U / (mu * w)
    V = _v_numerator(X, Y, w, s, p, B) / (4.0 * mu * w * w)
    # A - U^2 = V^2, so M and 1 - M follow from V without cancellation
    den = p * p + V * V
    M = p * p / den
    omM = V * V / den
    N = _n_direct(U, oma, lam2, mu, w, p * p + A - U * U)
    if omM < NEAR_AXIS_GAP:
        # N cancels to zero on V = 0; the near-axis frame needs N, V and 1 - M
        # consistent to rounding, which only the V form delivers
        N = -math.copysign(abs(V) * math.sqrt((pp * pp - V * V) / den), V)
    cosxi = max(-1.0, min(1.0, V / pp))
    xi = math.acos(cosxi)
    xi_hat = min(xi, math.pi - xi)
    F_hat = sf.incomplete_F(xi_hat, pp)
    E_hat = sf.incomplete_E(xi_hat, pp)
    return RodConstants(p=p, p_prime=pp, K=K, E=E, A=A, one_minus_A=oma, X=X, Y=Y,
                        phi=pt.phi, w=w, one_minus_w2=omw2, Z=Z, c=c, lambda1=lam1,
                        lambda2=lam2, mu=mu, U=U, a=a, N=N, M=M, one_minus_M=omM, V=V, xi=xi,
                        xi_hat=xi_hat, F_hat=F_hat, E_hat=E_hat)


def identity_residuals(c):
    """Residuals of the algebraic identities tying the constants together.

    The ``N^2`` identities use ``N`` from its defining formula, which is
    independent of ``V`` even where ``c.N`` itself was taken from the ``V`` form.
    """
    pp2 = c.p_prime ** 2
    N = _n_direct(c.U, c.one_minus_A, c.lambda2, c.mu, c.w, c.p ** 2 + c.A - c.U ** 2)
    M = c.p ** 2 / (c.p ** 2 + c.A - c.U ** 2)
    return {
        "A-U^2-V^2": c.A - c.U ** 2 - c.V ** 2,
        "N^2 (V form)": N ** 2 - c.V ** 2 * (pp2 - c.V ** 2) / (c.V ** 2 + c.p ** 2),
        "N^2 (M form)": N ** 2 - (1.0 - M) * (M - c.p ** 2) / M,
        "N used - N direct": c.N - N,
        "a mu^2": c.a * c.mu ** 2 - (0.5 * c.c - c.lambda1 * c.lambda2),
        "Z=cw^2": c.Z - c.c * c.w ** 2,
    }


# --- Loci ---------------------------------------------------------------------


class LocusKind(enum.Enum):
    ElasticCurve = "elastic"
    ConstantTorsion = "torsion"
    Kida = "kida"
    SelfIntersecting = "selfint"
    Generic = "generic"


@dataclass(frozen=True)
class LocusTag:
    kind: LocusKind
    residual: float
    matches: tuple = field(default_factory=tuple)


def locus_residuals(pt):
    c = derive_constants(pt)
    X, Y, w, A, p = c.X, c.Y, c.w, c.A, c.p
    s = math.sqrt(c.one_minus_w2)
    return {
        LocusKind.ElasticCurve: abs(X),
        LocusKind.ConstantTorsion: abs(Y),
        LocusKind.Kida: abs(2.0 * c.Z * w - X * (A - 1.0 + 2.0 * p * p + 2.0 * Y * Y)),
        LocusKind.SelfIntersecting: abs(2.0 * X * w * s - Y * (1.0 + A - 2.0 * w * w)),
    }


def classify_locus(pt, tol=CLASSIFY_TOL):
    res = locus_residuals(pt)
    hits = sorted((r, k) for k, r in res.items() if r < tol)
    if not hits:
        return LocusTag(LocusKind.Generic, min(res.values()))
    return LocusTag(hits[0][1], hits[0][0], tuple(k for _, k in hits))


def kida_sin2phi(p):
    """``sin^2(phi)`` along the Kida curve, in cancellation-free form."""
    B, C = _B_of_p(p), _C_of_p(p)
    return (2.0 - B) ** 2 / (4.0 * C + 4.0 * B - 3.0 * B * B)


def kida_sin2phi_direct(p):
    """The same quantity written with ``A`` directly (loses digits as p -> 0)."""
    A = A_of_p(p)
    g = A - 1.0 + 2.0 * p * p
    return g * g / (1.0 - A * A - 2.0 * A * g)


def kida_phi(p, quadrant=1):
    phi = math.asin(math.sqrt(kida_sin2phi(p)))
    return phi if quadrant == 1 else phi + math.pi


def selfint_phi(p, quadrant=2):
    """Angle of the ``V = 0`` locus: ``cot(phi) = -(A + 2p^2 - 1)/(2 p p')``."""
    g = p * p * (2.0 - _B_of_p(p))  # A + 2p^2 - 1
    phi = math.atan2(2.0 * p * sf.complementary(p), -g)
    return phi if quadrant == 2 else phi + math.pi


def kida_small_p_limit(p=1e-4):
    return kida_sin2phi(p)


def locus_phi(kind, p, branch):
    """Angle of a locus at modulus ``p``; ``branch`` 0 or 1 picks the half."""
    if kind is LocusKind.ElasticCurve:
        return math.pi / 2 if branch == 0 else 3 * math.pi / 2
    if kind is LocusKind.ConstantTorsion:
        return 0.0 if branch == 0 else math.pi
    if kind is LocusKind.Kida:
        return kida_phi(p, 1 if branch == 0 else 3)
    if kind is LocusKind.SelfIntersecting:
        return selfint_phi(p, 2 if branch == 0 else 4)
    raise DomainError(f"no locus for {kind}")


def _turning(xy):
    d = np.diff(xy, axis=0)
    ang = np.arctan2(d[:, 1], d[:, 0])
    return np.abs(np.angle(np.exp(1j * np.diff(ang))))


def locus_curve(kind, samples=200):
    """Sample a locus from the rim, through the origin, to the opposite rim.

    Returns arrays ``(p, phi, X, Y)``.  Half the samples are spread by a
    cosine rule in ``p``; the rest are inserted where the curve turns most.
    """
    if isinstance(kind, str):
        kind = LocusKind(kind)
    if samples < 4:
        raise DomainError("need at least 4 samples")
    pm = find_p_max()
    half = samples // 2
    base = max(half // 2, 2)
    ps = list(pm * 0.5 * (1.0 - np.cos(np.linspace(0.0, math.pi, base + 2)[1:-1])))

    def xy(pl, br):
        return np.array([[math.sqrt(A_of_p(q)) * math.cos(locus_phi(kind, q, br)),
                          math.sqrt(A_of_p(q)) * math.sin(locus_phi(kind, q, br))] for q in pl])

    while len(ps) < half:
        turn = _turning(xy(ps, 0))
        seg = int(np.argmax(turn)) + 1 if turn.size else 0
        # split whichever neighbour segment is longer
        seg = min(seg, len(ps) - 2)
        ps.insert(seg + 1, 0.5 * (ps[seg] + ps[seg + 1]))
    ps = np.array(ps)
    rows = []
    for q in ps:
        rows.append((q, locus_phi(kind, q, 0)))
    for q in ps[::-1][: samples - half]:
        rows.append((q, locus_phi(kind, q, 1)))
    p_arr = np.array([r[0] for r in rows])
    phi_arr = np.array([r[1] for r in rows])
    rad = np.sqrt([A_of_p(q) for q in p_arr])
    return p_arr, phi_arr, rad * np.cos(phi_arr), rad * np.sin(phi_arr)


def boundary_delta_theta(phi):
    """Limit of the per-period angle advance at the rim point with angle ``phi``."""
    s, co = math.sin(phi), math.cos(phi)
    if abs(s) < 1e-12 or abs(co) < 1e-12:
        raise UndefinedLimitError("p = w = 0 on the axes: curvature has no limit there")
    if s * co < 0.0:
        return 2.0 * math.pi * s
    return 0.0
