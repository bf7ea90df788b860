"""Stability of planar closed rods: the circle and the untwisted figure-eight.

The figure-eight analysis reduces to the order-2 Lame operator
``L y = y'' - (6 p^2 sn^2 t - h) y`` on ``4K``-periodic functions.  For a
given ``h`` the periodic solution of ``L nu = cn t`` shares the symmetry
of ``cn`` (even about 0, odd about ``K``), so it is found by shooting on
``[0, K]`` and extended by symmetry.  The headline value ``h = 1 + 4p^2``
is also computed from the closed-form second solution ``y1`` by variation
of parameters, which the shooting result must reproduce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import cumulative_simpson, quad, simpson, solve_ivp
from scipy.optimize import brentq

from . import specfun as sf
from .exceptions import DomainError, RodError
from .paramspace import find_p_max
from .rodsynth import curvature_torsion

GRID = 4096
_IVP = dict(method="DOP853", rtol=1e-13, atol=1e-15)


class Subject(Enum):
    Circle = "circle"
    FigureEight = "figure8"


class Verdict(Enum):
    Stable = "stable"
    Unstable = "unstable"
    Critical = "critical"


@dataclass(frozen=True)
class RodMaterial:
    alpha: float
    beta: float
    m: float
    L: float
    delta_psi: float
    total_torsion: float = float("nan")
    balance_residual: float = float("nan")

    def __post_init__(self):
        if not self.alpha > 0 or not self.L > 0 or self.beta < 0:
            raise DomainError("need alpha > 0, beta >= 0 and L > 0")


@dataclass
class StabilityReport:
    subject: Subject
    verdict: Verdict
    threshold: float
    value: float
    computed_quantities: dict = field(default_factory=dict)

    def as_dict(self):
        return {"subject": self.subject.value, "verdict": self.verdict.value, "threshold": self.threshold,
                "value": self.value, "computed_quantities": self.computed_quantities}


def _verdict(value, threshold, rtol=1e-12, larger_is_stable=False):
    if abs(value - threshold) <= rtol * max(1.0, abs(threshold)):
        return Verdict.Critical
    stable = value > threshold if larger_is_stable else value < threshold
    return Verdict.Stable if stable else Verdict.Unstable


# --- rods from curves and the circle --------------------------------------------


def rod_from_curve(curve, alpha, beta):
    """Material data for the rod on a synthesized closed centerline.

    The twist rate is ``m = alpha lambda2 / (2 beta)`` and the frame twist
    ``delta_psi = L m - integral of tau ds``.
    """
    if beta == 0:
        raise DomainError("beta = 0 leaves m undefined; use the pure bending energy of the elastic curve")
    c = curve.constants
    t0, t1 = float(curve.t[0]), float(curve.t[-1])
    L = 2.0 * c.w * (t1 - t0)
    m = alpha * c.lambda2 / (2.0 * beta)
    f = lambda t: 2.0 * c.w * float(curvature_torsion(t, c)[1])  # noqa: E731
    knots = np.arange(t0, t1 + 0.5 * c.K, c.K)
    knots[-1] = t1
    total = sum(quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0] for a, b in zip(knots[:-1], knots[1:]))
    dpsi = L * m - total
    sampled = simpson(2.0 * c.w * curve.tau, x=curve.t)
    return RodMaterial(alpha, beta, m, L, dpsi, total, abs(L * m - dpsi - sampled))


def circle_modes(alpha, beta, m, L, n_max=10):
    """Per-mode quadratic forms in ``(a_n, d_n)`` and ``(b_n, c_n)`` for ``n = 2..n_max``."""
    kappa = 2.0 * math.pi / L
    out = []
    for n in range(2, n_max + 1):
        d = alpha * kappa
        off = beta * m * n
        Q1 = np.array([[d * n * n, -off], [-off, d * (n * n - 1)]])
        Q2 = np.array([[d * n * n, off], [off, d * (n * n - 1)]])
        out.append((n, Q1, Q2, (alpha * kappa) ** 2 * (n * n - 1) < (beta * m) ** 2))
    return out


def circle_stability(alpha, beta, m, L):
    """Stable iff ``|m| < sqrt(3) 2 pi alpha / (L beta)``."""
    if not (alpha > 0 and beta > 0 and L > 0):
        raise DomainError("alpha, beta and L must be positive")
    thr = math.sqrt(3.0) * 2.0 * math.pi * alpha / (L * beta)
    kappa = 2.0 * math.pi / L
    # mode n is indefinite iff (alpha kappa)^2 (n^2 - 1) < (beta m)^2, so n = 2 goes first
    first = 2 if 3.0 * (alpha * kappa) ** 2 < (beta * m) ** 2 else None
    return StabilityReport(Subject.Circle, _verdict(abs(m), thr), thr, abs(m),
                           {"kappa": kappa, "first_indefinite_mode": first})


# --- Lame machinery ------------------------------------------------------------------


def lame_table(n_order, p):
    """``(name, h, callable)`` for the tabulated Lame polynomials of order 1 or 2."""
    p2 = p * p
    if n_order == 1:
        return [
            ("dn", p2, lambda t: sf.jacobi_sn_cn_dn(t, p)[2]),
            ("cn", 1.0, lambda t: sf.jacobi_sn_cn_dn(t, p)[1]),
            ("sn", 1.0 + p2, lambda t: sf.jacobi_sn_cn_dn(t, p)[0]),
        ]
    if n_order == 2:
        r = math.sqrt(1.0 - p2 + p2 * p2)
        g = 1.0 + p2 - r

        def snd(t):
            s, _, d = sf.jacobi_sn_cn_dn(t, p)
            return s * d

        def cnd(t):
            _, c, d = sf.jacobi_sn_cn_dn(t, p)
            return c * d

        def poly(t):
            s = sf.jacobi_sn_cn_dn(t, p)[0]
            return 1.0 - g * s * s

        return [("sn*dn", 1.0 + 4.0 * p2, snd), ("cn*dn", 1.0 + p2, cnd), ("1-g*sn^2", 2.0 * g, poly)]
    raise DomainError("tabulated Lame polynomials exist here for n = 1, 2 only")


@dataclass(frozen=True)
class LameProblem:
    n_order: int
    p: float
    h: float

    @property
    def eigen_table(self):
        return [(name, h) for name, h, _ in lame_table(self.n_order, self.p)]

    def potential(self, t):
        s = sf.jacobi_sn_cn_dn(t, self.p)[0]
        return self.n_order * (self.n_order + 1) * self.p ** 2 * s * s - self.h


def fd_second_derivative(f, t, step):
    """Five-point central second difference."""
    return (-f(t + 2 * step) + 16 * f(t + step) - 30 * f(t) + 16 * f(t - step) - f(t - 2 * step)) / (12 * step * step)


def lame_residual(y, h, n_order, p, t, step=None):
    """Max ``|y'' - (n(n+1) p^2 sn^2 - h) y|`` over ``t`` by finite differences."""
    if step is None:
        step = 4.0 * sf.complete_K(p) / GRID
    s = sf.jacobi_sn_cn_dn(t, p)[0]
    return float(np.max(np.abs(fd_second_derivative(y, t, step) - (n_order * (n_order + 1) * p * p * s * s - h) * y(t))))


def figure_eight_modulus():
    """Root of ``2E(p) = K(p)``."""
    f = lambda p: 2.0 * sf.complete_E(p) - sf.complete_K(p)  # noqa: E731
    return brentq(f, 0.5, 0.99, xtol=1e-16, rtol=8.9e-16, maxiter=200)


def lame_second_solution(t, p, derivative=False):
    """Second solution ``y1`` of ``L y = 0`` at ``h = 1 + 4p^2`` (``y2 = sn dn`` is the first).

    With ``derivative=True`` returns ``(y1, y1')``.
    """
    t = np.asarray(t, dtype=float)
    sn, cn, dn = sf.jacobi_sn_cn_dn(t, p)
    p2 = p * p
    pp2 = 1.0 - p2
    gam = (2.0 * p2 - 1.0) / pp2
    Et = sf.incomplete_E(sf.jacobi_amplitude(t, p), p)
    brk = t + gam * Et
    # leading term is cn dn^2; this is the solution with y(0) = 1, y'(0) = 0
    y = cn * dn * dn + (p2 * p2 / pp2) * cn * sn * sn - brk * dn * sn
    if not derivative:
        return y
    dy = (-sn * dn ** 3 - 2.0 * p2 * sn * cn * cn * dn
          + (p2 * p2 / pp2) * (2.0 * sn * cn * cn * dn - sn ** 3 * dn)
          - (1.0 + gam * dn * dn) * dn * sn - brk * cn * (dn * dn - p2 * sn * sn))
    return y, dy


def wronskian_y1_y2(t, p):
    y1, d1 = lame_second_solution(t, p, derivative=True)
    sn, cn, dn = sf.jacobi_sn_cn_dn(t, p)
    y2 = sn * dn
    d2 = cn * (dn * dn - p * p * sn * sn)
    return y1 * d2 - d1 * y2


def _grid(p, n=GRID):
    return np.linspace(0.0, 4.0 * sf.complete_K(p), n + 1)


def variation_of_parameters(p, n=GRID):
    """Periodic solution of ``L nu = cn`` at ``h = 1 + 4p^2`` from ``y1, y2``.

    Returns ``(t, nu, c1)`` with ``c2 = 0`` and ``c1 = int(y1 cn) / y1'(4K)``.
    With ``W = y1 y2' - y1' y2 = 1`` periodicity of ``nu'`` needs the
    coefficient ``-c1`` on ``y1``.
    """
    t = _grid(p, n)
    y1, d1 = lame_second_solution(t, p, derivative=True)
    sn, cn, dn = sf.jacobi_sn_cn_dn(t, p)
    y2 = sn * dn
    W = wronskian_y1_y2(t, p)
    c1 = simpson(y1 * cn, x=t) / d1[-1]
    # l1 = -int y2 cn / W has the closed form -sn^2/2 when W = 1
    l1 = cumulative_simpson(-y2 * cn / W, x=t, initial=0.0)
    l2 = cumulative_simpson(y1 * cn / W, x=t, initial=0.0)
    nu = (l1 - c1) * y1 + l2 * y2
    return t, nu, c1


@dataclass
class FigureEightData:
    p: float
    K: float
    c1: float
    int_nu_cn: float
    H: float
    critical_ratio: float


def figure_eight_data(p=None, n=GRID):
    """``c1``, the integral of ``nu cn`` and ``H`` at ``h = 1 + 4p^2``."""
    if p is None:
        p = figure_eight_modulus()
    t, nu, c1 = variation_of_parameters(p, n)
    cn = sf.jacobi_sn_cn_dn(t, p)[1]
    I = simpson(nu * cn, x=t)
    K = sf.complete_K(p)
    H = 1.0 / I
    return FigureEightData(p, K, c1, I, H, H * K / (p * p))


# --- H(h) by shooting ------------------------------------------------------------------


def _rhs(p, h):
    p2 = p * p

    def f(t, z):
        sn, cn, _ = sf.jacobi_sn_cn_dn(t, p)
        q = 6.0 * p2 * sn * sn - h
        nu, dnu, ye, dye = z[0], z[1], z[2], z[3]
        return [dnu, q * nu + cn, dye, q * ye, nu * cn, ye * cn, nu * nu, nu * ye, ye * ye]

    return f


def _shoot_homogeneous(p, h, odd0, oddK):
    """``y(K)`` or ``y'(K)`` for the homogeneous solution with the given parity at 0."""
    K = sf.complete_K(p)
    z0 = [0.0, 1.0] if odd0 else [1.0, 0.0]
    p2 = p * p

    def f(t, z):
        sn = sf.jacobi_sn_cn_dn(t, p)[0]
        return [z[1], (6.0 * p2 * sn * sn - h) * z[0]]

    sol = solve_ivp(f, (0.0, K), z0, **_IVP)
    yK = sol.y[:, -1]
    return yK[0] if oddK else yK[1]


def lame_eigenvalues(p, count=5, h_hi=None, samples=120):
    """Lowest periodic eigenvalues of the order-2 operator by a shooting scan over the four parity classes."""
    if h_hi is None:
        h_hi = 6.0 + 4.0 * p * p
    hs = np.linspace(-0.5, h_hi, samples)
    roots = []
    for odd0 in (False, True):
        for oddK in (False, True):
            vals = np.array([_shoot_homogeneous(p, h, odd0, oddK) for h in hs])
            for i in np.nonzero(vals[:-1] * vals[1:] < 0)[0]:
                roots.append(brentq(lambda h: _shoot_homogeneous(p, h, odd0, oddK), hs[i], hs[i + 1], xtol=1e-13))
    roots.sort()
    return roots[:count]


def valid_h_bound(p):
    """Upper end of the interval of admissible ``h``: the fourth periodic eigenvalue."""
    # eigenvalues sharing a parity class are far apart here, so a coarse scan brackets them
    return lame_eigenvalues(p, count=4, h_hi=5.0 + p * p, samples=60)[3]


@dataclass
class HSolution:
    h: float
    H: float
    int_nu_cn: float
    int_nu2: float
    t: np.ndarray
    nu: np.ndarray


def solve_H_of_h(h, p, h_max=None, samples=GRID):
    """``H(h)`` and the periodic ``nu`` of ``L nu = H cn t * integral(nu cn)``.

    ``nu`` is normalised so that ``L nu = cn`` (or, at ``h = 1 + p^2``, so that
    the integral of ``nu cn`` is 1, where ``H = 0``).
    """
    if h_max is not None and h >= h_max:
        raise DomainError(f"h={h} is outside the admissible interval (-inf, {h_max})")
    K = sf.complete_K(p)
    tt = np.linspace(0.0, K, samples // 4 + 1)
    if abs(h - (1.0 + p * p)) < 1e-12:
        sn, cn, dn = sf.jacobi_sn_cn_dn(tt, p)
        ev = cn * dn
        norm = 4.0 * quad(lambda t: float(np.prod(sf.jacobi_sn_cn_dn(t, p)[1:]) * sf.jacobi_sn_cn_dn(t, p)[1]),
                          0.0, K, epsabs=1e-15, epsrel=1e-13)[0]
        return HSolution(h, 0.0, 1.0, float("nan"), *_extend(tt, ev / norm, K))
    sol = solve_ivp(_rhs(p, h), (0.0, K), [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                    dense_output=True, **_IVP)
    nuK, _, yeK, _, Ip, Ie, Qpp, Qpe, Qee = sol.y[:, -1]
    if abs(yeK) < 1e-300:
        raise RodError("even homogeneous solution vanishes at K")
    a = -nuK / yeK
    I = 4.0 * (Ip + a * Ie)
    Q = 4.0 * (Qpp + 2.0 * a * Qpe + a * a * Qee)
    zs = sol.sol(tt)
    nu = zs[0] + a * zs[2]
    return HSolution(h, 1.0 / I, I, Q, *_extend(tt, nu, K))


def _extend(tt, nu, K):
    """Extend ``nu`` from ``[0, K]`` to ``[0, 4K]``: odd about ``K``, even about ``0``."""
    t1 = 2.0 * K - tt[::-1]
    seg = np.concatenate([nu, -nu[::-1][1:]])
    t2 = np.concatenate([tt, t1[1:]])
    full_t = np.concatenate([t2, 2.0 * K + t2[1:]])
    full = np.concatenate([seg, seg[::-1][1:]])
    return full_t, full


def h_sweep(p, h0, h1, steps):
    hs = np.linspace(h0, h1, steps)
    return [(float(h), solve_H_of_h(float(h), p)) for h in hs]


# --- verdicts ----------------------------------------------------------------------------


def figure_eight_stability(alpha, beta, p=None):
    """Untwisted figure-eight: stable iff ``beta/alpha`` exceeds ``H(1+4p^2) K/p^2``."""
    if not (alpha > 0 and beta > 0):
        raise DomainError("alpha and beta must be positive")
    if p is None:
        p = figure_eight_modulus()
    d = figure_eight_data(p)
    shoot = solve_H_of_h(1.0 + 4.0 * p * p, p)
    ratio = beta / alpha
    q = {"p": p, "K": d.K, "c1": d.c1, "int_nu_cn": d.int_nu_cn, "H": d.H,
         "H_shooting": shoot.H, "H_expected": 2.0 * p * p / d.K, "p_max": find_p_max()}
    return StabilityReport(Subject.FigureEight, _verdict(ratio, d.critical_ratio, rtol=1e-9, larger_is_stable=True),
                           d.critical_ratio, ratio, q)


@dataclass
class MuBranchReport:
    p: float
    dn_first: float
    dn_second: float
    cn_first: float
    cn_second: float

    @property
    def ok(self):
        return abs(self.dn_first) < 1e-10 and abs(self.dn_second) > 1e-3 \
            and abs(self.cn_first) < 1e-10 and abs(self.cn_second) < 1e-10


def mu_branch_check(p=None):
    """Periodicity integrals for ``mu = dn`` (fails the second) and ``mu = cn`` (passes both)."""
    if p is None:
        p = figure_eight_modulus()
    K = sf.complete_K(p)
    knots = np.arange(5) * K

    def integ(g):
        return sum(quad(g, a, b, epsabs=1e-15, epsrel=1e-13)[0] for a, b in zip(knots[:-1], knots[1:]))

    def parts(which):
        def first(t):
            s, c, d = sf.jacobi_sn_cn_dn(t, p)
            return float((d if which == "dn" else c) * s * d)

        def second(t):
            s, c, d = sf.jacobi_sn_cn_dn(t, p)
            return float((d if which == "dn" else c) * (1.0 - 2.0 * p * p * s * s))

        return integ(first), integ(second)

    a, b = parts("dn")
    c, d = parts("cn")
    return MuBranchReport(p, a, b, c, d)
