"""Closed-form synthesis of rod centerlines.

The centerline is built in the natural cylindrical frame of its constant
vector field ``J`` (which points along +z and has length ``mu``).  With the
natural parameter ``t = s/(2w)``:

* curvature ``kappa^2 = 1 - (p/w)^2 sn^2 t`` and torsion ``tau = (lambda2 + c/kappa^2)/2``;
* height ``z = Theta'(t)/(mu w Theta(t))``;
* azimuth ``theta = Lambda t + sgn(N) arg Theta1(t + i F_hat)`` with ``Lambda = dtheta/(2K)``;
* Cartesian ``x + iy = sqrt(2Kpp'/pi) e^{i Lambda t} Theta1(t +- i F_hat) / (mu w Theta(t) H1(i F_hat))``.

Close to the self-intersection locus (``1 - M < 1e-6``) the logarithmic
phase loses accuracy.  There the azimuth is read off the Cartesian formula,
which stays regular even where the rod meets the axis.  The ``"quadrature"``
method integrates ``dtheta/dt`` and ``dz/dt`` and serves as an oracle away
from the locus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import specfun as sf
from .exceptions import DomainError, RodError
from .paramspace import derive_constants

FALLBACK_GAP = 1e-6
DEFAULT_SAMPLES = 256
_QUAD = dict(epsabs=1e-14, epsrel=1e-13, limit=500)


class TorsionSingularityError(RodError):
    """Curvature vanishes, so the torsion is undefined."""


@dataclass(frozen=True)
class CurveSample:
    t: float
    r: float
    theta: float
    z: float
    x: float
    y: float
    kappa: float
    tau: float
    J_vec: np.ndarray


@dataclass
class RodCurve:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray
    J: np.ndarray
    constants: object
    periods: int
    delta_theta: float
    closure_gap: float
    used_fallback: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def samples(self):
        return [CurveSample(*vals, self.J[i]) for i, vals in enumerate(
            zip(self.t, self.r, self.theta, self.z, self.x, self.y, self.kappa, self.tau))]

    @property
    def points(self):
        return np.column_stack([self.x, self.y, self.z])

    @property
    def length(self):
        return 2.0 * self.constants.w * (self.t[-1] - self.t[0])


def needs_fallback(c):
    return c.one_minus_M < FALLBACK_GAP


# --- pointwise profiles -------------------------------------------------------


def _sn2(t, c):
    sn, cn, dn = sf.jacobi_sn_cn_dn(t, c.p)
    return sn, cn, dn


def curvature_torsion(t, c):
    """Curvature and torsion at ``t``.

    On the X-axis (``Y = 0``) the curvature ``|cn t|`` has zeros but ``c = 0``
    there, so the torsion stays ``lambda2/2``; anywhere else a zero of the
    curvature is a torsion singularity.
    """
    sn, _, _ = _sn2(t, c)
    k2 = 1.0 - (c.p / c.w) ** 2 * np.square(sn)
    if c.c == 0.0:
        kappa = np.sqrt(np.maximum(k2, 0.0))
        return kappa, np.full_like(kappa, 0.5 * c.lambda2)
    if np.any(k2 <= 0.0):
        raise TorsionSingularityError("curvature vanishes (p = w): torsion undefined")
    return np.sqrt(k2), 0.5 * (c.lambda2 + c.c / k2)


def kappa_s_squared(t, c):
    """``(d kappa/ds)^2``, finite at the curvature zeros of the X-axis rods."""
    sn, cn, dn = _sn2(t, c)
    ratio = (c.p / c.w) ** 2
    k2 = 1.0 - ratio * sn * sn
    # cn^2/kappa^2 is identically 1 when p = w
    q = np.ones_like(k2) if c.Y == 0.0 else cn * cn / k2
    return ratio ** 2 * (sn * dn) ** 2 * q / (4.0 * c.w ** 2)


def z_of_t(t, c):
    return sf.jacobi_zeta(t, c.p) / (c.mu * c.w)


def r_of_t(t, c):
    # X^2 + w^2 - U^2 - p^2 sn^2 = V^2 + p^2 cn^2, which keeps r accurate near the axis
    _, cn, _ = _sn2(t, c)
    return np.sqrt(c.V ** 2 + (c.p * cn) ** 2) / (c.mu * c.w)


def dtheta_dt(t, c):
    sn, cn, _ = _sn2(t, c)
    # 1 - M sn^2 written as cn^2 + (1 - M) sn^2, exact near M = 1
    return c.U + c.N / (np.square(cn) + c.one_minus_M * np.square(sn))


def dz_dt(t, c):
    sn, _, _ = _sn2(t, c)
    return (1.0 - c.E / c.K - (c.p * sn) ** 2) / (c.mu * c.w)


def _Lambda(c):
    return c.U + c.sgnN * ((c.E / c.K - 1.0) * c.F_hat + c.E_hat)


def _cumulative_quad(f, t, c):
    """Integral of ``f`` from 0 to each ``t``, accumulated over sorted ``t``."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    order = np.argsort(t_arr)
    out = np.empty_like(t_arr)
    # quarter-period breakpoints keep the peak of the integrand at an interval edge
    acc, prev = 0.0, 0.0
    for idx in order:
        ti = t_arr[idx]
        lo, hi = (prev, ti) if ti >= prev else (ti, prev)
        brk = np.arange(math.ceil(lo / c.K), math.floor(hi / c.K) + 1) * c.K
        knots = np.unique(np.concatenate([[lo, hi], brk[(brk > lo) & (brk < hi)]]))
        seg = sum(quad(f, a, b, **_QUAD)[0] for a, b in zip(knots[:-1], knots[1:]))
        acc += seg if ti >= prev else -seg
        out[idx] = acc
        prev = ti
    return float(out[0]) if np.ndim(t) == 0 else out


def theta_by_quadrature(t, c):
    """Azimuth by adaptive quadrature of ``U + N/(1 - M sn^2)``.

    Loses accuracy as ``1 - M`` shrinks: the integrand peaks over a width of
    order ``sqrt(1 - M)`` around the near-axis passage.
    """
    return _cumulative_quad(lambda s: float(dtheta_dt(s, c)), t, c)


def z_by_quadrature(t, c):
    return _cumulative_quad(lambda s: float(dz_dt(s, c)), t, c)


def theta_by_phase(t, c):
    """Azimuth as the unwrapped phase of the closed-form ``x + iy``.

    Near the V = 0 locus the rod passes close to the axis and the azimuth
    turns by almost ``pi`` over a vanishing range of ``t``, which neither the
    logarithmic form nor quadrature resolves.  The Cartesian formula stays
    regular there.  Unwrapping cannot tell a turn of ``+pi`` from ``-pi``,
    so each period is shifted by whole turns to reproduce ``delta_theta``.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    P = 2.0 * c.K
    j0 = math.floor(min(0.0, t_arr.min()) / P)
    j1 = math.ceil(max(0.0, t_arr.max()) / P)
    marks = np.arange(j0, j1 + 1) * P
    dense = np.linspace(marks[0], marks[-1], 64 * (j1 - j0) + 1)
    grid = np.unique(np.concatenate([marks, marks[:-1] + c.K, dense, t_arr, [0.0]]))
    x, y = cartesian_xy(grid, c)
    ang = np.unwrap(np.arctan2(y, x))
    d = delta_theta(c)
    for a in marks[:-1]:
        ia, ib, imid = np.searchsorted(grid, [a, a + P, a + c.K])
        turns = round((ang[ib] - ang[ia] - d) / (2.0 * math.pi))
        if turns:
            ang[imid:] -= 2.0 * math.pi * turns
    ang -= ang[np.searchsorted(grid, 0.0)]
    out = ang[np.searchsorted(grid, t_arr)]
    return float(out[0]) if np.ndim(t) == 0 else out


def theta_of_t(t, c, method="closed"):
    """Azimuth with ``theta(0) = 0``; continuous in ``t``.

    ``method="closed"`` uses the theta-function phase, or ``theta_by_phase``
    within ``FALLBACK_GAP`` of the self-intersection locus; ``"quadrature"``
    always integrates.
    """
    if method == "quadrature":
        return theta_by_quadrature(t, c)
    if needs_fallback(c):
        return theta_by_phase(t, c)
    t_arr = np.asarray(t, dtype=float)
    phase = np.imag(sf.log_Theta1(t_arr + 1j * c.F_hat, c.p))
    out = _Lambda(c) * t_arr + c.sgnN * phase
    return float(out) if np.ndim(t) == 0 else out


def delta_theta_smooth(c):
    """Smooth branch ``2KU - pi Lambda0(xi, p)`` of the per-period advance."""
    return 2.0 * c.K * c.U - math.pi * sf.heuman_lambda(c.xi, c.p)


def delta_theta(c):
    """Physical per-period azimuthal advance (smooth branch + 2pi where cos xi < 0)."""
    d = delta_theta_smooth(c)
    return d + 2.0 * math.pi if c.V < 0.0 else d


def cartesian_xy(t, c):
    """``(x, y)`` from the theta-quotient formula."""
    t_arr = np.asarray(t, dtype=float)
    pref = math.sqrt(2.0 * c.K * c.p * c.p_prime / math.pi)
    lam = _Lambda(c)
    num = sf.theta_Theta1(t_arr + 1j * c.sgnN * c.F_hat, c.p)
    den = c.mu * c.w * sf.theta_Theta(t_arr, c.p) * sf.theta_H1(1j * c.F_hat, c.p).real
    zc = pref * np.exp(1j * lam * t_arr) * num / den
    return np.real(zc), np.imag(zc)


def position(t, c, method="closed"):
    """Cartesian position ``(x, y, z)`` at parameter values ``t``."""
    t_arr = np.asarray(t, dtype=float)
    if method == "quadrature":
        r = r_of_t(t_arr, c)
        th = theta_by_quadrature(t_arr, c)
        return r * np.cos(th), r * np.sin(th), z_by_quadrature(t_arr, c)
    x, y = cartesian_xy(t_arr, c)
    return x, y, z_of_t(t_arr, c)


# --- frame and the conserved field J ----------------------------------------------


def _jet(t, c):
    """First three t-derivatives of the position in cylindrical components."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    sn, cn, dn = sf.jacobi_sn_cn_dn(t, c.p)
    p2, mw = c.p ** 2, c.mu * c.w
    s2 = sn * sn
    scd = sn * cn * dn
    d1 = 1.0 - 2.0 * (1.0 + p2) * s2 + 3.0 * p2 * s2 * s2          # d(scd)/dt
    d2 = (-4.0 * (1.0 + p2) * sn + 12.0 * p2 * sn * s2) * cn * dn  # d^2(scd)/dt^2
    # r^2 and its derivatives
    R = (c.V ** 2 + p2 * cn * cn) / mw ** 2
    R1, R2, R3 = (-2.0 * p2 / mw ** 2) * np.array([scd, d1, d2])
    # R vanishes only on the V = 0 locus, where the cylindrical jet is singular anyway
    r = np.sqrt(R)
    r1 = R1 / (2.0 * r)
    r2 = (0.5 * R2 - r1 * r1) / r
    r3 = (0.5 * R3 - 3.0 * r1 * r2) / r
    D = cn * cn + c.one_minus_M * s2
    th1 = c.U + c.N / D
    th2 = 2.0 * c.N * c.M * scd / D ** 2
    th3 = 2.0 * c.N * c.M * (d1 / D ** 2 + 4.0 * c.M * scd * scd / D ** 3)
    z1 = (1.0 - c.E / c.K - p2 * s2) / mw
    z2 = -2.0 * p2 * scd / mw
    z3 = -2.0 * p2 * d1 / mw
    g1 = np.column_stack([r1, r * th1, z1])
    a, b = r2 - r * th1 ** 2, 2.0 * r1 * th1 + r * th2
    g2 = np.column_stack([a, b, z2])
    a1 = r3 - r1 * th1 ** 2 - 2.0 * r * th1 * th2
    b1 = 2.0 * r2 * th1 + 3.0 * r1 * th2 + r * th3
    g3 = np.column_stack([a1 - b * th1, b1 + a * th1, z3])
    return g1, g2, g3


def frenet_cylindrical(t, c):
    """Frenet frame in cylindrical components ``(e_r, e_theta, e_z)`` from analytic derivatives.

    Returns ``T, N, B`` (each ``(n, 3)``) and the frame curvature ``|T_s|``.
    ``N`` and ``B`` are undefined where the curvature vanishes.
    """
    g1, g2, _ = _jet(t, c)
    s_t = 2.0 * c.w
    T = g1 / s_t
    Ts = g2 / s_t ** 2
    kap = np.linalg.norm(Ts, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        Nv = Ts / kap[:, None]
    return T, Nv, np.cross(T, Nv), kap


def J_field(t, c, theta=None):
    """Cartesian components of ``J``.

    ``J = (kappa^2/2 - lambda1) T + kappa_s N + kappa (tau - lambda2) B`` is
    evaluated in the equivalent frame-free form
    ``(3 kappa^2/2 - lambda1) T + T_ss - lambda2 T x T_s``, which stays
    regular at inflection points.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        g1, g2, g3 = _jet(t, c)
    s_t = 2.0 * c.w
    T, Ts, Tss = g1 / s_t, g2 / s_t ** 2, g3 / s_t ** 3
    k2 = np.sum(Ts * Ts, axis=1)
    Jc = (1.5 * k2 - c.lambda1)[:, None] * T + Tss - c.lambda2 * np.cross(T, Ts)
    if theta is None:
        theta = theta_of_t(t, c)
    co, si = np.cos(theta), np.sin(theta)
    return np.column_stack([Jc[:, 0] * co - Jc[:, 1] * si, Jc[:, 0] * si + Jc[:, 1] * co, Jc[:, 2]])


# --- synthesis -------------------------------------------------------------------


def _period_grid(c, samples_per_period, max_step=0.05):
    base = np.linspace(0.0, 2.0 * c.K, samples_per_period + 1)
    # subdivide intervals where theta turns by more than max_step radians
    rate = np.abs(dtheta_dt(0.5 * (base[1:] + base[:-1]), c))
    extra = np.minimum(np.ceil(rate * np.diff(base) / max_step), 16).astype(int)
    pieces = [np.linspace(a, b, k + 1)[:-1] for a, b, k in zip(base[:-1], base[1:], np.maximum(extra, 1))]
    return np.concatenate(pieces)


def synthesize(pt, n_periods=1, samples_per_period=DEFAULT_SAMPLES, method="closed", constants=None):
    """Sample the centerline of the rod at disk point ``pt`` over ``n_periods`` periods."""
    if n_periods < 1:
        raise DomainError("n_periods must be >= 1")
    if samples_per_period < 16:
        raise DomainError("samples_per_period must be >= 16")
    c = constants if constants is not None else derive_constants(pt)
    one = _period_grid(c, samples_per_period)
    t = np.concatenate([one + 2.0 * c.K * j for j in range(n_periods)] + [[2.0 * c.K * n_periods]])
    kappa, tau = curvature_torsion(t, c)
    r = r_of_t(t, c)
    if method == "quadrature":
        theta = theta_by_quadrature(t, c)
        x, y = r * np.cos(theta), r * np.sin(theta)
        z = z_by_quadrature(t, c)
        label = "quadrature"
    else:
        x, y = cartesian_xy(t, c)
        z = z_of_t(t, c)
        label = "phase" if needs_fallback(c) else "closed"
        theta = theta_by_phase(t, c) if label == "phase" else theta_of_t(t, c)
    fallback = label != "closed"
    J = J_field(t, c, theta)
    dth = delta_theta(c)
    gap = float(np.linalg.norm([x[-1] - x[0], y[-1] - y[0], z[-1] - z[0]]))
    return RodCurve(t=t, x=x, y=y, z=z, r=r, theta=theta, kappa=kappa, tau=tau, J=J,
                    constants=c, periods=n_periods, delta_theta=dth, closure_gap=gap,
                    used_fallback=fallback, meta={"method": label})


@dataclass
class FirstIntegralReport:
    first: float
    second: float
    J_norm: float
    J_drift: float
    J_axis: float
    a_mu2: float
    r_profile: float
    tolerance: float = 1e-8

    @property
    def ok(self):
        return max(self.first, self.second, self.J_norm, self.J_drift, self.J_axis) < self.tolerance

    def as_dict(self):
        return {k: getattr(self, k) for k in
                ("first", "second", "J_norm", "J_drift", "J_axis", "a_mu2", "r_profile", "tolerance")} | {"ok": self.ok}


def verify_first_integrals(curve, tolerance=1e-8):
    """Residuals of the two first integrals and of the constancy of ``J``.

    ``J`` residuals are relative to ``mu``; the others are absolute.
    """
    c = curve.constants
    t = curve.t
    k, tau = curve.kappa, curve.tau
    first = np.max(np.abs(k ** 2 * (2.0 * tau - c.lambda2) - c.c))
    second = np.max(np.abs(kappa_s_squared(t, c) + 0.25 * (k ** 2 - 2.0 * c.lambda1) ** 2
                           + k ** 2 * (tau - c.lambda2) ** 2 - c.mu ** 2))
    Jn = np.linalg.norm(curve.J, axis=1)
    J_norm = float(np.max(np.abs(Jn - c.mu)) / c.mu)
    J_drift = float(np.max(np.linalg.norm(curve.J - curve.J[0], axis=1)) / c.mu)
    J_axis = float(np.max(np.linalg.norm(curve.J - np.array([0.0, 0.0, c.mu]), axis=1)) / c.mu)
    a_mu2 = abs(c.a * c.mu ** 2 - (0.5 * c.c - c.lambda1 * c.lambda2))
    rr = np.hypot(curve.x, curve.y)
    r_profile = float(np.max(np.abs(rr * rr - curve.r ** 2) * (c.mu * c.w) ** 2))
    return FirstIntegralReport(float(first), float(second), J_norm, J_drift, J_axis,
                               float(a_mu2), r_profile, tolerance)


@dataclass
class EmbeddingReport:
    embedded: bool
    r_min: float
    r_min_formula: float
    rz_simple: bool


def _segments_cross(P):
    """True if any two non-adjacent segments of the closed polyline ``P`` intersect."""
    a = P
    b = np.roll(P, -1, axis=0)
    n = len(P)
    d = b - a
    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if j.size == 0:
            continue
        e = d[j]
        denom = d[i, 0] * e[:, 1] - d[i, 1] * e[:, 0]
        w_ = a[j] - a[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (w_[:, 0] * e[:, 1] - w_[:, 1] * e[:, 0]) / denom
            u = (w_[:, 0] * d[i, 1] - w_[:, 1] * d[i, 0]) / denom
        if np.any((denom != 0) & (s > 0) & (s < 1) & (u > 0) & (u < 1)):
            return True
    return False


def torus_embedding_check(curve, tolerance=1e-8):
    """Embedded iff the meridian loop avoids the axis and is a simple closed curve."""
    c = curve.constants
    r_formula = abs(c.V) / (c.mu * c.w)
    mask = curve.t <= curve.t[0] + 2.0 * c.K + 1e-12
    r1 = curve.r[mask][:-1]
    z1 = curve.z[mask][:-1]
    r_min = float(np.min(curve.r))
    simple = not _segments_cross(np.column_stack([r1, z1]))
    return EmbeddingReport(embedded=bool(r_formula > tolerance and r_min > tolerance and simple),
                           r_min=r_min, r_min_formula=r_formula, rz_simple=simple)
