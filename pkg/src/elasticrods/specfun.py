"""Elliptic integrals, Jacobi elliptic functions and Jacobi theta functions.

Everything here is parametrized by the elliptic *modulus* ``p`` (not the
parameter ``m = p**2``).

Theta-function convention
-------------------------
Jacobi's original theta functions of argument ``u`` (period ``2K``) are
expressed through the classical nome-``q`` functions ``theta_1..theta_4`` of
argument ``v = pi*u/(2K)`` with ``q = exp(-pi*K'/K)``::

    Theta(u)  = theta_4(v)      zero at u = iK'
    Theta1(u) = theta_3(v)      zero at u = K + iK'
    H(u)      = theta_1(v)      zero at u = 0
    H1(u)     = theta_2(v)      zero at u = K

``Theta`` and ``Theta1`` have period ``2K``; ``H`` and ``H1`` change sign
under ``u -> u + 2K``.  All four are evaluated by their q-series, summed
until the next term drops below ``1e-16`` of the accumulated magnitude
(at most 64 terms).  Arguments must satisfy ``|Im u| <= K'``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DivergenceError, DomainError, PrecisionWarning, StripError

_SERIES_RTOL = 1e-16
_SERIES_MAX_TERMS = 64
_NOME_WARN = 0.95


def _check_modulus(p, allow_one=False):
    p = float(p)
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise DomainError(f"modulus p={p!r} outside [0, 1]")
    if p == 1.0 and not allow_one:
        raise DivergenceError("K(p) diverges at p = 1")
    return p


def complementary(p):
    """Return ``p' = sqrt(1 - p**2)`` without cancellation near ``p = 1``."""
    return math.sqrt((1.0 - p) * (1.0 + p))


@dataclass(frozen=True)
class Modulus:
    p: float
    p_prime: float

    @classmethod
    def of(cls, p):
        p = _check_modulus(p, allow_one=True)
        return cls(p, complementary(p))


@dataclass(frozen=True)
class EllipticBundle:
    p: float
    K: float
    E: float
    K_prime: float
    E_prime: float
    q: float


def agm(a, b, tol=1e-16):
    for _ in range(64):
        if abs(a - b) <= tol * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def complete_K(p):
    """Complete elliptic integral of the first kind, by the AGM."""
    p = _check_modulus(p)
    return math.pi / (2.0 * agm(1.0, complementary(p)))


def complete_E(p):
    """Complete elliptic integral of the second kind.

    Uses the AGM with the accumulated ``sum 2**(n-1) c_n**2`` correction.
    """
    p = _check_modulus(p, allow_one=True)
    if p == 1.0:
        return 1.0
    a, b = 1.0, complementary(p)
    c = p
    acc = 0.5 * c * c
    scale = 0.5
    for _ in range(64):
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        scale *= 2.0
        term = scale * c * c
        acc += term
        # c stalls at roundoff level instead of reaching zero
        if term < 1e-18 or abs(c) < 1e-15 * a:
            break
    return math.pi / (2.0 * a) * (1.0 - acc)


def elliptic_bundle(p):
    p = _check_modulus(p)
    if p == 0.0:
        raise DivergenceError("K'(0) diverges")
    pp = complementary(p)
    K, E = complete_K(p), complete_E(p)
    Kp, Ep = complete_K(pp), complete_E(pp)
    return EllipticBundle(p, K, E, Kp, Ep, math.exp(-math.pi * Kp / K))


# --- Carlson symmetric forms -------------------------------------------------


def _max_dev(a, x, y, z):
    if a.ndim == 0:
        a, x, y, z = float(a), float(x), float(y), float(z)
        return max(abs(a - x), abs(a - y), abs(a - z)) / abs(a)
    spread = np.maximum(np.maximum(abs(a - x), abs(a - y)), abs(a - z))
    return float(np.max(spread / abs(a)))


def carlson_rf(x, y, z):
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    x, y, z = np.broadcast_arrays(x, y, z)
    x, y, z = x.copy(), y.copy(), z.copy()
    for _ in range(40):
        a = (x + y + z) / 3.0
        dev = _max_dev(a, x, y, z)
        if dev < 1e-3:
            break
        sx, sy, sz = np.sqrt(x), np.sqrt(y), np.sqrt(z)
        lam = sx * sy + sy * sz + sz * sx
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
    a = (x + y + z) / 3.0
    dx, dy = 1.0 - x / a, 1.0 - y / a
    dz = -(dx + dy)
    e2 = dx * dy - dz * dz
    e3 = dx * dy * dz
    # series through degree 7 for relative error ~ dev**8
    s = (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0
         - 5.0 * e2 ** 3 / 208.0 + 3.0 * e3 * e3 / 104.0 + e2 * e2 * e3 / 16.0)
    return s / np.sqrt(a)


def carlson_rd(x, y, z):
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    x, y, z = np.broadcast_arrays(x, y, z)
    x, y, z = x.copy(), y.copy(), z.copy()
    acc = np.zeros_like(x)
    fac = 1.0
    for _ in range(40):
        a = (x + y + 3.0 * z) / 5.0
        dev = _max_dev(a, x, y, z)
        if dev < 1e-3:
            break
        sx, sy, sz = np.sqrt(x), np.sqrt(y), np.sqrt(z)
        lam = sx * sy + sy * sz + sz * sx
        acc = acc + fac / (sz * (z + lam))
        fac *= 0.25
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
    a = (x + y + 3.0 * z) / 5.0
    dx, dy, dz = (a - x) / a, (a - y) / a, (a - z) / a
    ea = dx * dy
    eb = dz * dz
    ec = ea - eb
    ed = ea - 6.0 * eb
    ee = ed + ec + ec
    s = (1.0 + ed * (-3.0 / 14.0 + 9.0 / 88.0 * ed - 9.0 / 52.0 * dz * ee)
         + dz * (ee / 6.0 + dz * (-9.0 / 22.0 * ec + dz * 3.0 / 26.0 * ea)))
    return 3.0 * acc + fac * s / (a * np.sqrt(a))


def _reduce_angle(xi):
    """Split ``xi = j*pi + r`` with ``r`` in ``[-pi/2, pi/2]``."""
    xi = np.asarray(xi, dtype=float)
    j = np.round(xi / math.pi)
    return j, xi - j * math.pi


def incomplete_F(xi, p):
    """Legendre incomplete integral of the first kind, valid for any real ``xi``."""
    p = _check_modulus(p)
    xi_arr = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi_arr)):
        raise DomainError("amplitude must be finite")
    j, r = _reduce_angle(xi_arr)
    s, c = np.sin(r), np.cos(r)
    val = s * carlson_rf(c * c, 1.0 - (p * s) ** 2, 1.0)
    out = val + 2.0 * j * complete_K(p) if np.any(j) else val
    return float(out) if np.ndim(xi) == 0 else out


def incomplete_E(xi, p):
    """Legendre incomplete integral of the second kind, valid for any real ``xi``."""
    p = _check_modulus(p, allow_one=True)
    xi_arr = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi_arr)):
        raise DomainError("amplitude must be finite")
    j, r = _reduce_angle(xi_arr)
    s, c = np.sin(r), np.cos(r)
    cc, dd = c * c, 1.0 - (p * s) ** 2
    val = s * carlson_rf(cc, dd, 1.0) - (p * p / 3.0) * s ** 3 * carlson_rd(cc, dd, 1.0)
    out = val + 2.0 * j * complete_E(p) if np.any(j) else val
    return float(out) if np.ndim(xi) == 0 else out


def heuman_lambda(xi, p):
    """Heuman's lambda function ``Lambda_0(xi, p)``.

    ``(2/pi) [E F(xi, p') + K E(xi, p') - K F(xi, p')]`` with ``K, E`` at
    modulus ``p``.  Defined here on ``0 <= xi <= pi``.
    """
    p = _check_modulus(p)
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < 0.0) or np.any(xi_arr > math.pi):
        raise DomainError("heuman_lambda needs 0 <= xi <= pi")
    if p == 0.0:
        # E - K = 0 removes the divergent F(xi, 1) term; what is left is E(xi, 1)
        out = np.where(xi_arr <= 0.5 * math.pi, np.sin(xi_arr), 2.0 - np.sin(xi_arr))
        return float(out) if np.ndim(xi) == 0 else out
    K, E = complete_K(p), complete_E(p)
    pp = complementary(p)
    F1 = incomplete_F(xi_arr, pp)
    E1 = incomplete_E(xi_arr, pp)
    out = (2.0 / math.pi) * (E * F1 + K * E1 - K * F1)
    return float(out) if np.ndim(xi) == 0 else out


# --- Jacobi elliptic functions ------------------------------------------------


def _agm_ladder(p):
    a = [1.0]
    b = complementary(p)
    c = [p]
    # a - b can stall at one ulp, so stop at the unit roundoff rather than below it
    while abs(c[-1]) > 2.0 ** -52 * a[-1] and len(a) < 64:
        an, bn, cn = 0.5 * (a[-1] + b), math.sqrt(a[-1] * b), 0.5 * (a[-1] - b)
        a.append(an)
        c.append(cn)
        b = bn
    return a, c


def jacobi_amplitude(t, p):
    """Amplitude ``am(t, p)``, continuous and increasing in ``t`` for ``p < 1``."""
    p = _check_modulus(p)
    t_arr = np.asarray(t, dtype=float)
    if p == 0.0:
        return t_arr.copy() if np.ndim(t) else float(t)
    K = complete_K(p)
    # am(t + 2K) = am(t) + pi
    j = np.round(t_arr / (2.0 * K))
    r = t_arr - 2.0 * K * j
    a, c = _agm_ladder(p)
    n = len(a) - 1
    phi = (2.0 ** n) * a[n] * r
    for k in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(np.clip(c[k] / a[k] * np.sin(phi), -1.0, 1.0)))
    out = phi + math.pi * j
    return float(out) if np.ndim(t) == 0 else out


def jacobi_sn_cn_dn(t, p):
    """Return ``(sn, cn, dn)`` at real ``t`` for modulus ``p`` in ``[0, 1]``."""
    p = _check_modulus(p, allow_one=True)
    t_arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t_arr)):
        raise DomainError("t must be finite")
    if p == 1.0:
        sn, cn = np.tanh(t_arr), 1.0 / np.cosh(t_arr)
        dn = cn
    elif p == 0.0:
        sn, cn, dn = np.sin(t_arr), np.cos(t_arr), np.ones_like(t_arr)
    else:
        K = complete_K(p)
        j = np.round(t_arr / (2.0 * K))
        r = t_arr - 2.0 * K * j
        a, c = _agm_ladder(p)
        n = len(a) - 1
        phi = (2.0 ** n) * a[n] * r
        for k in range(n, 0, -1):
            phi = 0.5 * (phi + np.arcsin(np.clip(c[k] / a[k] * np.sin(phi), -1.0, 1.0)))
        sign = np.where(j % 2 == 0, 1.0, -1.0)
        sn = sign * np.sin(phi)
        cn = sign * np.cos(phi)
        dn = np.sqrt(complementary(p) ** 2 + (p * np.cos(phi)) ** 2)
    if np.ndim(t) == 0:
        return float(sn), float(cn), float(dn)
    return sn, cn, dn


# --- Theta functions ----------------------------------------------------------


def nome(p):
    b = elliptic_bundle(p)
    return b.q


def _theta_setup(u, p):
    b = elliptic_bundle(p)
    if b.q > _NOME_WARN:
        warnings.warn(f"nome q={b.q:.4f} > {_NOME_WARN}: theta series lose precision",
                      PrecisionWarning, stacklevel=3)
    u = np.asarray(u)
    if np.any(np.abs(np.imag(u)) > b.K_prime * (1.0 + 1e-9)):
        raise StripError(f"|Im u| exceeds K'={b.K_prime:.6g}")
    v = (math.pi / (2.0 * b.K)) * u
    return b, v


def _series(v, q, kind, deriv):
    """Sum one of the four classical theta series (or its v-derivative)."""
    v = np.asarray(v, dtype=complex if np.iscomplexobj(v) else float)
    if kind in (3, 4):
        total = np.zeros_like(v) if deriv else np.ones_like(v)
        scale = np.ones(v.shape)
    else:
        total = np.zeros_like(v)
        scale = np.zeros(v.shape)
    for n in range(_SERIES_MAX_TERMS):
        if kind in (1, 2):
            k = 2 * n + 1
            coef = 2.0 * q ** ((n + 0.5) ** 2) * ((-1) ** n if kind == 1 else 1)
        else:
            if n == 0:
                continue
            k = 2 * n
            coef = 2.0 * q ** (n * n) * ((-1) ** n if kind == 4 else 1)
        if coef == 0.0:
            break
        if kind == 1:
            term = coef * (k * np.cos(k * v) if deriv else np.sin(k * v))
        else:
            term = coef * (-k * np.sin(k * v) if deriv else np.cos(k * v))
        total = total + term
        mag = np.abs(term)
        scale = scale + mag
        if np.all(mag <= _SERIES_RTOL * np.maximum(scale, 1e-300)):
            break
    return total


def _theta(u, p, kind, deriv=False):
    b, v = _theta_setup(u, p)
    out = _series(v, b.q, kind, deriv)
    if deriv:
        out = out * (math.pi / (2.0 * b.K))
    if np.ndim(u) == 0:
        return complex(out) if np.iscomplexobj(out) else float(out)
    return out


def theta_Theta(u, p, deriv=False):
    """Jacobi ``Theta(u)``; period ``2K``, ``Theta(iK') = 0``."""
    return _theta(u, p, 4, deriv)


def theta_Theta1(u, p, deriv=False):
    """Jacobi ``Theta_1(u)``; period ``2K``, ``Theta_1(K + iK') = 0``."""
    return _theta(u, p, 3, deriv)


def theta_H(u, p, deriv=False):
    """Jacobi ``H(u)``; ``H(0) = 0``, ``H(u + 2K) = -H(u)``."""
    return _theta(u, p, 1, deriv)


def theta_H1(u, p, deriv=False):
    """Jacobi ``H_1(u)``; ``H_1(K) = 0``, ``H_1(u + 2K) = -H_1(u)``."""
    return _theta(u, p, 2, deriv)


def log_Theta1(u, p):
    """Continuous branch of ``log Theta_1(u)`` for ``|Im u| < K'``.

    Uses the Jacobi triple product, in which every factor is ``1 + z`` with
    ``|z| < 1`` inside the strip, so the principal logarithm of each factor is
    continuous in ``u``.  The imaginary part is therefore the unwrapped phase.
    """
    b, v = _theta_setup(u, p)
    q = b.q
    v = np.asarray(v, dtype=complex)
    im = np.max(np.abs(v.imag)) if v.size else 0.0
    e_plus = np.exp(2j * v)
    e_minus = np.exp(-2j * v)
    out = np.zeros_like(v)
    for n in range(1, 4 * _SERIES_MAX_TERMS):
        qn = q ** (2 * n - 1)
        out = out + np.log1p(-(q ** (2 * n)) + 0j) + np.log1p(qn * e_plus) + np.log1p(qn * e_minus)
        if qn * math.exp(2.0 * im) < 1e-18:
            break
    return complex(out) if np.ndim(u) == 0 else out


def jacobi_zeta(t, p):
    """Jacobi zeta function ``Theta'(t)/Theta(t)`` for real ``t``."""
    p = _check_modulus(p)
    t_arr = np.asarray(t, dtype=float)
    if p == 0.0:
        out = np.zeros_like(t_arr)
    else:
        out = theta_Theta(t_arr, p, deriv=True) / theta_Theta(t_arr, p)
    return float(out) if np.ndim(t) == 0 else out
