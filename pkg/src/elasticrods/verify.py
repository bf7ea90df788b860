"""Residual checks grouped into named suites.

Every check yields ``(name, residual, tolerance)`` and passes when
``residual < tolerance``.  Count-type checks (violations, wrong windings)
use a tolerance of ``0.5`` so that a single violation fails.

``faults`` injects deliberate errors for testing the harness itself; the only
fault currently understood is ``"flip_N"``, which negates ``N`` in every set of
constants the suites derive.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, trapezoid

from . import specfun as sf
from .closure import KnotSpec, solve_constant_torsion_knot, solve_knot, x_axis_profile
from .homotopy import landmark_points, trace_level, v_zero_prediction, frame_indices
from .paramspace import (A_of_p, DiskPoint, LocusKind, derive_constants, find_p_max,
                         identity_residuals, kida_small_p_limit)
from .rodsynth import (delta_theta, delta_theta_smooth, dtheta_dt, dz_dt, synthesize, theta_of_t,
                       verify_first_integrals, z_of_t)
from .stability import (circle_stability, figure_eight_data, figure_eight_modulus, mu_branch_check,
                        solve_H_of_h, valid_h_bound, Verdict)

KNOWN_FAULTS = ("flip_N",)
COUNT_TOL = 0.5
_QUAD = dict(epsabs=1e-14, epsrel=1e-13, limit=500)


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    passed: bool
    default_tolerance: float
    note: str = ""

    @property
    def tolerance_induced(self):
        """Failed only because the tolerance was tightened below its default."""
        return (not self.passed) and self.residual < self.default_tolerance


@dataclass
class VerifyReport:
    suite: str
    checks: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def overall(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    @property
    def genuine_failures(self):
        return [c for c in self.checks if not c.passed and not c.tolerance_induced]

    def as_dict(self):
        return {"suite": self.suite, "overall": self.overall,
                "checks": [{"name": c.name, "residual": c.residual, "tolerance": c.tolerance,
                            "pass": c.passed, "tolerance_induced": c.tolerance_induced, "note": c.note}
                           for c in self.checks]}

    def table(self):
        w = max([len(c.name) for c in self.checks] + [5])
        lines = [f"{'check':<{w}}  {'residual':>11}  {'tolerance':>9}  result"]
        for c in self.checks:
            flag = "pass" if c.passed else ("FAIL (tolerance-induced)" if c.tolerance_induced else "FAIL")
            lines.append(f"{c.name:<{w}}  {c.residual:11.3e}  {c.tolerance:9.1e}  {flag}")
        lines.append(f"overall: {'pass' if self.overall else 'FAIL'}")
        return "\n".join(lines)


@dataclass
class _Ctx:
    rng: np.random.Generator
    faults: frozenset
    method: str
    notes: dict = field(default_factory=dict)

    def constants(self, pt):
        c = derive_constants(pt)
        if "flip_N" in self.faults:
            c = dataclasses.replace(c, N=-c.N)
        return c


def _random_points(rng, n, r_lo=1e-3, r_hi=0.999):
    # area-uniform in the annulus r_lo < |(X, Y)| < r_hi
    r = np.sqrt(rng.uniform(r_lo ** 2, r_hi ** 2, n))
    ang = rng.uniform(0.0, 2.0 * math.pi, n)
    return [DiskPoint.from_xy(a * math.cos(b), a * math.sin(b)) for a, b in zip(r, ang)]


# --- suites ---------------------------------------------------------------------------


def suite_identities(ctx):
    ps = np.logspace(-6, math.log10(1.0 - 1e-6), 50)
    ps[-1] = 1.0 - 1e-6
    leg = 0.0
    for p in ps:
        pp = sf.complementary(p)
        K, E, Kp, Ep = sf.complete_K(p), sf.complete_E(p), sf.complete_K(pp), sf.complete_E(pp)
        leg = max(leg, abs(E * Kp + Ep * K - K * Kp - 0.5 * math.pi))
    yield "legendre_relation", leg, 1e-12

    t = ctx.rng.uniform(-20.0, 20.0, 1000)
    pr = ctx.rng.uniform(0.0, 1.0, 1000)
    sq1 = sq2 = 0.0
    for ti, p in zip(t, pr):
        sn, cn, dn = sf.jacobi_sn_cn_dn(ti, p)
        sq1 = max(sq1, abs(sn * sn + cn * cn - 1.0))
        sq2 = max(sq2, abs(dn * dn + p * p * sn * sn - 1.0))
    yield "jacobi_sn2_cn2", sq1, 1e-12
    yield "jacobi_dn2_p2sn2", sq2, 1e-12

    zeros = per = 0.0
    for p in (0.1, 0.3, 0.5, 0.7, 0.9):
        b = sf.elliptic_bundle(p)
        zeros = max(zeros, abs(sf.theta_Theta(1j * b.K_prime, p)),
                    abs(sf.theta_Theta1(b.K + 1j * b.K_prime, p)), abs(sf.theta_H1(b.K, p)),
                    abs(sf.theta_H(0.0, p)))
        u = np.linspace(-1.0, 1.0, 7) * b.K + 0.3j * b.K_prime
        per = max(per,
                  np.max(np.abs(sf.theta_Theta(u + 2 * b.K, p) - sf.theta_Theta(u, p))),
                  np.max(np.abs(sf.theta_Theta1(u + 2 * b.K, p) - sf.theta_Theta1(u, p))),
                  np.max(np.abs(sf.theta_H1(u + 2 * b.K, p) + sf.theta_H1(u, p))))
    yield "theta_zeros", zeros, 1e-12
    yield "theta_periods", per, 1e-12

    zint = 0.0
    for p in (0.3, 0.7, 0.95):
        K = sf.complete_K(p)
        # composite trapezoid is spectrally accurate for a smooth periodic integrand
        tt = np.linspace(0.0, 2 * K, 401)
        zint = max(zint, abs(trapezoid(sf.jacobi_zeta(tt, p), tt)))
    yield "zeta_period_integral", zint, 1e-10


def suite_pmax(ctx):
    pm = find_p_max()
    yield "p_max_value", abs(pm - 0.9089085), 1e-6
    yield "p_max_vs_2E_eq_K", abs(pm - figure_eight_modulus()), 1e-10
    yield "A_at_p_max", abs(A_of_p(pm)), 1e-12


_INTERIOR = [(0.5, 0.3), (0.5, 2.0), (0.3, 4.0), (0.7, 5.5), (0.2, 1.2),
             (0.8, 2.5), (0.05, 2.0), (0.85, 0.1), (0.6, 3.5), (0.4, 5.0)]


def suite_closedform(ctx):
    zres = thres = dres = 0.0
    for p, phi in _INTERIOR:
        c = ctx.constants(DiskPoint.from_polar(p, phi))
        ts = ctx.rng.uniform(0.05, 1.95, 2) * c.K
        for t in ts:
            zq = quad(lambda s: float(dz_dt(s, c)), 0.0, t, **_QUAD)[0]
            knots = [0.0] + ([c.K] if t > c.K else []) + [t]
            tq = sum(quad(lambda s: float(dtheta_dt(s, c)), a, b, **_QUAD)[0] for a, b in zip(knots[:-1], knots[1:]))
            zres = max(zres, abs(z_of_t(t, c) - zq))
            thres = max(thres, abs(theta_of_t(t, c, ctx.method) - tq))
        per = sum(quad(lambda s: float(dtheta_dt(s, c)), a, b, **_QUAD)[0] for a, b in ((0.0, c.K), (c.K, 2 * c.K)))
        dres = max(dres, abs(delta_theta(c) - per))
    yield "z_closed_vs_quadrature", zres, 1e-9
    yield "theta_closed_vs_quadrature", thres, 1e-9
    yield "delta_theta_vs_period_quadrature", dres, 1e-9


def suite_disk(ctx):
    pts = _random_points(ctx.rng, 1000)
    big = bident = nv = 0.0
    sign_bad = 0
    for pt in pts:
        c = ctx.constants(pt)
        r = identity_residuals(c)
        big = max(big, abs(r["A-U^2-V^2"]))
        nv = max(nv, abs(r["N^2 (V form)"]))
        bident = max(bident, abs(r["N^2 (M form)"]))
        if c.N * c.V >= 0.0:
            sign_bad += 1
    yield "A_minus_U2_eq_V2", big, 1e-11
    yield "N2_M_form", bident, 1e-11
    yield "N2_V_form", nv, 1e-11
    ctx.notes["sign_law_N_V"] = "sgn N = -sgn V must hold at every point; counts violations"
    yield "sign_law_N_V", float(sign_bad), COUNT_TOL


def suite_boundary(ctx):
    phi = 2.0 * math.pi / 3.0
    c = ctx.constants(DiskPoint.from_polar(1e-3, phi))
    yield "rim_limit_QII", abs(delta_theta(c) - 2.0 * math.pi * math.sin(phi)), 1e-2
    q1 = abs(delta_theta(ctx.constants(DiskPoint.from_polar(1e-3, math.pi / 4))))
    q3 = abs(delta_theta(ctx.constants(DiskPoint.from_polar(1e-3, 5 * math.pi / 4))))
    yield "rim_limit_QI", q1, 1e-2
    yield "rim_limit_QIII", q3, 1e-2


def suite_kida(ctx):
    yield "kida_small_p", abs(kida_small_p_limit(1e-4) - 2.0 / 3.0), 1e-3


_KNOTS = ((1, 2), (1, 3), (2, 3))


def suite_knots(ctx):
    t0 = time.perf_counter()
    gaps, wrong, unembedded = 0.0, 0, 0
    for m, n in _KNOTS:
        rod = solve_knot(KnotSpec(m, n), method=ctx.method)
        gaps = max(gaps, rod.curve.closure_gap)
        if (abs(rod.knot.m), rod.knot.n) != (m, n):
            wrong += 1
        if not rod.embedded:
            unembedded += 1
    yield "knot_closure_gap", gaps, 1e-6
    yield "knot_winding_mismatches", float(wrong), COUNT_TOL
    yield "knot_not_embedded", float(unembedded), COUNT_TOL
    yield "knot_runtime_s", time.perf_counter() - t0, 30.0


def _frame_windings(fam, frames=8):
    idx = frame_indices(fam, frames)
    out = []
    for i in idx:
        curve = synthesize(fam.chain[i], fam.periods, 128)
        ang = np.unwrap(np.arctan2(curve.y, curve.x))
        out.append((ang[-1] - ang[0]) / (2.0 * math.pi))
    return out


def suite_homotopy(ctx):
    fam = trace_level(1, 2)
    yield "level_residual", float(np.max(np.abs(fam.values - fam.level))), 1e-9
    q_start = int(fam.chain[0].phi % (2 * math.pi) // (0.5 * math.pi)) + 1
    q_end = int(fam.chain[-1].phi % (2 * math.pi) // (0.5 * math.pi)) + 1
    yield "edge_to_edge_IV_II", float((q_start, q_end) not in ((4, 2), (2, 4))), COUNT_TOL
    tab = landmark_points(fam)
    yield "landmark_count_violations", float(len(tab.violations)), COUNT_TOL
    lm = tab.rows.get(LocusKind.SelfIntersecting)
    v0 = abs(v_zero_prediction(lm.point) - fam.level) if lm else float("inf")
    yield "v_zero_prediction", v0, 1e-9
    ps = {k: r.point.p for k, r in tab.rows.items()}
    elastic_top = bool(ps) and max(ps, key=ps.get) is LocusKind.ElasticCurve
    yield "elastic_landmark_largest_p", float(not elastic_top), COUNT_TOL
    w = _frame_windings(fam, 8)
    ends = sorted([round(abs(w[0])), round(abs(w[-1]))])
    ctx.notes["frame_windings"] = [float(x) for x in w]
    yield "frame_end_windings_1_2", float(ends != [1, 2]), COUNT_TOL


def suite_torsion(ctx):
    viol = 0
    lim = 0.0
    for side, expect in ((+1, -math.pi), (-1, math.pi)):
        ps, vals = x_axis_profile(200, side)
        steps = np.diff(vals)
        viol += min(int(np.sum(steps <= 0)), int(np.sum(steps >= 0)))
        # p -> p_max is X -> 0
        lim = max(lim, abs(vals[-1] - expect))
    yield "x_axis_monotone_violations", float(viol), COUNT_TOL
    yield "x_axis_limits_pm_pi", lim, 1e-2
    rod = solve_constant_torsion_knot(1, 3)
    yield "constant_torsion_roots", abs(rod.meta["roots_found"] - 1.0), COUNT_TOL
    yield "constant_torsion_tau_spread", float(np.ptp(rod.curve.tau)), 1e-10


def suite_monotone(ctx):
    pm = find_p_max()
    ps = np.linspace(0.0, pm, 102)[1:-1]
    half = np.linspace(-0.5 * math.pi, 0.5 * math.pi, 102)[1:-1]
    viol = 0
    min_sin = 1.0
    for p in ps:
        for sign, phis in ((+1, half), (-1, half + math.pi)):
            cs = [derive_constants(DiskPoint.from_polar(p, f)) for f in phis]
            vals = np.array([delta_theta_smooth(c) for c in cs])
            viol += int(np.sum(sign * np.diff(vals) <= 0))
            min_sin = min(min_sin, min(math.sin(c.xi) for c in cs))
    yield "lemma_monotone_violations", float(viol), COUNT_TOL
    yield "sin_xi_positive", float(min_sin <= 0.0), COUNT_TOL
    ctx.notes["min_sin_xi"] = min_sin
    g = np.linspace(0.0, pm, 202)[1:-1]
    A = np.array([A_of_p(p) for p in g])
    yield "A_decreasing_violations", float(np.sum(np.diff(A) >= 0)), COUNT_TOL
    yield "A_plus_p2_decreasing_violations", float(np.sum(np.diff(A + g * g) >= 0)), COUNT_TOL


def suite_circle(ctx):
    L = 2.0 * math.pi
    r = circle_stability(1.0, 1.0, 1.0, L)
    yield "circle_threshold", abs(r.threshold - math.sqrt(3.0)), 1e-12
    lo, hi = circle_stability(1.0, 1.0, 1.7, L), circle_stability(1.0, 1.0, 1.8, L)
    flip = lo.verdict is Verdict.Stable and hi.verdict is Verdict.Unstable
    yield "circle_verdict_flip_1p7_1p8", float(not flip), COUNT_TOL
    yield "circle_first_mode_2", float(hi.computed_quantities["first_indefinite_mode"] != 2), COUNT_TOL


def suite_figure8(ctx):
    t0 = time.perf_counter()
    p = figure_eight_modulus()
    d = figure_eight_data(p)
    yield "c1_minus_half", abs(d.c1 + 0.5), 1e-9
    yield "int_nu_cn_rel", abs(d.int_nu_cn / (d.K / (2 * p * p)) - 1.0), 1e-7
    yield "H_rel", abs(d.H / (2 * p * p / d.K) - 1.0), 1e-7
    yield "critical_ratio", abs(d.critical_ratio - 2.0), 1e-6
    h4 = valid_h_bound(p)
    hs = np.linspace(-3.0, h4 - 0.1, 10)
    Hs = np.array([solve_H_of_h(h, p).H for h in hs])
    yield "H_increasing_violations", float(np.sum(np.diff(Hs) <= 0)), COUNT_TOL
    mu = mu_branch_check(p)
    yield "mu_branch_pattern", float(not mu.ok), COUNT_TOL
    yield "figure8_runtime_s", time.perf_counter() - t0, 60.0


def suite_integrals(ctx):
    worst = worst_j = 0.0
    curves = [synthesize(DiskPoint.from_polar(p, phi), 2, method=ctx.method) for p, phi in _INTERIOR]
    curves += [solve_knot(KnotSpec(m, n), method=ctx.method).curve for m, n in _KNOTS]
    curves.append(solve_constant_torsion_knot(1, 3).curve)
    for cv in curves:
        rep = verify_first_integrals(cv)
        worst = max(worst, rep.first, rep.second)
        worst_j = max(worst_j, rep.J_norm, rep.J_drift)
    yield "first_integrals", worst, 1e-8
    yield "J_relative_variation", worst_j, 1e-8


SUITES = {
    "identities": suite_identities,
    "pmax": suite_pmax,
    "closedform": suite_closedform,
    "disk": suite_disk,
    "boundary": suite_boundary,
    "kida": suite_kida,
    "knots": suite_knots,
    "homotopy": suite_homotopy,
    "torsion": suite_torsion,
    "monotone": suite_monotone,
    "circle": suite_circle,
    "figure8": suite_figure8,
    "integrals": suite_integrals,
}


def _tolerance(name, suite, default, overrides):
    if not overrides:
        return default
    for key in (name, f"{suite}.{name}", suite, "*"):
        if key in overrides:
            return float(overrides[key])
    return default


def run_suite(name, seed=0, tolerances=None, faults=(), quad_oracle=False):
    """Run one suite; exceptions inside a suite become a failing ``error`` check."""
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    bad = set(faults) - set(KNOWN_FAULTS)
    if bad:
        raise KeyError(f"unknown fault(s) {sorted(bad)}")
    ctx = _Ctx(np.random.default_rng(seed), frozenset(faults), "quadrature" if quad_oracle else "closed")
    rep = VerifyReport(name)
    t0 = time.perf_counter()
    try:
        for cname, res, tol0 in SUITES[name](ctx):
            tol = _tolerance(cname, name, tol0, tolerances)
            res = float(res)
            rep.checks.append(Check(cname, res, tol, bool(res < tol), tol0, ctx.notes.get(cname, "")))
    except Exception as exc:  # failures are report entries, never raised
        rep.checks.append(Check(f"{name}.error", float("inf"), 0.0, False, 0.0, f"{type(exc).__name__}: {exc}"))
    rep.elapsed = time.perf_counter() - t0
    return rep


def verify_all(seed=0, tolerances=None, faults=(), suites=None, quad_oracle=False):
    """All suites merged into one report named ``all``; check names are prefixed by suite."""
    merged = VerifyReport("all")
    t0 = time.perf_counter()
    for name in suites or SUITES:
        rep = run_suite(name, seed, tolerances, faults, quad_oracle)
        for c in rep.checks:
            merged.checks.append(dataclasses.replace(c, name=c.name if c.name.startswith(name + ".")
                                                     else f"{name}.{c.name}"))
    merged.elapsed = time.perf_counter() - t0
    return merged
