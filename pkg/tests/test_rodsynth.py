import math

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from elasticrods.exceptions import DomainError
from elasticrods.paramspace import DiskPoint, derive_constants, find_p_max, selfint_phi
from elasticrods.rodsynth import (curvature_torsion, delta_theta, dtheta_dt, dz_dt, frenet_cylindrical,
                                  kappa_s_squared, position, r_of_t, synthesize, theta_by_phase, theta_by_quadrature,
                                  theta_of_t,
                                  torus_embedding_check, verify_first_integrals, z_of_t)

QUAD = dict(epsabs=1e-14, epsrel=1e-13, limit=500)
GENERIC = [(0.5, 0.3), (0.3, 4.0), (0.7, 5.5), (0.2, 1.2), (0.85, 2.5)]


def consts(p, phi):
    return derive_constants(DiskPoint.from_polar(p, phi))


def fd_curvature_torsion(t, c, h=3e-3):
    """Curvature, torsion and unit tangent from fourth-order finite differences of the position."""
    f = {k: np.array(position(np.array([t + k * h]), c)).ravel() for k in range(-3, 4)}
    d1 = (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * h)
    d2 = (-f[-2] + 16 * f[-1] - 30 * f[0] + 16 * f[1] - f[2]) / (12 * h * h)
    d3 = (f[-3] - 8 * f[-2] + 13 * f[-1] - 13 * f[1] + 8 * f[2] - f[3]) / (8 * h ** 3)
    cr = np.cross(d1, d2)
    return np.linalg.norm(cr) / np.linalg.norm(d1) ** 3, cr @ d3 / (cr @ cr), d1 / np.linalg.norm(d1)


class TestProfiles:
    def test_max_curvature_at_zero(self):
        for p, phi in GENERIC:
            k, _ = curvature_torsion(np.array([0.0]), consts(p, phi))
            assert k[0] == pytest.approx(1.0, abs=1e-15)

    def test_x_axis_constant_torsion(self):
        c = consts(0.6, math.pi)
        _, tau = curvature_torsion(np.linspace(0, 4 * c.K, 50), c)
        assert np.ptp(tau) == 0.0 and tau[0] == pytest.approx(c.lambda2 / 2)

    def test_z_endpoints(self):
        c = consts(0.5, 2.0)
        assert z_of_t(0.0, c) == 0.0
        assert abs(z_of_t(2 * c.K, c)) < 1e-14

    def test_z_against_quadrature(self):
        c = consts(0.5, 2.0)
        t = 0.8 * c.K
        assert abs(z_of_t(t, c) - quad(lambda s: float(dz_dt(s, c)), 0, t, **QUAD)[0]) < 1e-9

    def test_mean_z_rate_vanishes(self):
        c = consts(0.4, 5.0)
        assert abs(quad(lambda s: float(dz_dt(s, c)), 0, 2 * c.K, points=[c.K], **QUAD)[0]) < 1e-12

    def test_theta_against_quadrature(self):
        c = consts(0.5, 2.0)
        assert theta_of_t(0.0, c) == 0.0
        want = quad(lambda s: float(dtheta_dt(s, c)), 0, 1.3, **QUAD)[0]
        assert abs(theta_of_t(1.3, c) - want) < 1e-9

    def test_random_points_against_ode(self):
        """z and theta against direct ODE integration of their rates at 20 points x 8 times."""
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(20):
            c = consts(rng.uniform(0.02, 0.88), rng.uniform(0, 2 * math.pi))
            ts = np.sort(rng.uniform(0, 4 * c.K, 8))
            sol = solve_ivp(lambda s, y: [float(dtheta_dt(s, c)), float(dz_dt(s, c))], (0, ts[-1]), [0.0, 0.0],
                            t_eval=ts, method="DOP853", rtol=1e-13, atol=1e-14)
            worst = max(worst, np.max(np.abs(theta_of_t(ts, c) - sol.y[0])), np.max(np.abs(z_of_t(ts, c) - sol.y[1])))
        assert worst < 1e-9

    def test_delta_theta_against_period_quadrature(self):
        for p, phi in GENERIC:
            c = consts(p, phi)
            per = sum(quad(lambda s: float(dtheta_dt(s, c)), a, b, **QUAD)[0] for a, b in ((0, c.K), (c.K, 2 * c.K)))
            assert abs(delta_theta(c) - per) < 1e-9

    def test_elastic_axis_advance_limits(self):
        pm = find_p_max()
        near_rim = delta_theta(consts(1e-4, math.pi / 2))
        near_origin = delta_theta(consts(pm * (1 - 1e-8), math.pi / 2))
        assert -0.01 < near_rim < 0 and abs(near_origin + math.pi) < 1e-2

    def test_r_min_at_quarter_period(self):
        # the minimum of r^2 sits where sn^2 = 1
        for p, phi in GENERIC:
            c = consts(p, phi)
            t = np.linspace(0, 2 * c.K, 401)
            r2 = r_of_t(t, c) ** 2
            want = (c.A - c.U ** 2) / (c.mu * c.w) ** 2
            assert r_of_t(c.K, c) ** 2 == pytest.approx(want, rel=1e-13)
            assert r2.min() >= want * (1 - 1e-14)

    def test_second_first_integral_with_fd_kappa_s(self):
        c = consts(0.5, 0.3)
        t = np.linspace(0.05, 2 * c.K - 0.05, 100)
        k, tau = curvature_torsion(t, c)
        res = kappa_s_squared(t, c) + 0.25 * (k ** 2 - 2 * c.lambda1) ** 2 + k ** 2 * (tau - c.lambda2) ** 2 - c.mu ** 2
        assert np.max(np.abs(res)) < 1e-10
        h = 1e-5
        kp = (curvature_torsion(t + h, c)[0] - curvature_torsion(t - h, c)[0]) / (2 * h) / (2 * c.w)
        np.testing.assert_allclose(kp ** 2, kappa_s_squared(t, c), atol=1e-8)


class TestFrenet:
    @pytest.mark.parametrize("p,phi", GENERIC[:4])
    def test_finite_difference_frame(self, p, phi):
        c = consts(p, phi)
        for t in np.linspace(0.1, 2 * c.K - 0.1, 7):
            k_fd, tau_fd, T_fd = fd_curvature_torsion(t, c)
            k, tau = curvature_torsion(np.array([t]), c)
            assert abs(k_fd - k[0]) < 1e-6
            assert abs(tau_fd - tau[0]) < 1e-6
            T, N, B, _ = frenet_cylindrical(np.array([t]), c)
            th = theta_of_t(t, c)
            rot = np.array([[math.cos(th), -math.sin(th), 0], [math.sin(th), math.cos(th), 0], [0, 0, 1]])
            assert np.linalg.norm(rot @ T[0] - T_fd) < 1e-8
            np.testing.assert_allclose(np.cross(T[0], N[0]), B[0], atol=1e-14)


class TestSynthesis:
    def test_segment_congruence(self):
        for p, phi in GENERIC:
            c = consts(p, phi)
            t = np.linspace(0, 2 * c.K, 50)
            x0, y0, z0 = position(t, c)
            x1, y1, z1 = position(t + 2 * c.K, c)
            d = delta_theta(c)
            np.testing.assert_allclose(x1, x0 * math.cos(d) - y0 * math.sin(d), atol=1e-9)
            np.testing.assert_allclose(y1, x0 * math.sin(d) + y0 * math.cos(d), atol=1e-9)
            np.testing.assert_allclose(z1, z0, atol=1e-9)

    def test_quadrant_parity(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            r = math.sqrt(rng.uniform(1e-4, 0.99))
            a = rng.uniform(0, 2 * math.pi)
            pt = DiskPoint.from_xy(r * math.cos(a), r * math.sin(a))
            q = DiskPoint.from_xy(-pt.X, -pt.Y)
            assert abs(delta_theta(derive_constants(pt)) + delta_theta(derive_constants(q))) < 1e-10

    @pytest.mark.parametrize("p,phi", GENERIC)
    def test_first_integrals(self, p, phi):
        curve = synthesize(DiskPoint.from_polar(p, phi), 2)
        rep = verify_first_integrals(curve)
        assert rep.ok, rep.as_dict()
        assert rep.J_axis < 1e-8 and rep.r_profile < 1e-10

    def test_quadrature_method_agrees(self):
        pt = DiskPoint.from_polar(0.5, 2.0)
        a = synthesize(pt, 1, 64)
        b = synthesize(pt, 1, 64, method="quadrature")
        assert b.used_fallback and not a.used_fallback
        assert np.max(np.abs(a.points - b.points)) < 1e-9

    def test_near_rim_circle(self):
        # close to the second-quadrant rim the rod is a circle of unit radius advancing by 2 pi sin(phi)
        phi = 3 * math.pi / 4
        curve = synthesize(DiskPoint.from_polar(1e-3, phi), 1)
        assert np.ptp(curve.r) / np.mean(curve.r) < 1e-3
        assert abs(curve.delta_theta - 2 * math.pi * math.sin(phi)) < 1e-2

    def test_v_zero_point_not_embedded(self):
        p = 0.5
        curve = synthesize(DiskPoint.from_polar(p, selfint_phi(p)), 2)
        assert curve.used_fallback
        emb = torus_embedding_check(curve)
        assert emb.r_min < 1e-8 and not emb.embedded

    def test_generic_embedded(self):
        emb = torus_embedding_check(synthesize(DiskPoint.from_polar(0.5, 0.3), 1))
        assert emb.embedded and emb.r_min == pytest.approx(emb.r_min_formula, rel=1e-6)

    def test_phase_theta_matches_closed_form_off_locus(self):
        for p, phi in GENERIC:
            c = consts(p, phi)
            t = np.linspace(-3 * c.K, 5 * c.K, 23)
            np.testing.assert_allclose(theta_by_phase(t, c), theta_of_t(t, c), atol=1e-10)

    @pytest.mark.parametrize("offset", [0.0, 1e-9, -1e-9])
    def test_phase_theta_near_v_zero(self, offset):
        # quadrature cannot resolve the near-pi turn at the axis, so check the
        # phase azimuth against the Cartesian positions and the period advance
        p = 0.5
        c = consts(p, selfint_phi(p) + offset)
        t = np.linspace(0.0, 4 * c.K, 41)
        th = theta_of_t(t, c)
        x, y = position(t, c)[:2]
        np.testing.assert_allclose(r_of_t(t, c) * np.cos(th), x, atol=1e-12)
        np.testing.assert_allclose(r_of_t(t, c) * np.sin(th), y, atol=1e-12)
        assert th[20] == pytest.approx(delta_theta(c), abs=1e-9)
        assert th[40] == pytest.approx(2 * delta_theta(c), abs=1e-9)

    def test_quadrature_agrees_moderately_near_v_zero(self):
        p = 0.5
        c = consts(p, selfint_phi(p) + 1e-3)
        t = np.array([0.3, 1.1, 2.0, 2 * c.K])
        np.testing.assert_allclose(theta_by_phase(t, c), theta_by_quadrature(t, c), atol=1e-9)

    def test_argument_errors(self):
        pt = DiskPoint.from_polar(0.5, 1.0)
        with pytest.raises(DomainError):
            synthesize(pt, 0)
        with pytest.raises(DomainError):
            synthesize(pt, 1, 8)

    def test_samples_view(self):
        curve = synthesize(DiskPoint.from_polar(0.5, 1.0), 1, 32)
        s = curve.samples
        assert len(s) == len(curve.t) and s[3].x == curve.x[3]
        assert curve.length == pytest.approx(2 * curve.constants.w * 2 * curve.constants.K)
