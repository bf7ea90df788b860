import math

import numpy as np
import pytest

from elasticrods.exceptions import DomainError
from elasticrods.homotopy import (LANDMARK_KINDS, P_STOP, frame_indices, landmark_points, partials_delta_theta,
                                  trace_level, v_zero_prediction)
from elasticrods.paramspace import DiskPoint, LocusKind, derive_constants, find_p_max, selfint_phi
from elasticrods.rodsynth import delta_theta_smooth, synthesize


def dts(p, phi):
    return delta_theta_smooth(derive_constants(DiskPoint.from_polar(p, phi)))


def quadrant(pt):
    return int(pt.phi % (2 * math.pi) // (0.5 * math.pi)) + 1


def winding(pt, periods):
    curve = synthesize(pt, periods, 128)
    ang = np.unwrap(np.arctan2(curve.y, curve.x))
    return (ang[-1] - ang[0]) / (2 * math.pi), curve


class TestFamily12:
    def test_level_residual(self, family_1_2):
        assert family_1_2.level == pytest.approx(-2 * math.pi / 3)
        assert np.max(np.abs(family_1_2.values - family_1_2.level)) < 1e-9

    def test_recomputed_values_on_level(self, family_1_2):
        chain = family_1_2.chain
        for i in np.linspace(0, len(chain) - 1, 25).astype(int):
            assert dts(chain[i].p, chain[i].phi) == pytest.approx(family_1_2.level, abs=1e-9)

    def test_edge_to_edge(self, family_1_2):
        first, last = family_1_2.chain[0], family_1_2.chain[-1]
        assert (quadrant(first), quadrant(last)) == (4, 2)
        assert first.p < P_STOP and last.p < P_STOP
        assert first.phi % (2 * math.pi) == pytest.approx(family_1_2.edge_phi[0], abs=1e-6)
        assert last.phi == pytest.approx(family_1_2.edge_phi[1], abs=1e-6)
        assert all(pt.p < find_p_max() for pt in family_1_2.chain)

    def test_one_landmark_per_kind(self, family_1_2):
        tab = landmark_points(family_1_2)
        assert tab.ok, tab.violations
        assert set(tab.rows) == set(LANDMARK_KINDS)
        for lm in tab.rows.values():
            assert lm.residual < 1e-9 and lm.level_residual < 1e-9

    def test_elastic_landmark_on_axis(self, family_1_2):
        lm = landmark_points(family_1_2).rows[LocusKind.ElasticCurve]
        assert lm.point.X == 0.0

    def test_v_zero_prediction(self, family_1_2):
        lm = landmark_points(family_1_2).rows[LocusKind.SelfIntersecting]
        assert abs(v_zero_prediction(lm.point) - family_1_2.level) < 1e-9

    def test_elastic_landmark_largest_p(self, family_1_2):
        rows = landmark_points(family_1_2).rows
        ps = {k: lm.point.p for k, lm in rows.items()}
        assert max(ps, key=ps.get) is LocusKind.ElasticCurve

    def test_physical_advance(self, family_1_2):
        phys = family_1_2.physical_delta_theta()
        assert set(np.round(phys, 12)) <= {round(-2 * math.pi / 3, 12), round(4 * math.pi / 3, 12)}

    def test_endpoints_are_covered_circles(self, family_1_2):
        w0, c0 = winding(family_1_2.chain[0], family_1_2.periods)
        w1, c1 = winding(family_1_2.chain[-1], family_1_2.periods)
        assert sorted([round(abs(w0)), round(abs(w1))]) == [1, 2]
        for c in (c0, c1):
            assert np.ptp(c.r) / np.mean(c.r) < 1e-6
            assert c.closure_gap < 1e-6

    def test_frame_indices(self, family_1_2):
        idx = frame_indices(family_1_2, 8)
        assert len(idx) == 8 and idx[0] == 0 and idx[-1] == len(family_1_2.chain) - 1
        assert idx == sorted(idx)


class TestPartials:
    @pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
    def test_vanish_on_y_axis(self, p):
        for phi in (math.pi / 2, 3 * math.pi / 2):
            ddu, ddphi = partials_delta_theta(DiskPoint.from_polar(p, phi))
            assert abs(ddu) < 1e-12 and abs(ddphi) < 1e-12

    @pytest.mark.parametrize("p,phi", [(0.3, 0.4), (0.5, 1.0), (0.7, 2.0), (0.4, 4.0), (0.6, 5.5)])
    def test_against_finite_differences(self, p, phi):
        h = 1e-6
        ddu, ddphi = partials_delta_theta(DiskPoint.from_polar(p, phi))
        fd_phi = (dts(p, phi + h) - dts(p, phi - h)) / (2 * h)
        u = [derive_constants(DiskPoint.from_polar(p, f)).U for f in (phi - h, phi + h)]
        fd_u = fd_phi * 2 * h / (u[1] - u[0])
        assert ddphi == pytest.approx(fd_phi, abs=1e-6, rel=1e-6)
        assert ddu == pytest.approx(fd_u, abs=1e-6, rel=1e-6)


class TestVZeroLocus:
    def test_smooth_advance_monotone(self):
        ps = np.linspace(0.0, find_p_max(), 102)[1:-1]
        for quad in (2, 4):
            vals = np.array([dts(p, selfint_phi(p, quad)) for p in ps])
            steps = np.diff(vals)
            assert np.all(steps > 0) or np.all(steps < 0)

    def test_prediction_matches_advance(self):
        for p in np.linspace(0.05, 0.85, 9):
            for quad in (2, 4):
                pt = DiskPoint.from_polar(p, selfint_phi(p, quad))
                assert v_zero_prediction(pt) == pytest.approx(dts(pt.p, pt.phi), abs=1e-9)


class TestOtherFamilies:
    def test_one_one_is_degenerate(self):
        fam = trace_level(1, 1)
        assert fam.degenerate and fam.level == pytest.approx(-math.pi)
        assert np.max(np.abs(fam.values - fam.level)) < 1e-9
        tab = landmark_points(fam)
        assert not tab.ok and any("origin" in v for v in tab.violations)
        assert (quadrant(fam.chain[0]), quadrant(fam.chain[-1])) == (4, 2)

    @pytest.mark.parametrize("k,n", [(2, 4), (0, 1), (1, -2)])
    def test_invalid_pairs(self, k, n):
        with pytest.raises(DomainError):
            trace_level(k, n)
