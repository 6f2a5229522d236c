import numpy as np
import pytest

from tentaclelab.fitting import (AffineFit, Centerline, FitReport, PolyCoeffs,
                                 fit_affine, fit_polynomial, fit_report, nrmse,
                                 poly_centerline, poly_tip)
from tentaclelab.kinematics import (CurvatureState, TentacleGeometry,
                                    sample_centerline, tip_positions)

L = 220.0
GEOM200 = TentacleGeometry(n_samples=200)


def centerline_for(q1, q2, geom=GEOM200):
    return Centerline(sample_centerline(CurvatureState(q1, q2), geom))


class TestCenterline:
    def test_basic_properties(self):
        cl = Centerline([[0, 0], [0, 1], [1, 1]])
        assert len(cl) == 3
        assert cl.total_length == pytest.approx(2.0)

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            Centerline([[0, 0]])

    def test_duplicate_points(self):
        with pytest.raises(ValueError):
            Centerline([[0, 0], [0, 0], [1, 1]])

    def test_nonfinite(self):
        with pytest.raises(ValueError):
            Centerline([[0, 0], [np.nan, 1]])


class TestFitAffine:
    def test_straight(self):
        fit = fit_affine(centerline_for(0.0, 0.0), L)
        assert abs(fit.state.q1) < 1e-9
        assert abs(fit.state.q2) < 1e-9

    def test_roundtrip(self):
        fit = fit_affine(centerline_for(1.2, -0.8), L)
        assert fit.state.q1 == pytest.approx(1.2, abs=1e-3)
        assert fit.state.q2 == pytest.approx(-0.8, abs=1e-3)
        assert fit.residual_rms < 1e-3

    @pytest.mark.parametrize("q", [(2 * np.pi, 0.0), (0.0, -2 * np.pi),
                                   (np.pi, np.pi), (-4.0, 3.0)])
    def test_roundtrip_large(self, q):
        fit = fit_affine(centerline_for(*q), L)
        assert fit.state.q1 == pytest.approx(q[0], abs=1e-3)
        assert fit.state.q2 == pytest.approx(q[1], abs=1e-3)

    def test_noise_monte_carlo(self):
        # At the 24-marker physical resolution, the mean recovered state
        # over 100 noisy trials stays within 0.05 rad of truth.
        geom = TentacleGeometry(n_samples=24)
        pts = sample_centerline(CurvatureState(1.2, -0.8), geom)
        rng = np.random.default_rng(7)
        est = []
        for _ in range(100):
            noisy = pts + rng.normal(0.0, 0.5, pts.shape)
            fit = fit_affine(Centerline(noisy), geom.length_mm)
            est.append([fit.state.q1, fit.state.q2])
        mean = np.mean(est, axis=0)
        assert abs(mean[0] - 1.2) < 0.05
        assert abs(mean[1] + 0.8) < 0.05

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            fit_affine(Centerline([[0, 0], [0, 1], [0, 2]]), L)

    def test_bad_length(self):
        with pytest.raises(ValueError):
            fit_affine(centerline_for(1.0, 0.0), 0.0)


class TestFitPolynomial:
    def test_straight(self):
        c = fit_polynomial(centerline_for(0.0, 0.0))
        assert abs(c.c2) < 1e-9 and abs(c.c3) < 1e-9

    def test_exact_cubic(self):
        s = np.linspace(0.0, 1.0, 60)
        pts = np.column_stack([3 * s * s - 2 * s**3, 100 * s])
        c = fit_polynomial(Centerline(pts))
        assert np.allclose([c.c0, c.c1, c.c2, c.c3], [0, 0, 3, -2], atol=1e-9)

    def test_moderate_curvature_residual(self):
        cl = centerline_for(1.0, 0.5)
        c = fit_polynomial(cl)
        s = np.linspace(0.0, 1.0, len(cl))
        pred = c.c0 + c.c1 * s + c.c2 * s * s + c.c3 * s**3
        resid = np.sqrt(np.mean((pred - cl.points[:, 0]) ** 2))
        tip_range = abs(cl.points[:, 0]).max()
        assert resid < 0.02 * max(tip_range, 1.0)

    @pytest.mark.parametrize("q", [(np.pi, 0.0), (0.0, np.pi), (-2.0, 2.0)])
    def test_cubic_approximates_affine_shapes(self, q):
        cl = centerline_for(*q)
        c = fit_polynomial(cl)
        s = np.linspace(0.0, 1.0, len(cl))
        pred = c.c0 + c.c1 * s + c.c2 * s * s + c.c3 * s**3
        resid = np.sqrt(np.mean((pred - cl.points[:, 0]) ** 2))
        tip_range = np.ptp(cl.points[:, 0])
        assert resid < 0.03 * tip_range

    def test_nonfinite_coeffs_rejected(self):
        with pytest.raises(ValueError):
            PolyCoeffs(0.0, 0.0, np.inf, 1.0)


class TestPolyCenterline:
    def test_straight_tip(self):
        x, y = poly_tip(PolyCoeffs(0, 0, 0, 0), L)
        assert (x, y) == pytest.approx((0.0, L))

    def test_arc_length_clamped(self):
        # A slope budget the cubic exceeds near the tip: the axial
        # increment clamps, so total reach stays below L.
        pts = poly_centerline(PolyCoeffs(0, 0, 0, -300.0), L)
        assert np.all(np.diff(pts[:, 1]) >= 0.0)
        assert pts[-1, 1] < L

    def test_small_lateral_reach(self):
        pts = poly_centerline(PolyCoeffs(0, 0, 5.0, -3.0), L)
        total = np.linalg.norm(np.diff(pts, axis=0), axis=1).sum()
        assert total == pytest.approx(L, rel=1e-3)


class TestNrmse:
    def test_identity(self):
        assert nrmse([0, 1, 2], [0, 1, 2]) == 0.0

    def test_hand_value(self):
        assert nrmse([0.1, 0.9], [0.0, 1.0]) == pytest.approx(10.0)

    def test_zero_range(self):
        with pytest.raises(ValueError):
            nrmse([1.0, 2.0], [3.0, 3.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            nrmse([1.0], [1.0, 2.0])

    def test_shift_invariance(self):
        t = np.sin(np.linspace(0, 5, 40))
        p = t + 0.1 * np.cos(np.linspace(0, 5, 40))
        assert nrmse(p + 3.0, t + 3.0) == pytest.approx(nrmse(p, t))

    def test_scale_invariance(self):
        t = np.sin(np.linspace(0, 5, 40))
        p = t + 0.05
        assert nrmse(7.0 * p, 7.0 * t) == pytest.approx(nrmse(p, t))


class TestFitReport:
    def test_identical_series_zero(self):
        states = np.array([[0.5, -0.2], [1.0, 0.3], [-0.4, 0.1]])
        rep = fit_report(states, states, GEOM200)
        assert rep.nrmse_seg1 == 0.0
        assert rep.nrmse_seg2 == 0.0
        assert rep.abs_tip_err_mean == 0.0
        assert rep.rel_tip_err == 0.0

    def test_constant_predictor_rel_tip(self):
        # Square-wave truth vs its mean: every tip misses by the half
        # range, so the relative tip error approaches 50%.
        truth = np.array([[0.8, 0.1], [-0.8, -0.1]] * 20)
        pred = np.zeros_like(truth)
        rep = fit_report(pred, truth, GEOM200)
        assert 40.0 < rep.rel_tip_err < 60.0

    def test_poly_channels(self):
        truth = np.array([[0, 0, 2.0, -1.0], [0, 0, -1.5, 0.5],
                          [0, 0, 0.5, 1.0]])
        pred = truth + np.array([0, 0, 0.1, -0.1])
        rep = fit_report(pred, truth, GEOM200, kind="poly")
        assert rep.nrmse_seg1 == pytest.approx(100 * 0.1 / 3.5)
        assert rep.nrmse_seg2 == pytest.approx(100 * 0.1 / 2.0)

    def test_truth_tip_override(self):
        truth = np.array([[0.5, 0.0], [-0.5, 0.0], [0.2, 0.1]])
        tips = tip_positions(truth, GEOM200)
        rep_a = fit_report(truth, truth, GEOM200, truth_tip=tips)
        assert rep_a.abs_tip_err_mean == pytest.approx(0.0, abs=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            fit_report(np.zeros((3, 2)), np.zeros((4, 2)), GEOM200)

    def test_zero_tip_range(self):
        states = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            fit_report(states, states, GEOM200)
