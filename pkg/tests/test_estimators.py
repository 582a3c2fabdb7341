import numpy as np
import pytest

from spatial_iir import (
    ArrayGeometry,
    TargetScene,
    esprit,
    feedback_mvdr_alg1,
    feedback_mvdr_alg2,
    inverse_filter_taps,
    music,
    mvdr_weights,
    nested_element_positions,
    nested_mvdr,
    peaks_to_angles,
    reduced_dim_mvdr,
    rmse,
    robust_mvdr,
    sample_autocorrelation,
    spatial_frequency,
    steering_matrix,
    steering_vector,
    synthesize_snapshots,
    theta_grid,
)
from spatial_iir.errors import (
    LengthMismatch,
    SubarrayTooSmall,
    SubspaceSplitAmbiguous,
    UnstableExpansion,
)
from spatial_iir.estimators import PseudoSpectrum, coarray_lags

GEOM8 = ArrayGeometry(8, 0.5)


def scene_deg(thetas_deg, snr_db, snapshots, seed):
    return TargetScene.from_degrees(thetas_deg, snr_db, snapshots, seed)


def random_pd(n, rng):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + n * np.eye(n)


class TestMvdrWeights:
    def test_identity_covariance_matched(self):
        v = steering_vector(0.8, 6)
        np.testing.assert_allclose(mvdr_weights(np.eye(6), v), v / 6, atol=1e-12)

    def test_identity_covariance_first_element(self):
        e0 = np.zeros(5)
        e0[0] = 1.0
        np.testing.assert_allclose(mvdr_weights(np.eye(5), e0), e0, atol=1e-14)

    def test_constraint_met_exactly(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            r = random_pd(6, rng)
            c = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            beta = mvdr_weights(r, c)
            assert abs(beta.conj() @ c - 1.0) < 1e-10

    def test_beats_random_feasible_vectors(self):
        rng = np.random.default_rng(1)
        r = random_pd(6, rng)
        c = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        beta = mvdr_weights(r, c)
        objective = (beta.conj() @ r @ beta).real
        proj = np.eye(6) - np.outer(c, c.conj()) / (c.conj() @ c)
        w = rng.standard_normal((1000, 6)) + 1j * rng.standard_normal((1000, 6))
        feasible = beta[None, :] + w @ proj.T
        values = np.einsum("in,nm,im->i", feasible.conj(), r, feasible).real
        assert objective <= values.min() + 1e-9 * abs(objective)


class TestInverseFilterTaps:
    def test_unit_filter(self):
        beta = np.zeros(4, dtype=complex)
        beta[0] = 1.0
        np.testing.assert_allclose(inverse_filter_taps(beta, 4),
                                   [1.0, 0.0, 0.0, 0.0])

    def test_geometric_series(self):
        q = 0.6 * np.exp(1j * 0.8)
        beta = np.array([1.0, -np.conj(q)])  # B(z) = 1 - q z^-1
        taps = inverse_filter_taps(beta, 6)
        np.testing.assert_allclose(taps, q ** np.arange(6), atol=1e-12)

    def test_divergent_expansion_detected(self):
        q = 1.5
        beta = np.array([1.0, -q])
        with pytest.raises(UnstableExpansion):
            inverse_filter_taps(beta, 50)


class TestMusic:
    def test_noiseless_single_target(self):
        scene = scene_deg([72.0], np.inf, 64, 2)
        cov = sample_autocorrelation(synthesize_snapshots(scene, GEOM8))
        spec = music(cov, 1, theta_grid(720))
        peak = spec.theta_grid[np.argmax(spec.power)]
        assert abs(peak - scene.thetas[0]) <= np.pi / 720

    def test_isotropic_covariance_flat(self):
        spec = music(np.eye(6), 5, theta_grid(180))
        assert spec.power.max() == pytest.approx(spec.power.min(), rel=1e-9)

    def test_partial_degeneracy_raises(self):
        with pytest.raises(SubspaceSplitAmbiguous):
            music(np.diag([3.0, 1.0, 1.0, 0.5]), 2, theta_grid(90))

    def test_two_targets_high_snr(self):
        truth = [50.0, 120.0]
        for seed in range(5):
            scene = scene_deg(truth, 40.0, 256, seed)
            cov = sample_autocorrelation(synthesize_snapshots(scene, GEOM8))
            spec = music(cov, 2, theta_grid(720))
            pick = peaks_to_angles(spec, 2, np.deg2rad(3.0))
            assert rmse(scene.thetas, pick.angles) < 1.0

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        cov = random_pd(8, rng)
        a = music(cov, 2, theta_grid(360)).power
        b = music(100.0 * cov, 2, theta_grid(360)).power
        np.testing.assert_allclose(a, b, atol=1e-9)


class TestEsprit:
    def test_noiseless_single_target_exact(self):
        psi0 = np.pi / 2
        theta0 = np.arccos(psi0 / np.pi)
        scene = TargetScene((theta0,), np.inf, 64, 4)
        cov = sample_autocorrelation(synthesize_snapshots(scene, GEOM8))
        got = esprit(cov, 1, GEOM8)
        assert abs(got[0] - theta0) < 1e-10

    def test_noiseless_two_targets_exact(self):
        scene = scene_deg([50.0, 120.0], np.inf, 64, 5)
        cov = sample_autocorrelation(synthesize_snapshots(scene, GEOM8))
        got = esprit(cov, 2, GEOM8)
        np.testing.assert_allclose(got, np.sort(scene.thetas), atol=1e-10)

    def test_broadside_maps_to_ninety_degrees(self):
        # psi = 0: rank-one covariance of an all-ones steering vector
        v = np.ones(6, dtype=complex)
        cov = np.outer(v, v.conj()) + 1e-9 * np.eye(6)
        got = esprit(cov, 1, ArrayGeometry(6))
        assert got[0] == pytest.approx(np.pi / 2, abs=1e-6)


class TestRobustMvdr:
    def test_zero_loading_matches_plain_capon(self):
        rng = np.random.default_rng(6)
        cov = random_pd(8, rng)
        spec = robust_mvdr(cov, theta_grid(360), 0.0, GEOM8)
        inv = np.linalg.inv(cov)
        v = steering_matrix(spatial_frequency(theta_grid(360), GEOM8), 8)
        manual = 1.0 / np.einsum("gn,nm,gm->g", v.conj(), inv, v).real
        np.testing.assert_allclose(spec.power, manual / manual.max(), atol=1e-10)

    def test_huge_loading_approaches_bartlett_shape(self):
        rng = np.random.default_rng(7)
        cov = random_pd(8, rng)
        lam = 1e6
        spec = robust_mvdr(cov, theta_grid(360), lam, GEOM8).power
        v = steering_matrix(spatial_frequency(theta_grid(360), GEOM8), 8)
        bartlett = np.einsum("gn,nm,gm->g", v.conj(), cov, v).real
        # normalized spectrum - 1 is proportional to bartlett - max(bartlett)
        lhs = (spec - 1.0) * 8.0 * lam
        rhs = bartlett - bartlett.max()
        np.testing.assert_allclose(lhs, rhs, atol=1e-2 * np.abs(rhs).max())

    def test_two_targets_moderate_snr(self):
        truth = [60.0, 115.0]
        errs = []
        for seed in range(5):
            scene = scene_deg(truth, 10.0, 256, 100 + seed)
            cov = sample_autocorrelation(synthesize_snapshots(scene, GEOM8))
            spec = robust_mvdr(cov, theta_grid(720), 0.05, GEOM8)
            pick = peaks_to_angles(spec, 2, np.deg2rad(3.0))
            errs.append(rmse(scene.thetas, pick.angles))
        assert np.mean(errs) < 2.0

    def test_scale_invariance(self):
        rng = np.random.default_rng(8)
        cov = random_pd(8, rng)
        a = robust_mvdr(cov, theta_grid(360), 0.0, GEOM8).power
        b = robust_mvdr(7.0 * cov, theta_grid(360), 0.0, GEOM8).power
        np.testing.assert_allclose(a, b, atol=1e-9)


class TestNestedArray:
    def test_positions_two_two(self):
        np.testing.assert_array_equal(nested_element_positions(2, 2), [0, 1, 2, 5])

    def test_contiguous_lags_two_two(self):
        # exhaustive difference-set enumeration
        lags = coarray_lags(nested_element_positions(2, 2))
        np.testing.assert_array_equal(lags, np.arange(-5, 6))

    def test_contiguous_lags_four_four(self):
        lags = coarray_lags(nested_element_positions(4, 4))
        expect = np.arange(-19, 20)
        assert set(expect).issubset(set(lags.tolist()))

    def test_single_target_high_snr(self):
        truth = 73.0
        errs = []
        for seed in range(5):
            scene = scene_deg([truth], 30.0, 256, 200 + seed)
            spec = nested_mvdr(scene, theta_grid(720), n1=2, n2=2)
            pick = peaks_to_angles(spec, 1, np.deg2rad(3.0))
            errs.append(rmse(scene.thetas, pick.angles))
        assert np.mean(errs) < 1.0

    def test_degenerate_level_rejected(self):
        with pytest.raises(ValueError):
            nested_element_positions(2, 0)


class TestReducedDim:
    def test_single_subarray_equals_plain_capon(self):
        scene = scene_deg([70.0, 130.0], 20.0, 128, 9)
        spec = reduced_dim_mvdr(scene, GEOM8, 8, theta_grid(360))
        cov = sample_autocorrelation(synthesize_snapshots(scene, GEOM8))
        manual = robust_mvdr(cov, theta_grid(360), 0.0, GEOM8)
        np.testing.assert_allclose(spec.power, manual.power, atol=1e-9)

    def test_single_target_high_snr(self):
        truth = [44.0]
        scene = scene_deg(truth, 40.0, 256, 10)
        spec = reduced_dim_mvdr(scene, GEOM8, 2, theta_grid(720))
        pick = peaks_to_angles(spec, 1, np.deg2rad(3.0))
        assert rmse(scene.thetas, pick.angles) < 2.0

    def test_noise_only_nearly_flat(self):
        scene = TargetScene((), snr_db=0.0, snapshots=10_000, seed=11)
        spec = reduced_dim_mvdr(scene, GEOM8, 2, theta_grid(360))
        ratio_db = 10 * np.log10(spec.power.max() / spec.power.min())
        assert ratio_db < 3.0

    def test_small_subarray_rejected(self):
        scene = scene_deg([70.0], 20.0, 64, 12)
        with pytest.raises(SubarrayTooSmall):
            reduced_dim_mvdr(scene, GEOM8, 1, theta_grid(90))

    def test_indivisible_split_rejected(self):
        scene = scene_deg([70.0], 20.0, 64, 13)
        with pytest.raises(ValueError):
            reduced_dim_mvdr(scene, GEOM8, 3, theta_grid(90))


class TestFeedbackMvdrAlg1:
    def test_no_retransmission_reduces_to_capon_peak(self):
        scene = scene_deg([64.0], 30.0, 128, 14)
        spec = feedback_mvdr_alg1(scene, GEOM8, 0, theta_grid(360))
        peak = spec.theta_grid[np.argmax(spec.power)]
        assert abs(peak - scene.thetas[0]) <= np.pi / 360

    def test_four_targets_two_passes_high_snr(self):
        scene = scene_deg([40.0, 75.0, 110.0, 145.0], 40.0, 256, 15)
        spec = feedback_mvdr_alg1(scene, GEOM8, 2, theta_grid(720))
        pick = peaks_to_angles(spec, 4, np.deg2rad(3.0))
        assert rmse(scene.thetas, pick.angles) < 2.0

    def test_four_targets_two_passes_zero_db(self):
        scene = scene_deg([40.0, 75.0, 110.0, 145.0], 0.0, 256, 16)
        spec = feedback_mvdr_alg1(scene, GEOM8, 2, theta_grid(720))
        pick = peaks_to_angles(spec, 4, np.deg2rad(3.0))
        errors = np.rad2deg(np.abs(np.array(pick.angles) - np.sort(scene.thetas)))
        assert errors.max() < 5.0

    def test_deterministic(self):
        scene = scene_deg([52.0, 119.0], 0.0, 32, 17)
        a = feedback_mvdr_alg1(scene, GEOM8, 2, theta_grid(180))
        b = feedback_mvdr_alg1(scene, GEOM8, 2, theta_grid(180))
        assert np.array_equal(a.power, b.power)

    def test_normalized(self):
        scene = scene_deg([52.0], -10.0, 32, 18)
        spec = feedback_mvdr_alg1(scene, GEOM8, 1, theta_grid(180))
        assert spec.power.max() == pytest.approx(1.0)
        assert np.all(spec.power >= 0)


class TestFeedbackMvdrAlg2:
    def test_flat_spectrum_without_nulls(self):
        # noise-only data keeps beta ~ e0, so alpha ~ e0 and |alpha(psi)| flat
        scene = TargetScene((), snr_db=0.0, snapshots=50_000, seed=19)
        spec = feedback_mvdr_alg2(scene, ArrayGeometry(4), 0, theta_grid(180))
        ratio_db = 10 * np.log10(spec.power.max() / max(spec.power.min(), 1e-12))
        assert ratio_db < 1.0

    def test_peaks_near_targets(self):
        scene = scene_deg([50.0, 120.0], 20.0, 256, 20)
        spec = feedback_mvdr_alg2(scene, GEOM8, 2, theta_grid(720))
        pick = peaks_to_angles(spec, 2, np.deg2rad(3.0))
        assert rmse(scene.thetas, pick.angles) < 5.0

    def test_alg1_beats_alg2(self):
        truth = [40.0, 75.0, 110.0, 145.0]
        e1, e2 = [], []
        for seed in range(6):
            scene = scene_deg(truth, 0.0, 64, 300 + seed)
            s1 = feedback_mvdr_alg1(scene, GEOM8, 2, theta_grid(360))
            s2 = feedback_mvdr_alg2(scene, GEOM8, 2, theta_grid(360))
            e1.append(rmse(scene.thetas,
                           peaks_to_angles(s1, 4, np.deg2rad(3.0)).angles))
            e2.append(rmse(scene.thetas,
                           peaks_to_angles(s2, 4, np.deg2rad(3.0)).angles))
        assert np.mean(e1) <= np.mean(e2)


class TestPeakPicking:
    def test_isolated_peaks(self):
        grid = theta_grid(360)
        power = np.zeros(360)
        for center in (40.0, 100.0):
            power += np.exp(-0.5 * ((np.rad2deg(grid) - center) / 2.0) ** 2)
        pick = peaks_to_angles(PseudoSpectrum(grid, power / power.max()), 2)
        assert pick.found_all
        np.testing.assert_allclose(np.rad2deg(pick.angles), [40.0, 100.0], atol=0.1)

    def test_monotone_spectrum_falls_back_to_boundary(self):
        grid = theta_grid(180)
        power = np.linspace(0.0, 1.0, 180)
        pick = peaks_to_angles(PseudoSpectrum(grid, power), 1)
        assert not pick.found_all
        assert pick.angles[0] == pytest.approx(grid[-1])

    def test_min_separation_suppresses_twin_maxima(self):
        grid = theta_grid(360)
        power = np.exp(-0.5 * ((np.rad2deg(grid) - 90.0) / 3.0) ** 2)
        power[182] = power[180]  # twin ripple on the same lobe
        pick = peaks_to_angles(PseudoSpectrum(grid, power), 2,
                               min_separation=np.deg2rad(5.0))
        spread = abs(pick.angles[1] - pick.angles[0])
        assert spread >= np.deg2rad(5.0)


class TestRmse:
    def test_perfect(self):
        assert rmse([0.5, 1.0], [0.5, 1.0]) == 0.0

    def test_unit_conversion(self):
        assert rmse([1.0], [1.1]) == pytest.approx(np.rad2deg(0.1))

    def test_two_target_arithmetic(self):
        truth = np.deg2rad([50.0, 100.0])
        est = np.deg2rad([53.0, 104.0])
        assert rmse(truth, est) == pytest.approx(np.sqrt((9 + 16) / 2), rel=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            rmse([0.5, 1.0], [0.5])
