import math

import numpy as np
import pytest

from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.rng import RngStream
from liouville_lab.core.types import Flavor, Scheme, Verdict
from liouville_lab.cgf.field import sample_field
from liouville_lab.cgf.mollifiers import Mollifier
from liouville_lab.gmc.checks import (
    campbell_check,
    cameron_martin_shift_check,
    martingale_check,
    mean_mass_check,
    scheme_cross_validation,
)
from liouville_lab.gmc.conformal import (
    ConformalMeasure,
    adjusted_factor_residual,
    conformal_mean_mass,
    conformal_measure_check,
    conformal_measure_transform,
)
from liouville_lab.gmc.measure import (
    FlavorData,
    LqgBuilder,
    build_lqg,
    capped_negative_moment,
    check_gamma,
    ensemble_masses,
    moment_ladder,
)
from liouville_lab.gmc.scaling import ball_masks, ball_scaling_stats
from liouville_lab.spectral.basis import SpectralBasis
from liouville_lab.spectral.conformal import ConformalFactor


@pytest.fixture(scope="module")
def plain(s2_basis):
    return LqgBuilder(Mollifier(s2_basis), 1.0)


@pytest.fixture(scope="module")
def phi(s2_basis):
    return s2_basis.random_band_limited(RngStream(21), amplitude=0.3)


class TestBuilder:
    @pytest.mark.parametrize("gamma", [2.0, -2.0, 3.5])
    def test_gamma_outside_subcritical_range(self, gamma):
        with pytest.raises(InvalidParameterError, match="subcritical"):
            check_gamma(gamma, 2)

    def test_gamma_inside_range(self):
        check_gamma(1.99, 2)
        check_gamma(2.8, 4)

    def test_refined_needs_flavor_data(self, s2_basis):
        with pytest.raises(InvalidParameterError, match="needs r_g"):
            LqgBuilder(Mollifier(s2_basis), 1.0, Flavor.REFINED)

    def test_constant_flavor_data(self, s2_basis):
        data = FlavorData.constant(s2_basis, 0.4)
        assert data.c_g == pytest.approx(0.4)
        np.testing.assert_allclose(data.pr_coeffs, 0.0, atol=1e-12)

    def test_build_from_sample(self, s2_spectrum, s2_basis):
        sample = sample_field(s2_spectrum, s2_basis.ell, RngStream(1), s2_basis)
        measure = build_lqg(sample, 0.5)
        assert measure.weights.shape == (s2_basis.grid.size,)
        assert np.all(measure.weights > 0)
        assert measure.total_mass == pytest.approx(float(np.sum(measure.weights)))
        assert measure.provenance["scheme"] == "eigenfunction"
        assert measure.provenance["seed"] == 1

    def test_zero_gamma_reproduces_volume(self, s2_basis):
        builder = LqgBuilder(Mollifier(s2_basis), 0.0)
        check = mean_mass_check(builder, 50, RngStream(2))
        assert check.verdict == Verdict.PASS
        assert check.values["mass"]["stderr"] < 1e-10

    def test_mean_mass(self, plain):
        check = mean_mass_check(plain, 3000, RngStream(3), sigmas=4.0)
        assert check.verdict == Verdict.PASS
        assert check.values["volume"] == pytest.approx(4.0 * math.pi)

    def test_precomputed_masses_match_fresh_draw(self, plain):
        masses = ensemble_masses(plain, RngStream(3), 200)[:, 0]
        reused = mean_mass_check(plain, 200, RngStream(3), masses=masses)
        fresh = mean_mass_check(plain, 200, RngStream(3))
        assert reused.values == fresh.values

    def test_masses_do_not_depend_on_threads(self, plain):
        masks = plain.basis.manifold.ball_mask(
            plain.basis.grid, plain.basis.manifold.reference_point(), 1.0
        )
        one = ensemble_masses(plain, RngStream(4), 600, masks, threads=1)
        many = ensemble_masses(plain, RngStream(4), 600, masks, threads=3)
        np.testing.assert_array_equal(one, many)
        assert one.shape == (600, 2)
        assert np.all(one[:, 1] <= one[:, 0])

    def test_scheme_cross_validation(self, s2_basis):
        check = scheme_cross_validation(s2_basis, 0.8, 1500, RngStream(5))
        assert check.verdict == Verdict.PASS


@pytest.fixture(scope="module")
def estimated_r(s2_basis):
    return FlavorData.estimate(s2_basis, steps=3, tolerance=1e-3)


class TestFlavorFactors:
    def test_estimated_r_on_unit_sphere(self, estimated_r):
        np.testing.assert_allclose(estimated_r.r_grid, estimated_r.r_grid[0])
        assert estimated_r.r_grid[0] == pytest.approx(math.log(2.0) - 0.5, abs=1e-2)

    def test_adjusted_factor_is_exp_half_gamma_squared_r(self, s2_basis, estimated_r):
        gamma = 1.2
        adjusted = LqgBuilder(Mollifier(s2_basis), gamma, Flavor.ADJUSTED, estimated_r)
        plain = LqgBuilder(Mollifier(s2_basis), gamma)
        coeffs = np.stack([s2_basis.random_band_limited(RngStream(22).sample(i)) for i in range(3)])
        ratio = adjusted.weights(coeffs) / plain.weights(coeffs)
        expected = np.exp(0.5 * gamma * gamma * estimated_r.r_grid)
        np.testing.assert_allclose(ratio, np.broadcast_to(expected, ratio.shape), rtol=1e-12)
        assert ratio.min() > 1.1

    def test_refined_matches_plain_for_constant_r(self, plain, estimated_r):
        refined = LqgBuilder(plain.mollifier, plain.gamma, Flavor.REFINED, estimated_r)
        coeffs = plain.basis.random_band_limited(RngStream(23))
        assert estimated_r.c_g == pytest.approx(estimated_r.r_grid[0])
        np.testing.assert_allclose(refined.weights(coeffs), plain.weights(coeffs), rtol=1e-10)

    def test_refined_factor_for_varying_r(self, plain, s2_basis):
        r = s2_basis.synthesize(s2_basis.random_band_limited(RngStream(24), 0.2)) + 0.19
        data = FlavorData(s2_basis, r)
        refined = LqgBuilder(plain.mollifier, plain.gamma, Flavor.REFINED, data)
        coeffs = np.stack([s2_basis.random_band_limited(RngStream(25).sample(i)) for i in range(3)])
        c_g = s2_basis.mean(data.r_coeffs) + 0.25 * s2_basis.a_n * s2_basis.form_p(data.r_coeffs)
        assert data.c_g == pytest.approx(c_g)
        shift = -0.5 * s2_basis.a_n * (coeffs @ s2_basis.apply_p(data.r_coeffs))
        expected = plain.weights(coeffs) * np.exp(0.5 * (r - c_g) + shift[:, None])
        np.testing.assert_allclose(refined.weights(coeffs), expected, rtol=1e-10)
        assert np.ptp(refined.weights(coeffs) / plain.weights(coeffs)) > 1e-3


class TestShiftIdentities:
    def test_cameron_martin_plain(self, plain, phi):
        coeffs = plain.basis.random_band_limited(RngStream(6))
        assert cameron_martin_shift_check(plain, coeffs, phi).verdict == Verdict.PASS

    def test_cameron_martin_refined(self, s2_basis, phi):
        r = s2_basis.synthesize(s2_basis.random_band_limited(RngStream(7), 0.2)) + 0.5
        builder = LqgBuilder(Mollifier(s2_basis), 1.0, Flavor.REFINED, FlavorData(s2_basis, r))
        coeffs = s2_basis.random_band_limited(RngStream(8))
        assert cameron_martin_shift_check(builder, coeffs, phi).verdict == Verdict.PASS

    def test_campbell(self, plain):
        psi = plain.basis.psi
        report = campbell_check(plain, lambda coeffs, i: coeffs @ psi[i], 2000, RngStream(9))
        assert report.verdict == Verdict.PASS


class TestMartingale:
    @pytest.mark.slow
    def test_nested_truncations(self, s2_basis):
        manifold = s2_basis.manifold
        mask = manifold.ball_mask(s2_basis.grid, manifold.reference_point(), 1.0)
        report = martingale_check(
            s2_basis, 1.0, mask, 8, outer=150, inner=40, rng=RngStream(10), level=1.0 - 1e-6
        )
        assert report.verdict == Verdict.PASS
        assert report.volume == pytest.approx(float(np.sum(s2_basis.weights[mask])))

    def test_equal_truncations_are_trivial(self, s2_basis):
        mask = np.ones(s2_basis.grid.size, dtype=bool)
        report = martingale_check(s2_basis, 1.0, mask, s2_basis.ell, 20, 5, RngStream(11))
        assert report.slope == 1.0
        assert report.verdict == Verdict.PASS

    def test_coarse_truncation_out_of_range(self, s2_basis):
        mask = np.ones(s2_basis.grid.size, dtype=bool)
        with pytest.raises(InvalidParameterError):
            martingale_check(s2_basis, 1.0, mask, s2_basis.ell + 1, 20, 5, RngStream(11))


class TestConformalMeasure:
    def test_trivial_factor_changes_nothing(self, plain):
        factor = ConformalFactor(plain.basis, np.zeros(plain.basis.size))
        coeffs = plain.basis.random_band_limited(RngStream(12))
        weights, log_factor = conformal_measure_transform(plain, factor, coeffs)
        np.testing.assert_allclose(log_factor, 0.0, atol=1e-14)
        np.testing.assert_allclose(weights, plain.weights(coeffs))

    def test_mean_mass_is_new_volume(self, plain, phi):
        transform = ConformalMeasure(plain, ConformalFactor(plain.basis, phi))
        estimate = conformal_mean_mass(transform, 3000, RngStream(13))
        assert estimate.sigmas_from(transform.factor.volume_prime) <= 4.0

    def test_adjusted_flavor_relation(self, s2_basis, phi):
        factor = ConformalFactor(s2_basis, phi)
        coeffs = s2_basis.random_band_limited(RngStream(14))
        assert adjusted_factor_residual(factor, 1.2, coeffs) < 1e-12

    @pytest.mark.slow
    def test_direct_g_prime_measure_agrees(self, s2_basis, phi):
        builder = LqgBuilder(Mollifier(s2_basis), 0.8)
        transform = ConformalMeasure(builder, ConformalFactor(s2_basis, phi))
        manifold = s2_basis.manifold
        centers = manifold.random_points(RngStream(15), 2)
        masks = np.stack([manifold.ball_mask(s2_basis.grid, c, 1.0) for c in centers])
        check = conformal_measure_check(transform, masks, 2000, RngStream(16), sigmas=4.0)
        assert check.verdict == Verdict.PASS
        assert check.values["volume_sigmas"] <= 4.0

    def test_requires_eigenfunction_scheme(self, s2_basis, phi):
        builder = LqgBuilder(Mollifier(s2_basis, Scheme.HEAT), 1.0)
        with pytest.raises(InvalidParameterError, match="eigenfunction"):
            ConformalMeasure(builder, ConformalFactor(s2_basis, phi))

    def test_adjusted_check_needs_r_prime(self, s2_basis, phi):
        builder = LqgBuilder(
            Mollifier(s2_basis), 1.0, Flavor.ADJUSTED, FlavorData.constant(s2_basis, 0.0)
        )
        transform = ConformalMeasure(builder, ConformalFactor(s2_basis, phi))
        masks = np.ones((1, s2_basis.grid.size))
        with pytest.raises(InvalidParameterError, match="r_"):
            conformal_measure_check(transform, masks, 10, RngStream(17))


class TestScaling:
    def test_radius_below_spacing_rejected(self, plain):
        center = plain.basis.manifold.reference_point()
        with pytest.raises(InvalidParameterError, match="grid spacing"):
            ball_masks(plain, center, [0.01, 1.0])

    def test_ball_masses_grow_with_radius(self, plain):
        centers = plain.basis.manifold.random_points(RngStream(18), 3)
        report = ball_scaling_stats(plain, centers, [1.5, 0.6, 1.0], 100, RngStream(19))
        assert report.radii == [0.6, 1.0, 1.5]
        assert report.expected_slope == 2
        assert report.monotone_fraction == 1.0
        assert len(report.quantile_slopes) == 3

    @pytest.fixture(scope="class")
    def fine_basis(self, s2_spectrum, s2_basis, s2):
        return SpectralBasis(s2_spectrum, s2_basis.ell, s2.quadrature(60))

    def test_mean_slope_is_dimension(self, fine_basis, s2):
        builder = LqgBuilder(Mollifier(fine_basis), 1.0)
        centers = s2.random_points(RngStream(26), 60)
        report = ball_scaling_stats(builder, centers, np.geomspace(0.1, 0.5, 5), 400, RngStream(27))
        assert 1.9 <= report.mean_slope <= 2.1
        assert report.monotone_fraction == 1.0
        assert report.verdict == Verdict.PASS

    def test_zero_gamma_quantiles_scale_like_volume(self, s2_spectrum, s2_basis, s2):
        basis = SpectralBasis(s2_spectrum, s2_basis.ell, s2.quadrature(160))
        builder = LqgBuilder(Mollifier(basis), 0.0)
        centers = s2.random_points(RngStream(28), 24)
        report = ball_scaling_stats(builder, centers, [0.15, 0.25, 0.4], 2, RngStream(29))
        assert report.verdict == Verdict.PASS
        for slope in report.quantile_slopes:
            assert slope == pytest.approx(2.0, abs=report.slope_tolerance)

    def test_wrong_dimension_fails(self, fine_basis, s2):
        builder = LqgBuilder(Mollifier(fine_basis), 0.0)
        centers = s2.random_points(RngStream(30), 8)
        report = ball_scaling_stats(
            builder, centers, [1.0, 1.5, 2.0], 2, RngStream(31), slope_tolerance=0.1
        )
        # large balls on S² grow slower than r²
        assert report.mean_slope < 1.9
        assert report.verdict == Verdict.FAIL


class TestMoments:
    def test_moment_ladder(self):
        rows = moment_ladder(np.array([1.0, 2.0, 3.0]), [1, 2])
        assert rows[0][:2] == [1.0, 2.0]
        assert rows[1][1] == pytest.approx(14.0 / 3.0)
        assert rows[1][3] == pytest.approx(9.0 / 14.0)

    def test_capped_negative_moment(self):
        estimate = capped_negative_moment(np.array([0.01, 1.0]), -1.0, cap=10.0)
        assert estimate.value == pytest.approx(5.5)
        with pytest.raises(InvalidParameterError):
            capped_negative_moment(np.ones(3), 1.0, cap=1.0)
