import dataclasses
import math

import numpy as np
import pytest

from liouville_lab.core.exceptions import InvalidParameterError, NotAdmissibleError
from liouville_lab.core.rng import RngStream
from liouville_lab.core.types import KernelKind, Verdict
from liouville_lab.spectral.basis import SpectralBasis
from liouville_lab.spectral.conformal import (
    ConformalFactor,
    conformal_kernel_transform,
    grounding_residual,
    inversion_residual,
)
from liouville_lab.spectral.forms import (
    CopolyForm,
    copoly_apply,
    green_operator_apply,
    green_truncation_ladder,
    weyl_check,
)
from liouville_lab.spectral.gjms import (
    GjmsBlock,
    a_n_constant,
    gjms_spectrum,
    gjms_symbolic_coefficients,
    nu_shifts,
)
from liouville_lab.spectral.kernels import (
    KernelEvaluator,
    green_kernel_eval,
    heat_lower_bound_check,
    log_divergence_check,
    resolvent_by_heat_integral,
    resolvent_kernel_eval,
)
from liouville_lab.spectral.renormalization import (
    aitken_limit,
    r_conformal_check,
    r_g_estimate,
    refined_constant,
    refined_kernel,
    uniform_integrability_fit,
)


class TestGjms:
    @pytest.mark.parametrize(
        "n,expected",
        [
            (2, {1: -1}),
            (4, {2: 1, 1: -2}),
            (6, {3: -1, 2: 10, 1: -24}),
        ],
    )
    def test_symbolic_coefficients_on_unit_spheres(self, n, expected):
        assert gjms_symbolic_coefficients(n) == expected

    def test_a_n(self):
        assert a_n_constant(2) == pytest.approx(1.0 / (2.0 * math.pi))
        assert a_n_constant(4) == pytest.approx(1.0 / (8.0 * math.pi**2))
        with pytest.raises(InvalidParameterError):
            a_n_constant(5)

    def test_shifts(self):
        assert nu_shifts(4) == [2, 0]
        assert nu_shifts(6) == [6, 4, 0]

    def test_surface_nu_is_laplace(self, s2_spectrum):
        np.testing.assert_allclose(s2_spectrum.block_nu, s2_spectrum.block_lambda)

    def test_s4_first_eigenvalue(self, s4):
        spectrum = gjms_spectrum(s4, 2)
        assert spectrum.blocks[1].eigenvalue == pytest.approx(4.0)
        assert spectrum.blocks[1].nu == pytest.approx(24.0)
        assert spectrum.blocks[1].multiplicity == 5

    @pytest.mark.parametrize("fixture", ["s2", "s4", "t2", "s2xs2"])
    def test_models_are_admissible(self, request, fixture):
        spectrum = gjms_spectrum(request.getfixturevalue(fixture), 2)
        assert spectrum.admissible
        assert spectrum.nu()[0] == 0.0
        assert np.all(spectrum.nu()[1:] > 0)

    def test_counting(self, s2_spectrum):
        assert s2_spectrum.total_modes == 48
        assert s2_spectrum.full_block_truncation(2) == 8
        assert s2_spectrum.split_truncation(8) == (3, 0)
        assert s2_spectrum.split_truncation(5) == (2, 2)
        with pytest.raises(InvalidParameterError):
            s2_spectrum.check_truncation(49)

    def test_weyl_slope_on_s2(self, s2):
        report = weyl_check(gjms_spectrum(s2, 30))
        assert report.count == 960
        assert report.monotone
        assert report.slope == pytest.approx(report.expected_slope, rel=0.01)

    def test_weyl_needs_enough_eigenvalues(self, s2_spectrum):
        with pytest.raises(InvalidParameterError):
            weyl_check(s2_spectrum)


class TestBasis:
    def test_requires_fine_enough_grid(self, s2, s2_spectrum):
        with pytest.raises(InvalidParameterError, match="grid resolution"):
            SpectralBasis(s2_spectrum, s2_spectrum.total_modes, s2.quadrature(2))

    def test_constant_and_mean(self, s2_basis):
        coeffs = s2_basis.constant(2.5)
        assert coeffs[0] == pytest.approx(2.5 * math.sqrt(4.0 * math.pi))
        assert s2_basis.mean(coeffs) == pytest.approx(2.5)
        np.testing.assert_allclose(s2_basis.synthesize(coeffs), 2.5)

    def test_project_inverts_synthesize(self, s2_basis):
        coeffs = s2_basis.random_band_limited(RngStream(4), amplitude=0.7)
        np.testing.assert_allclose(s2_basis.project(s2_basis.synthesize(coeffs)), coeffs, atol=1e-12)
        assert np.max(np.abs(s2_basis.synthesize(coeffs))) == pytest.approx(0.7)
        assert coeffs[0] == 0.0

    def test_green_inverts_copoly_on_grounded(self, s2_spectrum, s2_basis):
        u = s2_basis.grounded(RngStream(5).normals(0, s2_basis.size))
        np.testing.assert_allclose(copoly_apply(s2_spectrum, green_operator_apply(s2_spectrum, u)), u)

    def test_green_truncation_ladder(self, s2_basis):
        values = s2_basis.synthesize(s2_basis.random_band_limited(RngStream(40), decay=0.0))
        rows = green_truncation_ladder(s2_basis, values, [3, 8, s2_basis.ell])
        assert [row[0] for row in rows] == [3, 8, s2_basis.ell]
        assert rows[0][1] > 0.0
        assert rows[1][1] > 1e-6
        assert rows[2][1] < 1e-12

    def test_form_rejects_wrong_length(self, s2_spectrum):
        form = CopolyForm(s2_spectrum, 8)
        assert form(np.ones(9)) == pytest.approx(3 * 2.0 + 5 * 6.0)
        with pytest.raises(InvalidParameterError):
            form(np.ones(5))


class TestKernels:
    @pytest.mark.slow
    def test_green_matches_closed_form_on_s2(self, s2):
        spectrum = gjms_spectrum(s2, 400)
        ell = spectrum.full_block_truncation(400)
        x = s2.reference_point()
        for d in (0.2, 0.5, 1.0, 2.0, 3.0):
            y = s2.point_near(x, d)
            value = float(green_kernel_eval(spectrum, x, y, ell)[0])
            exact = -(1.0 + 2.0 * math.log(math.sin(d / 2.0))) / (4.0 * math.pi)
            assert value == pytest.approx(exact, abs=1e-3)

    def test_normalized_kernel_divides_by_a_n(self, s2, s2_spectrum):
        x = s2.reference_point()
        y = s2.point_near(x, 0.4)
        plain = green_kernel_eval(s2_spectrum, x, y)
        normalized = green_kernel_eval(s2_spectrum, x, y, normalized=True)
        np.testing.assert_allclose(normalized, plain / s2_spectrum.a_n)

    @pytest.mark.parametrize("s", [1.0, 2.0])
    @pytest.mark.parametrize("alpha", [0.5, 1.0])
    def test_resolvent_routes_agree(self, s2, s, alpha):
        spectrum = gjms_spectrum(s2, 10)
        x = s2.reference_point()
        ys = np.stack([s2.point_near(x, d) for d in (0.3, 1.2, 2.5)])
        spectral = resolvent_kernel_eval(spectrum, s, alpha, x, ys)
        integral = resolvent_by_heat_integral(spectrum, s, alpha, x, ys)
        np.testing.assert_allclose(integral, spectral, atol=1e-5)

    def test_matrix_agrees_with_zonal_sum(self, s2, s2_spectrum):
        evaluator = KernelEvaluator(s2_spectrum, KernelKind.COPOLY_GREEN, 20)
        points = s2.random_points(RngStream(6), 4)
        matrix = evaluator.matrix(points, points)
        pairs = evaluator(points[:, None, :].repeat(4, 1).reshape(-1, 3), np.tile(points, (4, 1)))
        np.testing.assert_allclose(matrix.ravel(), pairs, atol=1e-12)

    def test_kernel_parameter_validation(self, s2_spectrum):
        with pytest.raises(InvalidParameterError):
            KernelEvaluator(s2_spectrum, KernelKind.HEAT)
        with pytest.raises(InvalidParameterError):
            KernelEvaluator(s2_spectrum, KernelKind.RESOLVENT, alpha=0.0)
        with pytest.raises(InvalidParameterError):
            KernelEvaluator(s2_spectrum, KernelKind.GROUNDED_RESOLVENT, alpha=-2.5)

    def test_heat_kernel_above_curvature_bound(self, s2):
        check = heat_lower_bound_check(gjms_spectrum(s2, 60), [0.1, 0.5], [0.1, 0.5, 1.0], a=0.0)
        assert check.verdict == Verdict.PASS

    @pytest.mark.slow
    def test_log_divergence_stabilizes(self, s2):
        check = log_divergence_check(s2, 80, d_min=0.1)
        assert check.verdict == Verdict.PASS
        assert check.values["sup"] < 0.5


class TestConformal:
    @pytest.fixture
    def factor(self, s2_basis):
        return ConformalFactor(s2_basis, s2_basis.random_band_limited(RngStream(8), amplitude=0.3))

    def test_trivial_factor(self, s2_basis):
        trivial = ConformalFactor(s2_basis, np.zeros(s2_basis.size))
        assert trivial.is_trivial
        assert trivial.volume_prime == pytest.approx(4.0 * math.pi)
        np.testing.assert_array_equal(trivial.phi_bar, 0.0)

    def test_inverse_relation(self, factor):
        u = factor.basis.random_band_limited(RngStream(9), amplitude=1.0)
        assert inversion_residual(factor, u) < 1e-9

    def test_grounding(self, factor):
        assert grounding_residual(factor, factor.basis.manifold.reference_point()) < 1e-9

    def test_transformed_kernel_is_symmetric(self, s2, factor):
        x = s2.reference_point()
        y = s2.point_near(x, 0.7)
        forward = conformal_kernel_transform(factor, x, y)
        backward = conformal_kernel_transform(factor, y, x)
        np.testing.assert_allclose(forward, backward, atol=1e-12)


class TestRenormalization:
    def test_aitken_on_geometric_sequence(self):
        value, error = aitken_limit([1.0 + 0.5**k for k in range(2, 5)])
        assert value == pytest.approx(1.0, abs=1e-12)
        assert error == pytest.approx(0.0625 + 0.0625)

    def test_refined_constant_of_constant_profile(self, s2_basis):
        r = np.full(s2_basis.grid.size, 0.8)
        assert refined_constant(s2_basis, r) == pytest.approx(0.8)

    @pytest.mark.slow
    def test_finite_part_on_unit_sphere(self, s2):
        estimate = r_g_estimate(s2, s2.reference_point(), steps=4, tolerance=1e-5)
        assert estimate.converged
        assert estimate.value == pytest.approx(math.log(2.0) - 0.5, abs=1e-3)
        assert len(estimate.ladder) == 4

    def test_refined_kernel_of_constant_profile(self, s2, s2_spectrum, s2_basis):
        evaluator = KernelEvaluator(s2_spectrum, KernelKind.NORMALIZED)
        xs = s2.random_points(RngStream(41), 5)
        ys = s2.random_points(RngStream(42), 5)
        c_g = refined_constant(s2_basis, np.full(s2_basis.grid.size, 0.3))
        refined = refined_kernel(evaluator, xs, ys, np.full(5, 0.3), np.full(5, 0.3), c_g)
        np.testing.assert_allclose(refined, evaluator(xs, ys), atol=1e-12)

    def test_refined_kernel_is_symmetric(self, s2, s2_spectrum):
        evaluator = KernelEvaluator(s2_spectrum, KernelKind.NORMALIZED)
        xs = s2.random_points(RngStream(43), 5)
        ys = s2.random_points(RngStream(44), 5)
        r_x, r_y = np.linspace(0.1, 0.5, 5), np.linspace(0.6, 0.2, 5)
        forward = refined_kernel(evaluator, xs, ys, r_x, r_y, 0.25)
        backward = refined_kernel(evaluator, ys, xs, r_y, r_x, 0.25)
        np.testing.assert_allclose(forward, backward, atol=1e-12)
        np.testing.assert_allclose(forward, evaluator(xs, ys) - 0.5 * (r_x + r_y) + 0.25, atol=1e-12)

    @pytest.mark.slow
    def test_finite_part_shifts_under_conformal_change(self, s2, s2_basis):
        factor = ConformalFactor(s2_basis, s2_basis.random_band_limited(RngStream(45), 0.2))
        check = r_conformal_check(factor, s2.random_points(RngStream(46), 2))
        assert check.verdict == Verdict.PASS
        assert len(check.values["rows"]) == 2

    def test_ladder_needs_a_step(self, s2):
        with pytest.raises(InvalidParameterError):
            r_g_estimate(s2, s2.reference_point(), steps=0)

    def test_uniform_integrability_bound(self, s2, s2_spectrum):
        evaluator = KernelEvaluator(s2_spectrum, KernelKind.NORMALIZED)
        xs = s2.random_points(RngStream(20), 200)
        ys = s2.random_points(RngStream(21), 200)
        fit = uniform_integrability_fit(evaluator, xs, ys)
        assert fit.pairs == 200
        assert fit.scale == pytest.approx(math.sqrt(42.0))
        assert 0.3 < fit.theta < 1.5


def test_nonpositive_nu_is_not_admissible(s2_spectrum):
    blocks = list(s2_spectrum.blocks)
    blocks[1] = GjmsBlock(blocks[1].laplace, -1.0)
    broken = dataclasses.replace(s2_spectrum, blocks=tuple(blocks))
    assert not broken.admissible
    with pytest.raises(NotAdmissibleError):
        KernelEvaluator(broken, KernelKind.COPOLY_GREEN)
