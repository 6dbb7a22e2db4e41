import numpy as np
import pytest

from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.rng import RngStream
from liouville_lab.core.types import Scheme, Verdict
from liouville_lab.cgf.conformal import (
    conformal_covariance_target,
    conformal_field_covariance_check,
    conformal_field_transform,
)
from liouville_lab.cgf.field import (
    FieldSample,
    covariance_kernel_ell,
    draw_noise,
    field_covariance_check,
    martingale_increment_check,
    pointwise_variance_check,
    sample_coefficients,
    sample_field,
    white_noise_extract,
)
from liouville_lab.cgf.girsanov import (
    capped_square,
    girsanov_linear_closed_form,
    girsanov_shift_check,
    linear_exponential,
)
from liouville_lab.cgf.mollifiers import Mollifier
from liouville_lab.spectral.basis import default_basis
from liouville_lab.spectral.conformal import ConformalFactor


class TestSampling:
    def test_same_stream_same_field(self, s2_spectrum, s2_basis):
        a = sample_field(s2_spectrum, s2_basis.ell, RngStream(41), s2_basis)
        b = sample_field(s2_spectrum, s2_basis.ell, RngStream(41), s2_basis)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)
        assert a.coeffs[0] == 0.0
        assert a.metadata["ell"] == s2_basis.ell
        assert a.metadata["seed"] == 41

    def test_basis_must_match(self, s2_spectrum, s2_basis):
        with pytest.raises(InvalidParameterError, match="does not match"):
            sample_field(s2_spectrum, s2_basis.ell - 1, RngStream(42), s2_basis)

    def test_default_basis_is_built(self, s2_spectrum):
        sample = sample_field(s2_spectrum, 8, RngStream(43))
        assert sample.basis.ell == 8
        assert sample.values.shape == (sample.basis.grid.size,)

    def test_noise_shape_is_checked(self, s2_basis):
        with pytest.raises(InvalidParameterError):
            FieldSample(basis=s2_basis, xi=np.zeros(3))

    def test_truncations_share_leading_noise(self):
        rng = RngStream(44)
        short = draw_noise(rng, 8, [3, 4])
        long = draw_noise(rng, 20, [3, 4])
        np.testing.assert_array_equal(short, long[:, :9])

    def test_offset_batches_line_up(self, s2_basis):
        whole = sample_coefficients(s2_basis, RngStream(45), 20)
        tail = sample_coefficients(s2_basis, RngStream(45), 10, start=10, threads=2)
        np.testing.assert_array_equal(whole[10:], tail)

    def test_white_noise_recovered(self, s2_spectrum, s2_basis):
        sample = sample_field(s2_spectrum, s2_basis.ell, RngStream(46), s2_basis)
        np.testing.assert_allclose(white_noise_extract(sample), sample.xi, atol=1e-12)

    def test_grid_pairing_matches_coefficients(self, s2_spectrum, s2_basis):
        sample = sample_field(s2_spectrum, s2_basis.ell, RngStream(47), s2_basis)
        u = s2_basis.random_band_limited(RngStream(48))
        assert sample.pairing_grid(s2_basis.synthesize(u)) == pytest.approx(sample.pairing(u), abs=1e-9)

    def test_kernel_diagonal_is_pointwise_variance(self, s2_spectrum, s2_basis):
        x = s2_basis.grid.points[:1]
        value = float(covariance_kernel_ell(s2_spectrum, s2_basis.ell, x, x)[0])
        assert value == pytest.approx(float(s2_basis.diag_k[0]), rel=1e-10)


class TestFieldLaws:
    def test_covariance_of_pairings(self, s2_basis):
        pairs = [
            (s2_basis.random_band_limited(RngStream(50 + k)), s2_basis.random_band_limited(RngStream(60 + k)))
            for k in range(3)
        ]
        check = field_covariance_check(s2_basis, pairs, 4000, RngStream(49), sigmas=4.0)
        assert check.verdict == Verdict.PASS
        assert len(check.values["rows"]) == 3

    def test_pointwise_variance(self, s2_basis):
        check = pointwise_variance_check(s2_basis, 0, 4000, RngStream(51), sigmas=4.0)
        assert check.verdict == Verdict.PASS

    def test_nested_truncations_are_uncorrelated(self, s2_basis):
        u = s2_basis.random_band_limited(RngStream(52))
        check = martingale_increment_check(s2_basis, u, 8, 4000, RngStream(53), sigmas=4.0)
        assert check.verdict == Verdict.PASS
        with pytest.raises(InvalidParameterError):
            martingale_increment_check(s2_basis, u, 0, 10, RngStream(53))


class TestGirsanov:
    @pytest.fixture
    def phi(self, s2_basis):
        return s2_basis.random_band_limited(RngStream(54), 0.3)

    def test_linear_closed_form(self, s2_basis, phi):
        u = s2_basis.random_band_limited(RngStream(55), 0.5)
        lhs, rhs = girsanov_linear_closed_form(s2_basis, phi, u)
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_shift_against_reweighting(self, s2_basis, phi):
        u = s2_basis.random_band_limited(RngStream(56), 0.3)
        report = girsanov_shift_check(s2_basis, phi, linear_exponential(u), 4000, RngStream(57))
        assert report.verdict == Verdict.PASS
        assert 0.0 < report.ess_fraction <= 1.0

    def test_bounded_functional(self, s2_basis, phi):
        u = s2_basis.random_band_limited(RngStream(58), 0.3)
        report = girsanov_shift_check(s2_basis, phi, capped_square(u, 4.0), 4000, RngStream(59))
        assert report.verdict == Verdict.PASS


class TestMollifiers:
    def test_heat_default_time(self, s2_basis):
        mollifier = Mollifier(s2_basis, Scheme.HEAT)
        assert mollifier.t == pytest.approx(1.0 / s2_basis.ell)
        assert np.all(mollifier.grid_variance < s2_basis.diag_k)
        assert mollifier.metadata["scheme"] == "heat"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"scheme": Scheme.HEAT, "t": 0.0},
            {"scheme": Scheme.BALL_AVERAGE},
            {"scheme": Scheme.PARTITION, "cells": 0},
        ],
    )
    def test_scheme_parameters(self, s2_basis, kwargs):
        with pytest.raises(InvalidParameterError):
            Mollifier(s2_basis, **kwargs)

    def test_eigenfunction_scheme_is_truncation(self, s2_basis):
        mollifier = Mollifier(s2_basis)
        coeffs = s2_basis.random_band_limited(RngStream(61))
        np.testing.assert_allclose(mollifier.field(coeffs), s2_basis.synthesize(coeffs), atol=1e-12)
        np.testing.assert_allclose(mollifier.covariance().diagonal(), s2_basis.diag_k)

    def test_partition_field_is_constant_on_cells(self, s2_basis):
        mollifier = Mollifier(s2_basis, Scheme.PARTITION, cells=4)
        values = mollifier.field(s2_basis.random_band_limited(RngStream(62)))
        cells = s2_basis.manifold.partition(4).cell_of(s2_basis.grid.points)
        for cell in np.unique(cells):
            assert np.ptp(values[cells == cell]) == pytest.approx(0.0, abs=1e-12)

    def test_ball_average_shrinks_variance(self, s2_basis):
        mollifier = Mollifier(s2_basis, Scheme.BALL_AVERAGE, radius=0.3)
        assert mollifier.multipliers[0] == pytest.approx(1.0)
        assert np.all(mollifier.grid_variance <= s2_basis.diag_k + 1e-12)


class TestConformalField:
    @pytest.fixture
    def factor(self, s2_basis):
        return ConformalFactor(s2_basis, s2_basis.random_band_limited(RngStream(63), 0.3))

    def test_transformed_field_has_zero_g_prime_mean(self, s2_spectrum, s2_basis, factor):
        sample = sample_field(s2_spectrum, s2_basis.ell, RngStream(64), s2_basis)
        transformed = conformal_field_transform(sample, factor)
        assert factor.mean_prime(transformed.values()) == pytest.approx(0.0, abs=1e-12)

    def test_transformed_covariance(self, s2_basis, factor):
        pairs = [
            (s2_basis.synthesize(s2_basis.random_band_limited(RngStream(65 + k))),
             s2_basis.synthesize(s2_basis.random_band_limited(RngStream(70 + k))))
            for k in range(2)
        ]
        check = conformal_field_covariance_check(factor, pairs, 4000, RngStream(66), sigmas=4.0)
        assert check.verdict == Verdict.PASS

    def test_trivial_factor_reduces_to_plain_covariance(self, s2_basis):
        factor = ConformalFactor(s2_basis, np.zeros(s2_basis.size))
        u = s2_basis.random_band_limited(RngStream(67))
        v = s2_basis.random_band_limited(RngStream(68))
        target = conformal_covariance_target(factor, s2_basis.synthesize(u), s2_basis.synthesize(v))
        assert target == pytest.approx(s2_basis.form_k(u, v), rel=1e-9)


def test_default_basis_for_torus(t2_spectrum):
    basis = default_basis(t2_spectrum)
    assert basis.ell == t2_spectrum.total_modes
