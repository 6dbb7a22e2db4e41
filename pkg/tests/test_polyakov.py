import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st
from pydantic import ValidationError

from liouville_lab.core.exceptions import (
    GateViolationError,
    GridTruncationError,
    InvalidParameterError,
)
from liouville_lab.core.rng import RngStream
from liouville_lab.core.types import Flavor, Verdict
from liouville_lab.cgf.mollifiers import Mollifier
from liouville_lab.gmc.conformal import ConformalMeasure
from liouville_lab.gmc.measure import FlavorData, LqgBuilder
from liouville_lab.polyakov.anomaly import (
    conformal_anomaly_check,
    naive_shift_diagnostic,
    paired_partition_terms,
)
from liouville_lab.polyakov.partition import (
    PolyakovParams,
    a_integrals,
    check_gate,
    gamma_reduced_terms,
    gaussian_moment_check,
    partition_function,
    route_b_constant,
)
from liouville_lab.polyakov.qcurvature import (
    euler_constant,
    q_curvature,
    q_roundtrip_residual,
    q_transform,
    total_q_invariance_check,
)
from liouville_lab.spectral.conformal import ConformalFactor


class TestQCurvature:
    def test_unit_sphere_values(self, s2, s4):
        assert q_curvature(s2).value == pytest.approx(1.0)
        assert q_curvature(s4).value == pytest.approx(6.0)

    @pytest.mark.parametrize("fixture", ["s2", "s4"])
    def test_total_matches_euler_characteristic(self, request, fixture):
        manifold = request.getfixturevalue(fixture)
        assert q_curvature(manifold).total == pytest.approx(2.0 * euler_constant(manifold.dimension))

    def test_euler_constants(self):
        assert euler_constant(2) == pytest.approx(2.0 * math.pi)
        assert euler_constant(4) == pytest.approx(8.0 * math.pi**2)
        with pytest.raises(InvalidParameterError):
            euler_constant(3)

    def test_product_total_is_negative(self, s2xs2):
        q = q_curvature(s2xs2)
        assert q.value == pytest.approx(-0.08)
        assert q.total == pytest.approx(-6.4 * math.pi**2)

    def test_zero_factor_keeps_q(self, s2_basis, s2):
        q = q_curvature(s2)
        transformed = q_transform(s2_basis, q, np.zeros(s2_basis.size))
        np.testing.assert_allclose(transformed.grid, 1.0)
        assert not transformed.is_constant

    def test_total_is_conformally_invariant(self, s2_basis, s2):
        phi = s2_basis.random_band_limited(RngStream(31), 0.4)
        q = q_curvature(s2)
        assert total_q_invariance_check(s2_basis, q, phi).verdict == Verdict.PASS
        assert q_roundtrip_residual(s2_basis, q, phi) < 1e-10


class TestGammaReduction:
    @hsettings(max_examples=40, deadline=None)
    @given(
        s=st.floats(0.3, 5.0),
        gamma=st.floats(0.5, 2.0),
        theta=st.floats(-1.0, 1.0),
        m=st.floats(0.1, 10.0),
    )
    def test_a_integral_matches_gamma_function(self, s, gamma, theta, m):
        params = PolyakovParams(gamma=gamma, theta=theta, m=m)
        beta = -s * gamma
        rng = np.random.default_rng(7)
        masses = np.exp(rng.normal(0.0, 1.5, 64))
        pairings = rng.normal(0.0, 1.0, 64)
        numeric = a_integrals(params, beta, masses, pairings)
        closed = route_b_constant(s, gamma) * gamma_reduced_terms(params, beta, masses, pairings)
        np.testing.assert_allclose(numeric, closed, rtol=1e-6)

    def test_a_integral_tracks_mass_and_pairing(self):
        params = PolyakovParams(gamma=1.0, theta=0.5, m=2.0)
        masses = np.array([1.0, 4.0])
        pairings = np.array([0.0, -1.0])
        integrals = a_integrals(params, -1.5, masses, pairings)
        # e^{−Θ(p₁−p₀)}(μ₁/μ₀)^{β/γ}
        assert integrals[1] / integrals[0] == pytest.approx(4.0 ** -1.5 * math.exp(0.5), rel=1e-6)

    def test_route_b_at_one(self):
        assert route_b_constant(1.0, 2.0) == pytest.approx(0.5)

    def test_unreachable_tail_tolerance(self):
        params = PolyakovParams(gamma=1.0, theta=0.0)
        with pytest.raises(GridTruncationError):
            a_integrals(params, -1.0, np.ones(3), np.zeros(3), tolerance=1e-300)

    def test_nonnegative_beta_rejected(self):
        params = PolyakovParams(gamma=1.0, theta=0.0)
        with pytest.raises(GateViolationError):
            a_integrals(params, 0.0, np.ones(3), np.zeros(3))


class TestPartitionFunction:
    @pytest.fixture(scope="class")
    def builder(self, s2_basis):
        return LqgBuilder(Mollifier(s2_basis), 1.0)

    def test_special_plain_parameters_fail_gate_on_sphere(self, s2):
        params = PolyakovParams.special(2, 1.0)
        assert params.theta == pytest.approx(1.0 / math.pi)
        assert params.theta_star == 1.0
        with pytest.raises(GateViolationError, match="finiteness gate"):
            check_gate(params, q_curvature(s2).total)

    def test_adjusted_has_no_theta_star(self):
        params = PolyakovParams(gamma=1.0, theta=-1.0, theta_star=0.5, flavor=Flavor.ADJUSTED)
        with pytest.raises(InvalidParameterError):
            check_gate(params, 1.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"gamma": 0.0, "theta": 1.0},
            {"gamma": 1.0, "theta": 1.0, "m": -1.0},
            {"gamma": 1.0, "theta": 1.0, "flavor": Flavor.REFINED},
        ],
    )
    def test_parameter_validation(self, kwargs):
        with pytest.raises(ValidationError):
            PolyakovParams(**kwargs)

    def test_routes_agree_on_sphere(self, builder, s2):
        params = PolyakovParams(gamma=1.0, theta=-1.0 / (4.0 * math.pi))
        report = partition_function(params, builder, q_curvature(s2), 500, RngStream(32), level=0.9999)
        assert report.beta == pytest.approx(-1.0)
        assert report.verdict == Verdict.PASS
        assert report.summary()["Z_routeA"] == report.route_a.value

    def test_builder_must_match_parameters(self, builder, s2):
        params = PolyakovParams(gamma=0.5, theta=-1.0 / (4.0 * math.pi))
        with pytest.raises(InvalidParameterError, match="does not match"):
            partition_function(params, builder, q_curvature(s2), 10, RngStream(33))

    def test_gaussian_moment(self, builder, s2_basis, s2):
        phi = s2_basis.random_band_limited(RngStream(34), 0.3)
        q = q_transform(s2_basis, q_curvature(s2), phi)
        check = gaussian_moment_check(0.3, builder, q, 2000, RngStream(39))
        assert check.verdict == Verdict.PASS
        assert check.values["target"] > 1.0

    def test_adjusted_flavor_scales_routes_by_r(self, builder, s2_basis, s2):
        data = FlavorData.estimate(s2_basis, steps=3, tolerance=1e-3)
        adjusted = LqgBuilder(Mollifier(s2_basis), 1.0, Flavor.ADJUSTED, data)
        q = q_curvature(s2)
        theta = -1.0 / (4.0 * math.pi)
        plain_params = PolyakovParams(gamma=1.0, theta=theta)
        adjusted_params = PolyakovParams(gamma=1.0, theta=theta, flavor=Flavor.ADJUSTED)
        plain = partition_function(plain_params, builder, q, 200, RngStream(41), level=0.9999)
        report = partition_function(
            adjusted_params, adjusted, q, 200, RngStream(41), level=0.9999
        )
        # β = −1: every mass carries e^{γ²r/2}, so Z* picks up e^{−γr/2}
        scale = math.exp(-0.5 * data.r_grid[0])
        assert scale < 0.95
        assert report.route_a.value == pytest.approx(scale * plain.route_a.value, rel=1e-6)
        assert report.route_b.value == pytest.approx(scale * plain.route_b.value, rel=1e-9)
        assert report.verdict == Verdict.PASS


class TestConformalAnomaly:
    @pytest.fixture(scope="class")
    def factor(self, product_basis):
        return ConformalFactor(product_basis, product_basis.random_band_limited(RngStream(35), 0.1))

    @pytest.mark.slow
    def test_adjusted_anomaly_on_product(self, product_basis, s2xs2, factor):
        params = PolyakovParams.special(4, 1.0, Flavor.ADJUSTED)
        data = FlavorData.estimate(product_basis, steps=3, tolerance=1e-3)
        builder = LqgBuilder(Mollifier(product_basis), 1.0, Flavor.ADJUSTED, data)
        q = q_curvature(s2xs2)
        assert check_gate(params, q.total) == pytest.approx(-4.5 / (8.0 * math.pi**2) * 6.4 * math.pi**2)
        report = conformal_anomaly_check(params, builder, factor, q, 2000, RngStream(36))
        assert report.sigmas < 4.0
        assert report.summary()["anomaly_pred"] == report.predicted

    @pytest.mark.slow
    def test_plain_anomaly_on_product(self, product_basis, s2xs2, factor):
        params = PolyakovParams.special(4, 1.0)
        builder = LqgBuilder(Mollifier(product_basis), 1.0)
        q = q_curvature(s2xs2)
        assert check_gate(params, q.total) == pytest.approx(-2.2)
        report = conformal_anomaly_check(params, builder, factor, q, 2000, RngStream(37))
        assert report.sigmas < 4.0

    def test_constant_r_cancels_in_the_anomaly_ratio(self, product_basis, s2xs2, factor):
        params = PolyakovParams.special(4, 1.0, Flavor.ADJUSTED)
        q = q_curvature(s2xs2)
        beta = check_gate(params, q.total)
        terms = {}
        for r in (0.0, 0.37):
            data = FlavorData.constant(product_basis, r)
            builder = LqgBuilder(Mollifier(product_basis), 1.0, Flavor.ADJUSTED, data)
            transform = ConformalMeasure(builder, factor)
            terms[r] = paired_partition_terms(params, transform, q, beta, RngStream(40), 64)
        scale = math.exp(beta * 0.5 * 0.37)
        np.testing.assert_allclose(terms[0.37][0], scale * terms[0.0][0], rtol=1e-10)
        np.testing.assert_allclose(terms[0.37][1], scale * terms[0.0][1], rtol=1e-10)
        np.testing.assert_allclose(
            terms[0.37][1] / terms[0.37][0], terms[0.0][1] / terms[0.0][0], rtol=1e-10
        )

    def test_naive_shift_is_never_judged(self, product_basis, s2xs2, factor):
        builder = LqgBuilder(
            Mollifier(product_basis), 1.0, Flavor.ADJUSTED, FlavorData.constant(product_basis, 0.0)
        )
        report = naive_shift_diagnostic(builder, factor, q_curvature(s2xs2), 200, RngStream(38))
        assert report.verdict == Verdict.INCONCLUSIVE
        assert "naive" in report.note
        assert report.summary()["phi_bar_quadrature"] >= 0.0
