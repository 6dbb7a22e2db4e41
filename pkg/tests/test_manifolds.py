import math

import numpy as np
import pytest

from liouville_lab.core.exceptions import InvalidParameterError, UnsupportedModelError
from liouville_lab.core.rng import RngStream
from liouville_lab.core.types import Admissibility, ManifoldKind, ManifoldSpec
from liouville_lab.manifolds.admissibility import (
    admissibility_verdict,
    product_counterexample_spectrum,
)
from liouville_lab.manifolds.factory import ManifoldFactory, build_manifold
from liouville_lab.manifolds.harmonics import harmonic_dimension, sphere_area
from liouville_lab.spectral.basis import default_basis
from liouville_lab.spectral.gjms import gjms_spectrum


class TestGeometry:
    @pytest.mark.parametrize(
        "fixture,volume",
        [
            ("s2", 4.0 * math.pi),
            ("s4", 8.0 * math.pi**2 / 3.0),
            ("t2", 1.0),
            ("s2xs2", 80.0 * math.pi**2),
        ],
    )
    def test_quadrature_weights_sum_to_volume(self, request, fixture, volume):
        manifold = request.getfixturevalue(fixture)
        assert manifold.volume == pytest.approx(volume, rel=1e-12)
        assert manifold.quadrature(3).total_weight == pytest.approx(volume, rel=1e-10)

    def test_sphere_distance(self, s2):
        north = s2.reference_point()
        np.testing.assert_allclose(north, [0.0, 0.0, 1.0])
        assert float(s2.distance(north, -north)) == pytest.approx(math.pi)
        assert float(s2.distance(north, s2.point_near(north, 0.3))) == pytest.approx(0.3)

    def test_torus_minimal_image(self, t2):
        assert float(t2.distance(np.array([0.1, 0.0]), np.array([0.9, 0.0]))) == pytest.approx(0.2)
        np.testing.assert_allclose(t2.reference_point(), [0.0, 0.0])

    def test_torus_grid_layout(self, t2):
        grid = t2.quadrature(4)
        assert grid.size == 81
        np.testing.assert_allclose(grid.weights, 1.0 / 81)
        assert grid.spacing == pytest.approx(1.0 / 9)

    def test_random_points_lie_on_sphere(self, s4):
        points = s4.random_points(RngStream(3), 200)
        np.testing.assert_allclose(np.linalg.norm(points, axis=1), 1.0, rtol=1e-12)

    def test_brownian_step_stays_on_sphere(self, s2, rng):
        x = np.tile(s2.reference_point(), (50, 1))
        normals = rng.normals(0, 150).reshape(50, 3)
        out = s2.brownian_step(x, 0.01, normals)
        np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, rtol=1e-12)

    def test_geodesic_endpoints(self, s2xs2, rng):
        x, y = s2xs2.random_points(rng, 2)
        path = s2xs2.geodesic(x, y, np.array([0.0, 0.5, 1.0]))
        np.testing.assert_allclose(path[0], x, atol=1e-12)
        np.testing.assert_allclose(path[-1], y, atol=1e-12)
        half = float(s2xs2.distance(x, path[1]))
        assert half == pytest.approx(0.5 * float(s2xs2.distance(x, y)), rel=1e-9)

    def test_ball_mask_contains_center(self, s2):
        grid = s2.quadrature(8)
        center = grid.points[0]
        mask = s2.ball_mask(grid, center, 0.5)
        assert mask.dtype == bool
        assert mask[0]
        assert 0 < mask.sum() < grid.size

    @pytest.mark.parametrize("fixture", ["s2", "t2"])
    def test_partition_covers_volume(self, request, fixture):
        manifold = request.getfixturevalue(fixture)
        partition = manifold.partition(4)
        assert partition.cell_volumes.sum() == pytest.approx(manifold.volume, rel=1e-10)
        np.testing.assert_array_equal(partition.cell_of(partition.nodes), partition.node_cell)

    def test_ball_average_multiplier_of_constant_is_one(self, s2, t2):
        for manifold in (s2, t2):
            blocks = manifold.laplace_spectrum(3).blocks
            beta = manifold.ball_average_multipliers(blocks, 0.2)
            assert beta[0] == pytest.approx(1.0)
            assert np.all(np.abs(beta) <= 1.0 + 1e-12)


class TestEigenfunctions:
    @pytest.mark.parametrize(
        "spec,cutoff",
        [
            (ManifoldSpec.sphere(2), 6),
            (ManifoldSpec.sphere(4), 3),
            (ManifoldSpec.sphere(2, radius=2.0), 4),
            (ManifoldSpec.torus((1.0, 2.0)), 3),
            (ManifoldSpec.product(1.0, 0.2), 2),
        ],
    )
    def test_basis_is_orthonormal(self, spec, cutoff):
        basis = default_basis(gjms_spectrum(build_manifold(spec), cutoff))
        np.testing.assert_allclose(basis.gram(), np.eye(basis.size), atol=1e-10)

    def test_sphere_multiplicities(self, s4):
        spectrum = s4.laplace_spectrum(4)
        assert [b.multiplicity for b in spectrum.blocks] == [
            harmonic_dimension(4, l) for l in range(5)
        ]
        assert harmonic_dimension(2, 5) == 11
        assert harmonic_dimension(4, 1) == 5

    def test_zonal_matches_addition_theorem(self, s2, rng):
        x, y = s2.random_points(rng, 2)
        blocks = s2.laplace_spectrum(5).blocks
        zonal = s2.zonal(blocks, x, y)[0]
        explicit = s2.eigenfunctions(blocks, x)[0] * s2.eigenfunctions(blocks, y)[0]
        offsets = np.cumsum([0] + [b.multiplicity for b in blocks])
        summed = [explicit[a:b].sum() for a, b in zip(offsets[:-1], offsets[1:])]
        np.testing.assert_allclose(zonal, summed, atol=1e-12)

    def test_single_member_evaluation(self, s2, rng):
        block = s2.laplace_spectrum(3).blocks[2]
        grid = s2.quadrature(6)
        x, y = s2.random_points(rng, 2)
        members = [s2.eigenfunction_eval(block, m, grid.points) for m in range(block.multiplicity)]
        assert grid.integrate(members[3] ** 2) == pytest.approx(1.0, abs=1e-10)
        assert grid.integrate(members[1] * members[4]) == pytest.approx(0.0, abs=1e-10)
        product = sum(
            s2.eigenfunction_eval(block, m, x)[0] * s2.eigenfunction_eval(block, m, y)[0]
            for m in range(block.multiplicity)
        )
        assert product == pytest.approx(s2.zonal([block], x, y)[0, 0], abs=1e-12)

    def test_sphere_area(self):
        assert sphere_area(2) == pytest.approx(4.0 * math.pi)
        assert sphere_area(1) == pytest.approx(2.0 * math.pi)


class TestFactory:
    def test_aliases(self):
        assert ManifoldFactory.from_alias("S2xS2") == ManifoldSpec.product(1.0, 0.2)
        assert ManifoldFactory.from_alias("t4").dimension == 4

    def test_unknown_alias(self):
        with pytest.raises(InvalidParameterError, match="unknown manifold"):
            ManifoldFactory.from_alias("s3")

    def test_odd_dimension_rejected(self):
        with pytest.raises(InvalidParameterError):
            build_manifold(ManifoldSpec.sphere(3))

    def test_torus_needs_positive_sides(self):
        with pytest.raises(InvalidParameterError):
            build_manifold(ManifoldSpec.torus((1.0, -1.0)))

    def test_hyperbolic_factor_unsupported(self):
        with pytest.raises(UnsupportedModelError):
            build_manifold(ManifoldSpec.product(1.0, -1.0))

    def test_spec_from_mapping_fills_dimension(self):
        spec = ManifoldSpec.model_validate({"kind": "product_surfaces", "curvatures": [1.0, 0.2]})
        assert spec.kind == ManifoldKind.PRODUCT_SURFACES
        assert spec.dimension == 4


class TestAdmissibility:
    def test_nonpositive_curvature_always_admissible(self):
        assert admissibility_verdict(4, 0.0, 0.01) == Admissibility.ADMISSIBLE
        assert admissibility_verdict(6, -1.0, 0.01) == Admissibility.ADMISSIBLE

    @pytest.mark.parametrize(
        "lambda_1,expected",
        [
            (3.0, Admissibility.ADMISSIBLE),
            (2.0, Admissibility.BOUNDARY),
            (1.0, Admissibility.NOT_ADMISSIBLE),
        ],
    )
    def test_positive_curvature_threshold(self, lambda_1, expected):
        assert admissibility_verdict(4, 1.0, lambda_1) == expected

    def test_odd_dimension_rejected(self):
        with pytest.raises(InvalidParameterError):
            admissibility_verdict(3, 1.0, 1.0)

    def test_product_counterexample(self):
        report = product_counterexample_spectrum(0.5, 4)
        assert report.verdict == Admissibility.NOT_ADMISSIBLE
        assert report.threshold == pytest.approx(2.0 / 3.0)
        assert product_counterexample_spectrum(5.0, 4).verdict == Admissibility.BOUNDARY
