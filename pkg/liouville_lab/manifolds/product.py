# manifolds/product.py
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from liouville_lab.core.exceptions import UnsupportedModelError
from liouville_lab.core.rng import RngStream
from liouville_lab.core.types import ManifoldSpec
from liouville_lab.manifolds.base import (
    LaplaceSpectrum,
    ManifoldModel,
    QuadratureGrid,
    SpectrumBlock,
)
from liouville_lab.manifolds.sphere import Sphere


class ProductSurfaces(ManifoldModel):
    """S^2(r_1) × S^2(r_2) with curvatures k_i = 1/r_i^2.

    Only positively curved factors have explicit spectra; other curvature
    pairs are handled by the admissibility calculator alone.
    """

    def __init__(self, spec: ManifoldSpec):
        super().__init__(spec)
        k1, k2 = spec.curvatures
        if k1 <= 0 or k2 <= 0:
            raise UnsupportedModelError(
                "only sphere factors have explicit spectra; "
                "pass λ₁ to the admissibility calculator for other curvatures"
            )
        self.factors: Tuple[Sphere, Sphere] = (
            Sphere(ManifoldSpec.sphere(2, 1.0 / math.sqrt(k1))),
            Sphere(ManifoldSpec.sphere(2, 1.0 / math.sqrt(k2))),
        )

    @property
    def curvatures(self) -> Tuple[float, float]:
        return self.spec.curvatures

    @property
    def name(self) -> str:
        k1, k2 = self.curvatures
        return f"S^2xS^2(k1={k1:g},k2={k2:g})"

    @property
    def einstein_constant(self) -> Optional[float]:
        k1, k2 = self.curvatures
        return k1 if math.isclose(k1, k2) else None

    @property
    def volume(self) -> float:
        return self.factors[0].volume * self.factors[1].volume

    @property
    def diameter(self) -> float:
        return math.hypot(self.factors[0].diameter, self.factors[1].diameter)

    @property
    def point_dim(self) -> int:
        return 6

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        return x[..., :3], x[..., 3:]

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        (x1, x2), (y1, y2) = self.split(x), self.split(y)
        return np.hypot(self.factors[0].distance(x1, y1), self.factors[1].distance(x2, y2))

    def quadrature(self, resolution: int) -> QuadratureGrid:
        g1 = self.factors[0].quadrature(resolution)
        g2 = self.factors[1].quadrature(resolution)
        i, j = np.meshgrid(np.arange(g1.size), np.arange(g2.size), indexing="ij")
        i, j = i.ravel(), j.ravel()
        return QuadratureGrid(
            points=np.concatenate([g1.points[i], g2.points[j]], axis=1),
            weights=g1.weights[i] * g2.weights[j],
            resolution=resolution,
            spacing=max(g1.spacing, g2.spacing),
        )

    def laplace_spectrum(self, cutoff: int) -> LaplaceSpectrum:
        self.check_cutoff(cutoff)
        s1 = self.factors[0].laplace_spectrum(cutoff)
        s2 = self.factors[1].laplace_spectrum(cutoff)
        blocks = [
            SpectrumBlock(b1.eigenvalue + b2.eigenvalue, b1.multiplicity * b2.multiplicity,
                          (b1.mode[0], b2.mode[0]))
            for b1 in s1.blocks
            for b2 in s2.blocks
        ]
        blocks.sort(key=lambda b: (b.eigenvalue, b.mode))
        return LaplaceSpectrum(
            blocks=tuple(blocks),
            cutoff=cutoff,
            complete_below=min(s1.complete_below, s2.complete_below),
        )

    def factor_eigenvalues(self, block: SpectrumBlock) -> Tuple[float, float]:
        l1, l2 = block.mode
        r1, r2 = (f.radius for f in self.factors)
        return l1 * (l1 + 1) / r1**2, l2 * (l2 + 1) / r2**2

    def _factor_blocks(self, degrees: Sequence[int]) -> List[SpectrumBlock]:
        return [SpectrumBlock(0.0, 2 * l + 1, (l,)) for l in degrees]

    def eigenfunctions(self, blocks: Sequence[SpectrumBlock], x: np.ndarray) -> np.ndarray:
        x1, x2 = self.split(np.atleast_2d(x))
        lmax1 = max(b.mode[0] for b in blocks)
        lmax2 = max(b.mode[1] for b in blocks)
        f1 = self.factors[0].eigenfunctions(self._factor_blocks(range(lmax1 + 1)), x1)
        f2 = self.factors[1].eigenfunctions(self._factor_blocks(range(lmax2 + 1)), x2)
        cols = []
        for block in blocks:
            l1, l2 = block.mode
            a = f1[:, l1 * l1 : (l1 + 1) ** 2]
            b = f2[:, l2 * l2 : (l2 + 1) ** 2]
            cols.append((a[:, :, None] * b[:, None, :]).reshape(a.shape[0], -1))
        return np.concatenate(cols, axis=1)

    def zonal(self, blocks: Sequence[SpectrumBlock], x: np.ndarray, y: np.ndarray) -> np.ndarray:
        (x1, x2), (y1, y2) = self.split(np.atleast_2d(x)), self.split(np.atleast_2d(y))
        deg1 = np.array([b.mode[0] for b in blocks], dtype=int)
        deg2 = np.array([b.mode[1] for b in blocks], dtype=int)
        z1 = self.factors[0].zonal(self._factor_blocks(range(deg1.max() + 1)), x1, y1)
        z2 = self.factors[1].zonal(self._factor_blocks(range(deg2.max() + 1)), x2, y2)
        return z1[:, deg1] * z2[:, deg2]

    def basis_modes(self, block: SpectrumBlock) -> List[tuple]:
        l1, l2 = block.mode
        return [(m1, m2) for m1 in range(-l1, l1 + 1) for m2 in range(-l2, l2 + 1)]

    def reference_point(self) -> np.ndarray:
        return np.concatenate([f.reference_point() for f in self.factors])

    def random_points(self, rng: RngStream, count: int) -> np.ndarray:
        return np.concatenate(
            [self.factors[0].random_points(rng.child(0), count),
             self.factors[1].random_points(rng.child(1), count)],
            axis=1,
        )

    def geodesic(self, x: np.ndarray, y: np.ndarray, s: np.ndarray) -> np.ndarray:
        (x1, x2), (y1, y2) = self.split(x), self.split(y)
        return np.concatenate(
            [self.factors[0].geodesic(x1, y1, s), self.factors[1].geodesic(x2, y2, s)], axis=1
        )

    def brownian_step(self, x: np.ndarray, dt: float, normals: np.ndarray) -> np.ndarray:
        x1, x2 = self.split(x)
        n1, n2 = normals[:, :3], normals[:, 3:]
        return np.concatenate(
            [self.factors[0].brownian_step(x1, dt, n1), self.factors[1].brownian_step(x2, dt, n2)],
            axis=1,
        )

    def project(self, x: np.ndarray) -> np.ndarray:
        x1, x2 = self.split(x)
        return np.concatenate([self.factors[0].project(x1), self.factors[1].project(x2)], axis=-1)

    def point_near(self, x: np.ndarray, d: float) -> np.ndarray:
        x1, x2 = self.split(np.asarray(x, dtype=float))
        return np.concatenate([self.factors[0].point_near(x1, d), x2])
