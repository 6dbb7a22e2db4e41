# manifolds/sphere.py
import math
from typing import List, Optional, Sequence

import numpy as np

from liouville_lab.core.rng import RngStream
from liouville_lab.manifolds.base import (
    LaplaceSpectrum,
    ManifoldModel,
    Partition,
    QuadratureGrid,
    SpectrumBlock,
)
from liouville_lab.manifolds.harmonics import (
    gauss_legendre,
    harmonic_dimension,
    normalized_gegenbauer,
    sphere_area,
    sphere_harmonics,
    sphere_modes,
    sphere_quadrature,
    zonal_harmonics,
)


def unit_angle(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Angle between unit vectors, accurate near 0 and near π."""
    return 2.0 * np.arctan2(np.linalg.norm(x - y, axis=-1), np.linalg.norm(x + y, axis=-1))


class Sphere(ManifoldModel):
    """Round sphere S^n of radius r, points as vectors in R^{n+1} with |x| = r."""

    @property
    def radius(self) -> float:
        return self.spec.radius

    @property
    def name(self) -> str:
        return f"S^{self.dimension}(r={self.radius:g})"

    @property
    def einstein_constant(self) -> Optional[float]:
        return (self.dimension - 1) / self.radius**2

    @property
    def volume(self) -> float:
        return sphere_area(self.dimension) * self.radius**self.dimension

    @property
    def diameter(self) -> float:
        return math.pi * self.radius

    @property
    def point_dim(self) -> int:
        return self.dimension + 1

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        r = self.radius
        return r * unit_angle(np.asarray(x) / r, np.asarray(y) / r)

    def quadrature(self, resolution: int) -> QuadratureGrid:
        self.check_cutoff(resolution)
        points, weights = sphere_quadrature(self.dimension, resolution)
        return QuadratureGrid(
            points=points * self.radius,
            weights=weights * self.radius**self.dimension,
            resolution=resolution,
            spacing=math.pi * self.radius / (resolution + 1),
        )

    def laplace_spectrum(self, cutoff: int) -> LaplaceSpectrum:
        self.check_cutoff(cutoff)
        n, r2 = self.dimension, self.radius**2
        blocks = tuple(
            SpectrumBlock(l * (l + n - 1) / r2, harmonic_dimension(n, l), (l,))
            for l in range(cutoff + 1)
        )
        return LaplaceSpectrum(
            blocks=blocks, cutoff=cutoff, complete_below=(cutoff + 1) * (cutoff + n) / r2
        )

    def eigenfunctions(self, blocks: Sequence[SpectrumBlock], x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        degrees = [b.mode[0] for b in blocks]
        if not degrees:
            return np.zeros((x.shape[0], 0))
        harmonics = sphere_harmonics(self.dimension, max(degrees), x / self.radius)
        scale = self.radius ** (-self.dimension / 2.0)
        return np.concatenate([harmonics[l] for l in degrees], axis=1) * scale

    def zonal(self, blocks: Sequence[SpectrumBlock], x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        degrees = np.array([b.mode[0] for b in blocks], dtype=int)
        t = np.cos(self.distance(x, y) / self.radius)
        table = zonal_harmonics(self.dimension, int(degrees.max()), t)
        return table[degrees].T / self.radius**self.dimension

    def basis_modes(self, block: SpectrumBlock) -> List[tuple]:
        return sphere_modes(self.dimension, block.mode[0])

    def reference_point(self) -> np.ndarray:
        pole = np.zeros(self.point_dim)
        pole[-1] = self.radius
        return pole

    def random_points(self, rng: RngStream, count: int) -> np.ndarray:
        z = rng.normals(0, count * self.point_dim).reshape(count, self.point_dim)
        return self.radius * z / np.linalg.norm(z, axis=1, keepdims=True)

    def geodesic(self, x: np.ndarray, y: np.ndarray, s: np.ndarray) -> np.ndarray:
        r = self.radius
        xh, yh = np.asarray(x) / r, np.asarray(y) / r
        theta = float(unit_angle(xh, yh))
        s = np.asarray(s, dtype=float)[:, None]
        if theta < 1e-12:
            return r * ((1.0 - s) * xh + s * yh)
        return r * (np.sin((1.0 - s) * theta) * xh + np.sin(s * theta) * yh) / math.sin(theta)

    def brownian_step(self, x: np.ndarray, dt: float, normals: np.ndarray) -> np.ndarray:
        r = self.radius
        xh = x / r
        z = normals - np.sum(normals * xh, axis=1, keepdims=True) * xh
        v = math.sqrt(2.0 * dt) * z
        speed = np.linalg.norm(v, axis=1, keepdims=True)
        angle = speed / r
        direction = np.divide(v, speed, out=np.zeros_like(v), where=speed > 0)
        out = np.cos(angle) * xh + np.sin(angle) * direction
        return r * out / np.linalg.norm(out, axis=1, keepdims=True)

    def project(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.radius * x / np.linalg.norm(x, axis=-1, keepdims=True)

    def point_near(self, x: np.ndarray, d: float) -> np.ndarray:
        r = self.radius
        xh = np.asarray(x, dtype=float) / r
        axis = np.zeros_like(xh)
        axis[int(np.argmin(np.abs(xh)))] = 1.0
        e = axis - np.dot(axis, xh) * xh
        e /= np.linalg.norm(e)
        return r * (math.cos(d / r) * xh + math.sin(d / r) * e)

    def ball_average_multipliers(
        self, blocks: Sequence[SpectrumBlock], radius: float
    ) -> np.ndarray:
        """Funk–Hecke multipliers: cap average of a degree-l harmonic = β_l · value at center."""
        degrees = np.array([b.mode[0] for b in blocks], dtype=int)
        lmax = int(degrees.max())
        rho = min(radius / self.radius, math.pi)
        theta, w = gauss_legendre(2 * lmax + 64, 0.0, rho)
        w = w * np.sin(theta) ** (self.dimension - 1)
        table = normalized_gegenbauer(lmax, self.dimension, np.cos(theta))
        return (table @ w / np.sum(w))[degrees]

    def partition(self, cells_per_axis: int, order: int = 8) -> Partition:
        if self.dimension != 2:
            return super().partition(cells_per_axis, order)
        r = self.radius
        n_theta, n_phi = cells_per_axis, 2 * cells_per_axis
        theta_edges = np.linspace(0.0, math.pi, n_theta + 1)
        phi_edges = np.linspace(0.0, 2.0 * math.pi, n_phi + 1)
        nodes, weights, cells = [], [], []
        for i in range(n_theta):
            t, wt = gauss_legendre(order, math.cos(theta_edges[i + 1]), math.cos(theta_edges[i]))
            s = np.sqrt(np.maximum(1.0 - t * t, 0.0))
            for j in range(n_phi):
                phi, wp = gauss_legendre(order, phi_edges[j], phi_edges[j + 1])
                tt, pp = np.meshgrid(np.arange(order), np.arange(order), indexing="ij")
                tt, pp = tt.ravel(), pp.ravel()
                nodes.append(
                    r
                    * np.stack(
                        [s[tt] * np.cos(phi[pp]), s[tt] * np.sin(phi[pp]), t[tt]], axis=1
                    )
                )
                weights.append(wt[tt] * wp[pp] * r * r)
                cells.append(np.full(tt.size, i * n_phi + j))

        def cell_of(points: np.ndarray) -> np.ndarray:
            p = np.atleast_2d(points) / r
            theta = np.arccos(np.clip(p[:, 2], -1.0, 1.0))
            phi = np.mod(np.arctan2(p[:, 1], p[:, 0]), 2.0 * math.pi)
            i = np.minimum((theta / (math.pi / n_theta)).astype(int), n_theta - 1)
            j = np.minimum((phi / (2.0 * math.pi / n_phi)).astype(int), n_phi - 1)
            return i * n_phi + j

        return Partition(
            cell_count=n_theta * n_phi,
            nodes=np.concatenate(nodes),
            node_weights=np.concatenate(weights),
            node_cell=np.concatenate(cells),
            cell_of=cell_of,
        )
