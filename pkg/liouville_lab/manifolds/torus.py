# manifolds/torus.py
import itertools
import math
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import jv

from liouville_lab.core.rng import RngStream
from liouville_lab.manifolds.base import (
    LaplaceSpectrum,
    ManifoldModel,
    Partition,
    QuadratureGrid,
    SpectrumBlock,
)
from liouville_lab.manifolds.harmonics import gauss_legendre


def _canonical(k: tuple) -> bool:
    """True for the representative of {k, -k}: first nonzero entry positive."""
    for v in k:
        if v != 0:
            return v > 0
    return True


class FlatTorus(ManifoldModel):
    """Flat torus ∏[0, L_i) with the real Fourier basis.

    Each block is a pair {k, -k} carrying cos and sin of 2π<k, x/L>; the zero
    vector is the constant block.
    """

    @property
    def sides(self) -> np.ndarray:
        return np.asarray(self.spec.side_lengths, dtype=float)

    @property
    def name(self) -> str:
        return "T^{}({})".format(self.dimension, ",".join(f"{s:g}" for s in self.sides))

    @property
    def einstein_constant(self) -> Optional[float]:
        return 0.0

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    @property
    def diameter(self) -> float:
        return float(0.5 * np.linalg.norm(self.sides))

    @property
    def point_dim(self) -> int:
        return self.dimension

    def wrap(self, x: np.ndarray) -> np.ndarray:
        return np.mod(x, self.sides)

    def displacement(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Minimal-image displacement y - x."""
        delta = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        return delta - self.sides * np.round(delta / self.sides)

    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.displacement(x, y), axis=-1)

    def quadrature(self, resolution: int) -> QuadratureGrid:
        self.check_cutoff(resolution)
        count = 2 * resolution + 1
        axes = [side * np.arange(count) / count for side in self.sides]
        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=1)
        weights = np.full(points.shape[0], self.volume / points.shape[0])
        return QuadratureGrid(
            points=points,
            weights=weights,
            resolution=resolution,
            spacing=float(np.max(self.sides) / count),
        )

    def laplace_spectrum(self, cutoff: int) -> LaplaceSpectrum:
        self.check_cutoff(cutoff)
        blocks = []
        for k in itertools.product(range(-cutoff, cutoff + 1), repeat=self.dimension):
            if not _canonical(k):
                continue
            lam = float(np.sum((2.0 * math.pi * np.asarray(k) / self.sides) ** 2))
            blocks.append(SpectrumBlock(lam, 1 if not any(k) else 2, tuple(k)))
        blocks.sort(key=lambda b: (b.eigenvalue, b.mode))
        complete = float(np.min((2.0 * math.pi * (cutoff + 1) / self.sides) ** 2))
        return LaplaceSpectrum(blocks=tuple(blocks), cutoff=cutoff, complete_below=complete)

    def _phases(self, blocks: Sequence[SpectrumBlock], x: np.ndarray) -> np.ndarray:
        ks = np.array([b.mode for b in blocks], dtype=float)
        return 2.0 * math.pi * (np.atleast_2d(x) / self.sides) @ ks.T

    def eigenfunctions(self, blocks: Sequence[SpectrumBlock], x: np.ndarray) -> np.ndarray:
        phases = self._phases(blocks, x)
        amp = math.sqrt(2.0 / self.volume)
        cols = []
        for i, block in enumerate(blocks):
            if block.multiplicity == 1:
                cols.append(np.full(phases.shape[0], 1.0 / math.sqrt(self.volume)))
            else:
                cols.append(amp * np.cos(phases[:, i]))
                cols.append(amp * np.sin(phases[:, i]))
        return np.stack(cols, axis=1)

    def zonal(self, blocks: Sequence[SpectrumBlock], x: np.ndarray, y: np.ndarray) -> np.ndarray:
        delta = self.displacement(np.atleast_2d(x), np.atleast_2d(y))
        phases = self._phases(blocks, delta)
        mult = np.array([b.multiplicity for b in blocks], dtype=float)
        weights = np.where(mult == 1, 1.0, 2.0) / self.volume
        return np.cos(phases) * weights

    def basis_modes(self, block: SpectrumBlock) -> List[tuple]:
        if block.multiplicity == 1:
            return [(block.mode, "const")]
        return [(block.mode, "cos"), (block.mode, "sin")]

    def reference_point(self) -> np.ndarray:
        return np.zeros(self.dimension)

    def random_points(self, rng: RngStream, count: int) -> np.ndarray:
        u = rng.uniforms(0, count * self.dimension).reshape(count, self.dimension)
        return u * self.sides

    def geodesic(self, x: np.ndarray, y: np.ndarray, s: np.ndarray) -> np.ndarray:
        delta = self.displacement(x, y)
        return self.wrap(np.asarray(x)[None, :] + np.asarray(s, dtype=float)[:, None] * delta)

    def brownian_step(self, x: np.ndarray, dt: float, normals: np.ndarray) -> np.ndarray:
        return x + math.sqrt(2.0 * dt) * normals

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.wrap(np.asarray(x, dtype=float))

    def point_near(self, x: np.ndarray, d: float) -> np.ndarray:
        step = np.zeros(self.dimension)
        step[0] = d
        return self.wrap(np.asarray(x, dtype=float) + step)

    def ball_average_multipliers(
        self, blocks: Sequence[SpectrumBlock], radius: float
    ) -> np.ndarray:
        """Fourier transform of the normalized ball indicator at each block frequency."""
        n = self.dimension
        freq = np.array(
            [np.linalg.norm(2.0 * math.pi * np.asarray(b.mode) / self.sides) for b in blocks]
        )
        arg = freq * radius
        out = np.ones_like(arg)
        nz = arg > 0
        out[nz] = gamma_fn(n / 2.0 + 1.0) * (2.0 / arg[nz]) ** (n / 2.0) * jv(n / 2.0, arg[nz])
        return out

    def partition(self, cells_per_axis: int, order: int = 8) -> Partition:
        n, c = self.dimension, cells_per_axis
        widths = self.sides / c
        base_nodes, base_weights = gauss_legendre(order, 0.0, 1.0)
        local = np.stack(
            [m.ravel() for m in np.meshgrid(*([base_nodes] * n), indexing="ij")], axis=1
        )
        local_w = np.prod(
            np.stack([m.ravel() for m in np.meshgrid(*([base_weights] * n), indexing="ij")], axis=1),
            axis=1,
        ) * float(np.prod(widths))
        nodes, weights, cells = [], [], []
        for idx, cell in enumerate(itertools.product(range(c), repeat=n)):
            nodes.append((np.asarray(cell) + local) * widths)
            weights.append(local_w)
            cells.append(np.full(local_w.size, idx))

        def cell_of(points: np.ndarray) -> np.ndarray:
            p = np.mod(np.atleast_2d(points), self.sides)
            ijk = np.minimum((p / widths).astype(int), c - 1)
            return np.ravel_multi_index(tuple(ijk.T), (c,) * n)

        return Partition(
            cell_count=c**n,
            nodes=np.concatenate(nodes),
            node_weights=np.concatenate(weights),
            node_cell=np.concatenate(cells),
            cell_of=cell_of,
        )
