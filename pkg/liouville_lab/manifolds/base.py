# manifolds/base.py
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from liouville_lab.core.exceptions import InvalidParameterError, UnsupportedModelError
from liouville_lab.core.rng import RngStream
from liouville_lab.core.types import ManifoldSpec


@dataclass(frozen=True)
class QuadratureGrid:
    """Weighted points on a model manifold.

    ``resolution`` is the band limit the grid integrates exactly: products
    of two eigenfunctions with mode index ≤ resolution.
    """

    points: np.ndarray
    weights: np.ndarray
    resolution: int
    spacing: float

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """∫ values dvol; ``values`` has shape (npts,) or (npts, k)."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))

    def to_rows(self) -> List[list]:
        return [[*map(float, p), float(w)] for p, w in zip(self.points, self.weights)]


@dataclass(frozen=True)
class SpectrumBlock:
    """One eigenspace block: all basis functions sharing a mode descriptor."""

    eigenvalue: float
    multiplicity: int
    mode: tuple


@dataclass(frozen=True)
class LaplaceSpectrum:
    blocks: Tuple[SpectrumBlock, ...]
    cutoff: int
    complete_below: float

    @property
    def total_modes(self) -> int:
        return sum(b.multiplicity for b in self.blocks)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues repeated by multiplicity, in basis order."""
        return np.repeat(
            [b.eigenvalue for b in self.blocks], [b.multiplicity for b in self.blocks]
        ).astype(float)

    @property
    def block_eigenvalues(self) -> np.ndarray:
        return np.array([b.eigenvalue for b in self.blocks], dtype=float)

    @property
    def lambda_1(self) -> float:
        return self.blocks[1].eigenvalue

    def to_rows(self) -> List[list]:
        return [[i, b.eigenvalue, b.multiplicity] for i, b in enumerate(self.blocks)]


@dataclass(frozen=True)
class Partition:
    """Cells covering the manifold with per-cell quadrature nodes."""

    cell_count: int
    nodes: np.ndarray
    node_weights: np.ndarray
    node_cell: np.ndarray
    cell_of: Callable[[np.ndarray], np.ndarray] = field(compare=False)

    @property
    def cell_volumes(self) -> np.ndarray:
        return np.bincount(self.node_cell, weights=self.node_weights, minlength=self.cell_count)

    def cell_averages(self, node_values: np.ndarray) -> np.ndarray:
        """Per-cell averages of node values with shape (nodes, k) → (cells, k)."""
        node_values = np.asarray(node_values, dtype=float)
        if node_values.ndim == 1:
            node_values = node_values[:, None]
        sums = np.zeros((self.cell_count, node_values.shape[1]))
        np.add.at(sums, self.node_cell, node_values * self.node_weights[:, None])
        return sums / self.cell_volumes[:, None]


class ManifoldModel(ABC):
    """Closed model manifold with exact geometry and closed-form spectral data."""

    is_homogeneous: bool = True

    def __init__(self, spec: ManifoldSpec):
        self.spec = spec

    @property
    def dimension(self) -> int:
        return self.spec.dimension

    @property
    @abstractmethod
    def name(self) -> str: ...

    @property
    @abstractmethod
    def einstein_constant(self) -> Optional[float]:
        """k with Ric = k·g, or None when the model is not Einstein."""

    @property
    @abstractmethod
    def volume(self) -> float: ...

    @property
    @abstractmethod
    def diameter(self) -> float: ...

    @property
    @abstractmethod
    def point_dim(self) -> int:
        """Number of chart coordinates per point."""

    @abstractmethod
    def distance(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Geodesic distance, broadcasting over leading axes."""

    @abstractmethod
    def quadrature(self, resolution: int) -> QuadratureGrid: ...

    @abstractmethod
    def laplace_spectrum(self, cutoff: int) -> LaplaceSpectrum: ...

    @abstractmethod
    def eigenfunctions(self, blocks: Sequence[SpectrumBlock], x: np.ndarray) -> np.ndarray:
        """Values of every basis function of ``blocks`` at ``x``: (npts, Σ multiplicity)."""

    @abstractmethod
    def zonal(self, blocks: Sequence[SpectrumBlock], x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Per-block sums Σ_{ψ in block} ψ(x)ψ(y) for paired points: (npairs, nblocks)."""

    @abstractmethod
    def basis_modes(self, block: SpectrumBlock) -> List[tuple]:
        """Descriptors of the basis functions inside a block, in evaluation order."""

    @abstractmethod
    def random_points(self, rng: RngStream, count: int) -> np.ndarray: ...

    @abstractmethod
    def geodesic(self, x: np.ndarray, y: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Points at fractions ``s`` along a minimizing geodesic from x to y."""

    @abstractmethod
    def brownian_step(self, x: np.ndarray, dt: float, normals: np.ndarray) -> np.ndarray:
        """One step of Brownian motion with generator Δ from positions ``x``."""

    @abstractmethod
    def point_near(self, x: np.ndarray, d: float) -> np.ndarray:
        """A point at geodesic distance ``d`` from ``x`` along a fixed direction."""

    def project(self, x: np.ndarray) -> np.ndarray:
        """Map ambient coordinates back onto the manifold."""
        return np.asarray(x, dtype=float)

    @property
    def ambient_noise_dim(self) -> int:
        return self.point_dim

    def reference_point(self) -> np.ndarray:
        return self.quadrature(1).points[0]

    def eigenfunction_eval(self, block: SpectrumBlock, member: int, x: np.ndarray) -> np.ndarray:
        values = self.eigenfunctions([block], np.atleast_2d(x))
        return values[:, member]

    def ball_mask(self, grid: QuadratureGrid, center: np.ndarray, radius: float) -> np.ndarray:
        return self.distance(grid.points, np.asarray(center)[None, :]) <= radius

    def ball_average_multipliers(
        self, blocks: Sequence[SpectrumBlock], radius: float
    ) -> np.ndarray:
        raise UnsupportedModelError(f"ball averages are not available on {self.name}")

    def partition(self, cells_per_axis: int, order: int = 8) -> Partition:
        raise UnsupportedModelError(f"cell partitions are not available on {self.name}")

    def check_cutoff(self, cutoff: int) -> None:
        if cutoff < 1:
            raise InvalidParameterError("spectrum cutoff must be ≥ 1")
