# cgf/mollifiers.py
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.types import Scheme
from liouville_lab.manifolds.base import Partition
from liouville_lab.spectral.basis import SpectralBasis


@dataclass(frozen=True)
class Mollifier:
    """Smoothing q_ℓ of the field: h_ℓ(y) = ⟨h, q_ℓ(·, y)⟩.

    ``design(points)`` returns the matrix A with A[i, j] = (q_ℓ^*ψ_j)(y_i), so
    the mollified field of coefficients c is A @ c and its covariance is
    A diag(1/(a_n ν)) Aᵀ.
    """

    basis: SpectralBasis
    scheme: Scheme = Scheme.EIGENFUNCTION
    t: Optional[float] = None
    radius: Optional[float] = None
    cells: Optional[int] = None
    _partition: Optional[Partition] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        scheme = Scheme(self.scheme)
        object.__setattr__(self, "scheme", scheme)
        if scheme == Scheme.HEAT:
            t = 1.0 / self.basis.ell if self.t is None else float(self.t)
            if t <= 0:
                raise InvalidParameterError("heat mollifier needs t > 0")
            object.__setattr__(self, "t", t)
        if scheme == Scheme.BALL_AVERAGE and (self.radius is None or self.radius <= 0):
            raise InvalidParameterError("ball-average mollifier needs a positive radius")
        if scheme == Scheme.PARTITION:
            if self.cells is None or self.cells < 1:
                raise InvalidParameterError("partition mollifier needs cells ≥ 1")
            object.__setattr__(self, "_partition", self.basis.manifold.partition(self.cells))

    @cached_property
    def multipliers(self) -> Optional[np.ndarray]:
        """Per-function factors for the radial schemes, None otherwise."""
        if self.scheme == Scheme.HEAT:
            return np.exp(-self.basis.lambdas * self.t)
        if self.scheme == Scheme.BALL_AVERAGE:
            spectrum = self.basis.spectrum
            count = spectrum.blocks_needed(self.basis.ell)
            beta = self.basis.manifold.ball_average_multipliers(
                [b.laplace for b in spectrum.blocks[:count]], self.radius
            )
            return beta[spectrum.block_index(self.basis.ell)]
        return None

    @cached_property
    def cell_averages(self) -> np.ndarray:
        """Cell averages of ψ_0..ψ_ℓ: (cells, ℓ+1)."""
        partition = self._partition
        values = self.basis.spectrum.eigenfunctions(partition.nodes, self.basis.ell)
        return partition.cell_averages(values)

    def design(self, points: Optional[np.ndarray] = None) -> np.ndarray:
        on_grid = points is None
        points = self.basis.grid.points if on_grid else np.atleast_2d(points)
        if self.scheme == Scheme.PARTITION:
            return self.cell_averages[self._partition.cell_of(points)]
        psi = self.basis.psi if on_grid else self.basis.spectrum.eigenfunctions(points, self.basis.ell)
        if self.multipliers is None:
            return psi
        return psi * self.multipliers

    @cached_property
    def grid_design(self) -> np.ndarray:
        return self.design()

    @cached_property
    def grid_variance(self) -> np.ndarray:
        """E[h_ℓ(x_i)²] of the mollified field at every grid point."""
        if self.scheme == Scheme.EIGENFUNCTION:
            return self.basis.diag_k
        return (self.grid_design**2) @ (self.basis.inverse_nu / self.basis.a_n)

    def field(self, coeffs: np.ndarray, points: Optional[np.ndarray] = None) -> np.ndarray:
        """Mollified field values; coefficient rows (N, ℓ+1) give (N, npts)."""
        design = self.grid_design if points is None else self.design(points)
        return np.asarray(coeffs, dtype=float) @ design.T

    def covariance(self, xs: Optional[np.ndarray] = None, ys: Optional[np.ndarray] = None) -> np.ndarray:
        """(q_ℓ ⊗ q_ℓ)k between two point sets (grid by default)."""
        ax = self.grid_design if xs is None else self.design(xs)
        ay = ax if ys is None else self.design(ys)
        return (ax * (self.basis.inverse_nu / self.basis.a_n)) @ ay.T

    @property
    def metadata(self) -> dict:
        meta = {"scheme": self.scheme.value, "ell": self.basis.ell}
        if self.t is not None:
            meta["t"] = self.t
        if self.radius is not None:
            meta["radius"] = self.radius
        if self.cells is not None:
            meta["cells"] = self.cells
        return meta


def mollified_field(
    mollifier: Mollifier, coeffs: np.ndarray, points: np.ndarray
) -> np.ndarray:
    return mollifier.field(coeffs, points)
