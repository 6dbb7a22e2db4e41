# spectral/gjms.py
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np
import sympy

from liouville_lab.core.exceptions import (
    InvalidParameterError,
    NotAdmissibleError,
    UnsupportedModelError,
)
from liouville_lab.manifolds.base import LaplaceSpectrum, ManifoldModel, SpectrumBlock
from liouville_lab.manifolds.product import ProductSurfaces


def a_n_constant(n: int) -> float:
    """a_n = 2 / (Γ(n/2) (4π)^{n/2})."""
    if n < 2 or n % 2:
        raise InvalidParameterError("even dimension required")
    return 2.0 / (math.gamma(n / 2.0) * (4.0 * math.pi) ** (n / 2.0))


def nu_shifts(n: int) -> List[int]:
    """ν_j^{(n)} = (n/2)(n/2 - 1) - j(j - 1) for j = 1..n/2."""
    h = n // 2
    return [h * (h - 1) - j * (j - 1) for j in range(1, h + 1)]


def gjms_polynomial(lam, k: float, n: int):
    """ν(λ) = ∏_j (λ + k/(n-1) · ν_j^{(n)}) for an Einstein metric with Ric = k·g."""
    lam = np.asarray(lam, dtype=float)
    scale = k / (n - 1) if n > 1 else 0.0
    out = np.ones_like(lam)
    for shift in nu_shifts(n):
        out = out * (lam + scale * shift)
    return out


def paneitz_product(lam1, lam2, k1: float, k2: float):
    """Paneitz eigenvalue on a product of two surfaces of curvatures k1, k2."""
    lam1, lam2 = np.asarray(lam1, dtype=float), np.asarray(lam2, dtype=float)
    total = lam1 + lam2
    return total**2 - 2.0 * k1 * lam1 - 2.0 * k2 * lam2 + (4.0 / 3.0) * (k1 + k2) * total


def gjms_symbolic_coefficients(n: int) -> Dict[int, int]:
    """Integer coefficients of P on the unit S^n as a polynomial in Δ: {power: coefficient}."""
    if n < 2 or n % 2:
        raise InvalidParameterError("even dimension required")
    delta = sympy.Symbol("Delta")
    x = -delta
    poly = sympy.expand(sympy.prod([x + shift for shift in nu_shifts(n)]))
    coeffs = sympy.Poly(poly, delta).as_dict()
    return {int(power[0]): int(c) for power, c in coeffs.items() if c != 0}


@dataclass(frozen=True)
class GjmsBlock:
    laplace: SpectrumBlock
    nu: float

    @property
    def eigenvalue(self) -> float:
        return self.laplace.eigenvalue

    @property
    def multiplicity(self) -> int:
        return self.laplace.multiplicity

    @property
    def mode(self) -> tuple:
        return self.laplace.mode


@dataclass(frozen=True)
class GjmsSpectrum:
    """Co-polyharmonic eigenvalues ν with the eigenfunctions of the model.

    Blocks are sorted by (ν, mode) with the constant block first; the basis
    index j runs over basis functions in block order, j = 0 being constant.
    """

    manifold: ManifoldModel
    base: LaplaceSpectrum
    blocks: Tuple[GjmsBlock, ...]
    a_n: float
    einstein_constant: Optional[float]

    @property
    def dimension(self) -> int:
        return self.manifold.dimension

    @property
    def admissible(self) -> bool:
        return all(b.nu > 0 for b in self.blocks[1:])

    def require_admissible(self) -> None:
        if not self.admissible:
            worst = min(b.nu for b in self.blocks[1:])
            raise NotAdmissibleError(f"not admissible: ν = {worst:g} ≤ 0 on a nonconstant mode")

    @property
    def total_modes(self) -> int:
        """Number of grounded basis functions (j ≥ 1)."""
        return sum(b.multiplicity for b in self.blocks) - 1

    @cached_property
    def block_nu(self) -> np.ndarray:
        return np.array([b.nu for b in self.blocks], dtype=float)

    @cached_property
    def block_lambda(self) -> np.ndarray:
        return np.array([b.eigenvalue for b in self.blocks], dtype=float)

    @cached_property
    def block_multiplicity(self) -> np.ndarray:
        return np.array([b.multiplicity for b in self.blocks], dtype=int)

    @cached_property
    def block_offsets(self) -> np.ndarray:
        """Basis index of the first function of each block."""
        return np.concatenate([[0], np.cumsum(self.block_multiplicity)[:-1]])

    def nu(self, ell: Optional[int] = None) -> np.ndarray:
        """ν_0..ν_ell repeated by multiplicity (ν_0 = 0)."""
        ell = self.total_modes if ell is None else ell
        count = self.blocks_needed(ell)
        values = np.repeat(self.block_nu[:count], self.block_multiplicity[:count])
        return values[: ell + 1]

    def lambdas(self, ell: Optional[int] = None) -> np.ndarray:
        ell = self.total_modes if ell is None else ell
        count = self.blocks_needed(ell)
        values = np.repeat(self.block_lambda[:count], self.block_multiplicity[:count])
        return values[: ell + 1]

    def block_index(self, ell: Optional[int] = None) -> np.ndarray:
        """Block index of every basis function 0..ell."""
        ell = self.total_modes if ell is None else ell
        count = self.blocks_needed(ell)
        return np.repeat(np.arange(count), self.block_multiplicity[:count])[: ell + 1]

    def check_truncation(self, ell: int) -> None:
        if ell < 1 or ell > self.total_modes:
            raise InvalidParameterError(
                f"truncation ℓ={ell} outside 1..{self.total_modes} available modes"
            )

    def blocks_needed(self, ell: int) -> int:
        """Number of leading blocks whose functions cover indices 0..ell."""
        ends = self.block_offsets + self.block_multiplicity
        return int(np.searchsorted(ends, ell + 1) + 1)

    def split_truncation(self, ell: int) -> Tuple[int, int]:
        """(complete blocks covering 0..ell, members taken from the next block)."""
        count = self.blocks_needed(ell)
        end = self.block_offsets[count - 1] + self.block_multiplicity[count - 1]
        if end == ell + 1:
            return count, 0
        return count - 1, int(ell + 1 - self.block_offsets[count - 1])

    def full_block_truncation(self, max_index: int) -> int:
        """Largest ℓ ending on a block boundary whose blocks have mode index ≤ max_index."""
        ell = 0
        for b, offset, mult in zip(self.blocks, self.block_offsets, self.block_multiplicity):
            if b is self.blocks[0]:
                continue
            if max(abs(v) for v in b.mode) <= max_index:
                ell = max(ell, int(offset + mult - 1))
        return ell

    def eigenfunctions(
        self, points: np.ndarray, ell: Optional[int] = None, include_constant: bool = True
    ) -> np.ndarray:
        ell = self.total_modes if ell is None else ell
        count = self.blocks_needed(ell)
        values = self.manifold.eigenfunctions(
            [b.laplace for b in self.blocks[:count]], np.atleast_2d(points)
        )[:, : ell + 1]
        return values if include_constant else values[:, 1:]

    def max_mode_index(self, ell: int) -> int:
        count = self.blocks_needed(ell)
        return max(max(abs(v) for v in b.mode) for b in self.blocks[:count])

    def nu_entries(self) -> List[list]:
        return [[i, b.nu, b.multiplicity, str(b.mode)] for i, b in enumerate(self.blocks)]


def _nu_for_block(
    manifold: Optional[ManifoldModel], block: SpectrumBlock, k: Optional[float], n: int
) -> float:
    if k is not None:
        return float(gjms_polynomial(block.eigenvalue, k, n))
    lam1, lam2 = manifold.factor_eigenvalues(block)
    k1, k2 = manifold.curvatures
    return float(paneitz_product(lam1, lam2, k1, k2))


def gjms_eigenvalues(
    spectrum: LaplaceSpectrum,
    k: Optional[float],
    n: int,
    manifold: ManifoldModel,
) -> GjmsSpectrum:
    """GJMS spectrum from the Laplace spectrum of an Einstein, flat or product model."""
    if k is None and not isinstance(manifold, ProductSurfaces):
        raise UnsupportedModelError(
            "GJMS coefficients are only available for Einstein, flat or surface-product models"
        )
    blocks = [GjmsBlock(b, _nu_for_block(manifold, b, k, n)) for b in spectrum.blocks]
    blocks.sort(key=lambda b: (b.eigenvalue != 0.0, b.nu, b.mode))
    return GjmsSpectrum(
        manifold=manifold,
        base=spectrum,
        blocks=tuple(blocks),
        a_n=a_n_constant(n),
        einstein_constant=k,
    )


def gjms_spectrum(manifold: ManifoldModel, cutoff: int) -> GjmsSpectrum:
    """GJMS spectrum of a model manifold up to the given mode cutoff."""
    return gjms_eigenvalues(
        manifold.laplace_spectrum(cutoff),
        manifold.einstein_constant,
        manifold.dimension,
        manifold,
    )
