# polyakov/qcurvature.py
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from liouville_lab.core.exceptions import InvalidParameterError, UnsupportedModelError
from liouville_lab.core.parallel import exact_sum
from liouville_lab.core.types import CheckResult, Verdict
from liouville_lab.manifolds.base import ManifoldModel
from liouville_lab.manifolds.harmonics import sphere_area
from liouville_lab.manifolds.product import ProductSurfaces
from liouville_lab.spectral.basis import SpectralBasis


@dataclass(frozen=True)
class QCurvature:
    """Q_g of a model metric: a constant, or grid values after a conformal change."""

    value: Optional[float]
    total: float
    grid: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def is_constant(self) -> bool:
        return self.grid is None

    def coefficients(self, basis: SpectralBasis) -> np.ndarray:
        """Basis coefficients of Q for pairings ⟨h, Q⟩."""
        if self.is_constant:
            return basis.constant(self.value)
        return basis.project(self.grid)

    def on_grid(self, basis: SpectralBasis) -> np.ndarray:
        return np.full(basis.grid.size, self.value) if self.is_constant else self.grid


def einstein_q(n: int, k: float) -> float:
    """(n−1)!·(k/(n−1))^{n/2} for Ric = k·g."""
    return math.factorial(n - 1) * (k / (n - 1)) ** (n // 2)


def product_q(k1: float, k2: float) -> float:
    """Q of S² × S² with curvatures k1, k2: −½(k1−k2)² + ⅙(k1+k2)²."""
    return -0.5 * (k1 - k2) ** 2 + (k1 + k2) ** 2 / 6.0


def euler_constant(n: int) -> float:
    """c_n with ∫Q = c_n·χ(M) on conformally flat manifolds: ½(n−1)!|S^n|."""
    if n < 2 or n % 2:
        raise InvalidParameterError("even dimension required")
    return 0.5 * math.factorial(n - 1) * sphere_area(n)


def q_curvature(manifold: ManifoldModel) -> QCurvature:
    n = manifold.dimension
    if isinstance(manifold, ProductSurfaces):
        value = product_q(*manifold.curvatures)
    elif manifold.einstein_constant is not None:
        value = einstein_q(n, manifold.einstein_constant)
    else:
        raise UnsupportedModelError(f"no closed-form Q-curvature on {manifold.name}")
    return QCurvature(value=float(value), total=float(value * manifold.volume))


def q_transform(basis: SpectralBasis, q: QCurvature, phi: np.ndarray) -> QCurvature:
    """Q_{g'} = e^{−nφ}(Q_g + P_gφ) on the grid, g' = e^{2φ}g."""
    n = basis.manifold.dimension
    phi_grid = basis.synthesize(phi)
    numerator = q.on_grid(basis) + basis.synthesize(basis.apply_p(phi))
    grid = numerator * np.exp(-n * phi_grid)
    total = exact_sum(basis.weights * np.exp(n * phi_grid) * grid)
    return QCurvature(value=None, total=total, grid=grid)


def total_q_invariance_check(
    basis: SpectralBasis, q: QCurvature, phi: np.ndarray, tolerance: float = 1e-6
) -> CheckResult:
    """∫Q_{g'}dvol_{g'} against ∫Q_g dvol_g by quadrature."""
    base = exact_sum(basis.weights * q.on_grid(basis))
    transformed = q_transform(basis, q, phi).total
    discrepancy = abs(transformed - base) / max(abs(base), 1.0)
    return CheckResult(
        name="total_q_invariance",
        verdict=Verdict.PASS if discrepancy < tolerance else Verdict.FAIL,
        values={"base": base, "transformed": transformed, "relative_discrepancy": discrepancy},
    )


def q_roundtrip_residual(basis: SpectralBasis, q: QCurvature, phi: np.ndarray) -> float:
    """Transform by φ, then back by −φ using P_{g'} = e^{−nφ}P_g; sup distance to Q_g."""
    n = basis.manifold.dimension
    density = np.exp(n * basis.synthesize(phi))
    forward = q_transform(basis, q, phi).grid
    back = density * (forward - basis.synthesize(basis.apply_p(phi)) / density)
    return float(np.max(np.abs(back - q.on_grid(basis))))
