# spectral/conformal.py
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from liouville_lab.core.parallel import exact_sum
from liouville_lab.core.types import KernelKind
from liouville_lab.manifolds.harmonics import gauss_legendre
from liouville_lab.spectral.basis import SpectralBasis
from liouville_lab.spectral.kernels import KernelEvaluator


@dataclass(frozen=True)
class ConformalFactor:
    """Band-limited φ defining g' = e^{2φ} g, with the derived quantities of g'.

    ``phi`` holds basis coefficients. φ̄ is built from the normalized kernel
    k_ℓ; the unnormalized variant is a_n·φ̄.
    """

    basis: SpectralBasis
    phi: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.basis.manifold.dimension

    @property
    def is_trivial(self) -> bool:
        return not np.any(self.phi)

    @cached_property
    def phi_grid(self) -> np.ndarray:
        return self.basis.synthesize(self.phi)

    @cached_property
    def density(self) -> np.ndarray:
        """e^{nφ} on the grid."""
        return np.exp(self.n * self.phi_grid)

    @cached_property
    def weights_prime(self) -> np.ndarray:
        return self.basis.weights * self.density

    @cached_property
    def volume_prime(self) -> float:
        return exact_sum(self.weights_prime)

    @cached_property
    def density_coeffs(self) -> np.ndarray:
        """∫ e^{nφ} ψ_j dvol_g."""
        return self.basis.project(self.density)

    @cached_property
    def density_energy(self) -> float:
        """𝔨_ℓ(e^{nφ}, e^{nφ})."""
        return self.basis.form_k(self.density_coeffs)

    @cached_property
    def phi_bar(self) -> np.ndarray:
        """Coefficients of φ̄ = (2/v')k_ℓ(e^{nφ}) − 𝔨_ℓ(e^{nφ}, e^{nφ})/v'^2."""
        if self.is_trivial:
            return np.zeros(self.basis.size)
        v = self.volume_prime
        out = (2.0 / v) * self.basis.apply_k(self.density_coeffs)
        return out + self.basis.constant(-self.density_energy / v**2)

    @cached_property
    def phi_bar_grid(self) -> np.ndarray:
        return self.basis.synthesize(self.phi_bar)

    def phi_at(self, points: np.ndarray) -> np.ndarray:
        return self.basis.evaluate(self.phi, points)

    def phi_bar_at(self, points: np.ndarray) -> np.ndarray:
        return self.basis.evaluate(self.phi_bar, points)

    def mean_prime(self, values: np.ndarray) -> float:
        """⟨f⟩_{g'} of grid values."""
        return exact_sum(self.weights_prime * np.asarray(values, dtype=float)) / self.volume_prime

    def pairing_mean(self, h_coeffs: np.ndarray) -> np.ndarray:
        """ξ = ⟨h, e^{nφ}⟩/v' for grounded coefficient vectors (..., ℓ+1)."""
        return np.asarray(h_coeffs, dtype=float) @ self.density_coeffs / self.volume_prime

    def kernel(self, evaluator: KernelEvaluator, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """K_{g'}(x,y) = K_g(x,y) − ½φ̄(x) − ½φ̄(y) for the kind of ``evaluator``."""
        base = evaluator(x, y)
        if self.is_trivial:
            return base
        scale = 1.0 if evaluator.kind == KernelKind.NORMALIZED else self.basis.a_n
        bar_x = self.phi_bar_at(np.atleast_2d(x))
        bar_y = self.phi_bar_at(np.atleast_2d(y))
        return base - 0.5 * scale * (bar_x + bar_y)

    def apply_p(self, u: np.ndarray) -> np.ndarray:
        """P_{g'}u = e^{-nφ} P_g u on the grid, for coefficients u."""
        return self.basis.synthesize(self.basis.apply_p(u)) / self.density

    def apply_k(self, values: np.ndarray, normalized: bool = False) -> np.ndarray:
        """∫ K_{g'}(·, z) f(z) dvol_{g'}(z) on the grid for grid values f."""
        values = np.asarray(values, dtype=float)
        a_n = self.basis.a_n
        coeffs = self.basis.project(values * self.density)
        base = self.basis.synthesize(self.basis.apply_k(coeffs, normalized=False))
        bar = a_n * self.phi_bar_grid
        mass = exact_sum(self.weights_prime * values)
        cross = exact_sum(self.weights_prime * bar * values)
        out = base - 0.5 * bar * mass - 0.5 * cross
        return out / a_n if normalized else out

    def project_prime(self, values: np.ndarray) -> np.ndarray:
        """π_{g'} f = f − ⟨f⟩_{g'}."""
        return np.asarray(values, dtype=float) - self.mean_prime(values)


def conformal_kernel_transform(
    factor: ConformalFactor,
    x: np.ndarray,
    y: np.ndarray,
    kind: KernelKind = KernelKind.COPOLY_GREEN,
    ell: Optional[int] = None,
) -> np.ndarray:
    evaluator = KernelEvaluator(factor.basis.spectrum, kind, factor.basis.ell if ell is None else ell)
    return factor.kernel(evaluator, x, y)


def inversion_residual(factor: ConformalFactor, u: np.ndarray) -> float:
    """max |K_{g'}P_{g'}u − π_{g'}u| on the grid for band-limited coefficients u."""
    lhs = factor.apply_k(factor.apply_p(u))
    rhs = factor.project_prime(factor.basis.synthesize(u))
    return float(np.max(np.abs(lhs - rhs)))


def grounding_residual(factor: ConformalFactor, x: np.ndarray) -> float:
    """|∫ K_{g'}(x, ·) dvol_{g'}| through the explicit kernel matrix on the grid."""
    basis = factor.basis
    evaluator = KernelEvaluator(basis.spectrum, KernelKind.COPOLY_GREEN, basis.ell)
    row = evaluator.matrix(np.atleast_2d(x), basis.grid.points)[0]
    bar = basis.a_n * factor.phi_bar_grid
    kernel_row = row - 0.5 * basis.a_n * factor.phi_bar_at(np.atleast_2d(x))[0] - 0.5 * bar
    return abs(exact_sum(kernel_row * factor.weights_prime))


def conformal_length(factor: ConformalFactor, x: np.ndarray, y: np.ndarray, nodes: int = 24) -> float:
    """g'-length of the g-geodesic from x to y."""
    manifold = factor.basis.manifold
    d = float(manifold.distance(np.asarray(x), np.asarray(y)))
    if d == 0.0:
        return 0.0
    s, w = gauss_legendre(nodes, 0.0, 1.0)
    path = manifold.geodesic(np.asarray(x), np.asarray(y), s)
    return d * math.fsum((w * np.exp(factor.phi_at(path))).tolist())
