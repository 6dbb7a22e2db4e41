# spectral/basis.py
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.manifolds.base import QuadratureGrid
from liouville_lab.spectral.gjms import GjmsSpectrum


@dataclass(frozen=True)
class SpectralBasis:
    """Truncated eigenbasis ψ_0..ψ_ℓ tabulated on a quadrature grid.

    Coefficient vectors have length ℓ + 1 with index 0 the constant mode.
    The grid must resolve every retained mode so that projection of
    band-limited functions is exact.
    """

    spectrum: GjmsSpectrum
    ell: int
    grid: QuadratureGrid
    psi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.spectrum.check_truncation(self.ell)
        needed = self.spectrum.max_mode_index(self.ell)
        if self.grid.resolution < needed:
            raise InvalidParameterError(
                f"grid resolution {self.grid.resolution} below mode index {needed}"
            )
        object.__setattr__(
            self, "psi", self.spectrum.eigenfunctions(self.grid.points, self.ell)
        )

    @property
    def manifold(self):
        return self.spectrum.manifold

    @property
    def a_n(self) -> float:
        return self.spectrum.a_n

    @property
    def size(self) -> int:
        return self.ell + 1

    @property
    def volume(self) -> float:
        return self.manifold.volume

    @property
    def weights(self) -> np.ndarray:
        return self.grid.weights

    @cached_property
    def nu(self) -> np.ndarray:
        return self.spectrum.nu(self.ell)

    @cached_property
    def lambdas(self) -> np.ndarray:
        return self.spectrum.lambdas(self.ell)

    @cached_property
    def inverse_nu(self) -> np.ndarray:
        """1/ν_j with the constant mode set to 0."""
        out = np.zeros_like(self.nu)
        out[1:] = 1.0 / self.nu[1:]
        return out

    @cached_property
    def field_scale(self) -> np.ndarray:
        """1/√(a_n ν_j) for the grounded modes, 0 on the constant."""
        self.spectrum.require_admissible()
        return np.sqrt(self.inverse_nu / self.a_n)

    @cached_property
    def diag_k(self) -> np.ndarray:
        """k_ℓ(x_i, x_i) at every grid point."""
        return (self.psi**2) @ (self.inverse_nu / self.a_n)

    def project(self, values: np.ndarray) -> np.ndarray:
        """Coefficients ∫ f ψ_j dvol by quadrature; ``values`` (npts,) or (npts, k)."""
        values = np.asarray(values, dtype=float)
        weighted = values * (self.weights if values.ndim == 1 else self.weights[:, None])
        return self.psi.T @ weighted

    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        return self.psi @ np.asarray(coeffs, dtype=float)

    def evaluate(self, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
        values = self.spectrum.eigenfunctions(np.atleast_2d(points), self.ell)
        return values @ np.asarray(coeffs, dtype=float)

    def constant(self, value: float) -> np.ndarray:
        """Coefficients of the constant function ``value``."""
        out = np.zeros(self.size)
        out[0] = value * math.sqrt(self.volume)
        return out

    def mean(self, coeffs: np.ndarray) -> float:
        """⟨u⟩_g = ∫u dvol / vol."""
        return float(np.asarray(coeffs)[0] / math.sqrt(self.volume))

    def grounded(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.array(coeffs, dtype=float)
        out[0] = 0.0
        return out

    def apply_p(self, coeffs: np.ndarray) -> np.ndarray:
        return self.nu * np.asarray(coeffs, dtype=float)

    def apply_k(self, coeffs: np.ndarray, normalized: bool = True) -> np.ndarray:
        """K_ℓ u (or k_ℓ u = K_ℓ u / a_n) in coefficients."""
        self.spectrum.require_admissible()
        out = self.inverse_nu * np.asarray(coeffs, dtype=float)
        return out / self.a_n if normalized else out

    def form_p(self, u: np.ndarray, v: Optional[np.ndarray] = None) -> float:
        """𝔭(u, v) = Σ ν_j u_j v_j."""
        v = u if v is None else v
        return float(np.sum(self.nu * np.asarray(u) * np.asarray(v)))

    def form_k(self, u: np.ndarray, v: Optional[np.ndarray] = None) -> float:
        """𝔨(u, v) = Σ_{j≥1} u_j v_j / (a_n ν_j)."""
        self.spectrum.require_admissible()
        v = u if v is None else v
        return float(np.sum(self.inverse_nu * np.asarray(u) * np.asarray(v)) / self.a_n)

    def gram(self, weights: Optional[np.ndarray] = None) -> np.ndarray:
        """∫ψ_iψ_j dm for the grid measure with the given point weights."""
        w = self.weights if weights is None else np.asarray(weights, dtype=float)
        return self.psi.T @ (self.psi * w[:, None])

    def random_band_limited(self, rng, amplitude: float = 1.0, decay: float = 1.0) -> np.ndarray:
        """Grounded coefficients with standard normal entries damped by (1+λ_j)^{-decay}."""
        z = rng.normals(0, self.size)
        coeffs = z * (1.0 + self.lambdas) ** (-decay)
        coeffs[0] = 0.0
        scale = np.max(np.abs(self.synthesize(coeffs)))
        return amplitude * coeffs / scale if scale > 0 else coeffs


def default_basis(spectrum: GjmsSpectrum, ell: Optional[int] = None) -> SpectralBasis:
    """Basis on the coarsest grid resolving all modes up to ``ell``."""
    ell = spectrum.total_modes if ell is None else ell
    grid = spectrum.manifold.quadrature(spectrum.max_mode_index(ell))
    return SpectralBasis(spectrum, ell, grid)
