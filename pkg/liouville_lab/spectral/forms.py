# spectral/forms.py
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.spectral.basis import SpectralBasis
from liouville_lab.spectral.gjms import GjmsSpectrum


@dataclass(frozen=True)
class CopolyForm:
    """𝔭(u, v) = Σ ν_j u_j v_j on coefficient vectors of length ℓ + 1."""

    spectrum: GjmsSpectrum
    ell: int

    @property
    def nu(self) -> np.ndarray:
        return self.spectrum.nu(self.ell)

    def _check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape[-1] != self.ell + 1:
            raise InvalidParameterError(
                f"coefficient vector of length {u.shape[-1]}, expected {self.ell + 1}"
            )
        return u

    def __call__(self, u: np.ndarray, v: Optional[np.ndarray] = None) -> float:
        u = self._check(u)
        v = u if v is None else self._check(v)
        return float(np.sum(self.nu * u * v))


def copoly_form_apply(form: CopolyForm, u: np.ndarray, v: np.ndarray) -> float:
    return form(u, v)


def copoly_apply(spectrum: GjmsSpectrum, u: np.ndarray) -> np.ndarray:
    """P_g u in coefficients."""
    u = np.asarray(u, dtype=float)
    return spectrum.nu(u.shape[-1] - 1) * u


def green_operator_apply(
    spectrum: GjmsSpectrum, u: np.ndarray, basis: Optional[SpectralBasis] = None
) -> np.ndarray:
    """K_g u: grounded coefficients divided by ν_j, constant mode dropped.

    With a ``basis`` the input is read as grid values and the result is
    returned as grid values.
    """
    spectrum.require_admissible()
    if basis is not None:
        return basis.synthesize(basis.apply_k(basis.project(u), normalized=False))
    u = np.asarray(u, dtype=float)
    nu = spectrum.nu(u.shape[-1] - 1)
    out = np.zeros_like(u)
    out[..., 1:] = u[..., 1:] / nu[1:]
    return out


def green_truncation_ladder(
    basis: SpectralBasis, values: np.ndarray, levels: Sequence[int]
) -> List[list]:
    """Sup-norm distance on the grid between K_{g,ℓ}u and K_g u at the full basis."""
    coeffs = basis.project(values)
    full = basis.synthesize(basis.apply_k(coeffs, normalized=False))
    rows = []
    for level in levels:
        partial = basis.apply_k(coeffs, normalized=False)
        partial[level + 1 :] = 0.0
        rows.append([int(level), float(np.max(np.abs(basis.synthesize(partial) - full)))])
    return rows


class WeylReport(BaseModel):
    slope: float
    max_scaled_residual: float
    count: int
    monotone: bool
    expected_slope: Optional[float] = None


def weyl_check(spectrum: GjmsSpectrum, min_count: int = 500) -> WeylReport:
    """Least-squares fit ν_j ≈ c·j on the complete part of the spectrum.

    Residuals are scaled by j^{1-1/n}; the report carries the largest one.
    """
    n = spectrum.dimension
    complete = spectrum.base.complete_below
    keep = [b for b in spectrum.blocks[1:] if b.eigenvalue < complete]
    nu = np.sort(np.repeat([b.nu for b in keep], [b.multiplicity for b in keep]))
    if nu.size < min_count:
        raise InvalidParameterError(f"Weyl fit needs ≥ {min_count} eigenvalues, got {nu.size}")
    j = np.arange(1, nu.size + 1, dtype=float)
    slope = float(np.sum(j * nu) / np.sum(j * j))
    residual = (nu - slope * j) / j ** (1.0 - 1.0 / n)
    expected = 4.0 * np.pi / spectrum.manifold.volume if n == 2 else None
    return WeylReport(
        slope=slope,
        max_scaled_residual=float(np.max(np.abs(residual))),
        count=int(nu.size),
        monotone=bool(np.all(np.diff(spectrum.block_nu[1:]) >= 0)),
        expected_slope=expected,
    )
