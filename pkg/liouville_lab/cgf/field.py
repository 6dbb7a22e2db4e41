# cgf/field.py
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from liouville_lab.core.config import settings
from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.logging import log_mc_diagnostic
from liouville_lab.core.parallel import chunk_ranges, ordered_map
from liouville_lab.core.rng import RngStream
from liouville_lab.core.stats import covariance_estimate, mc_estimate, variance_estimate
from liouville_lab.core.types import CheckResult, Verdict
from liouville_lab.spectral.basis import SpectralBasis, default_basis
from liouville_lab.spectral.gjms import GjmsSpectrum
from liouville_lab.spectral.kernels import green_kernel_eval

SAMPLE_CHUNK = 256


def draw_noise(rng: RngStream, ell: int, indices: Sequence[int]) -> np.ndarray:
    """Standard normals ξ for the given sample indices, shape (len, ℓ+1) with ξ_0 = 0.

    Sample i reads ``rng.sample(i)`` from counter 0, so the first ℓ draws of
    a sample do not depend on how many modes are requested after them.
    """
    out = np.zeros((len(indices), ell + 1))
    for row, i in enumerate(indices):
        out[row, 1:] = rng.sample(i).normals(0, ell)
    return out


def sample_coefficients(
    basis: SpectralBasis,
    rng: RngStream,
    count: int,
    start: int = 0,
    threads: Optional[int] = None,
) -> np.ndarray:
    """Field coefficients c_j = ξ_j/√(a_n ν_j) of ``count`` samples: (count, ℓ+1)."""
    threads = settings.THREADS if threads is None else threads

    def run(indices: range) -> np.ndarray:
        return noise_to_field(basis, draw_noise(rng, basis.ell, indices))

    ranges = [range(r.start + start, r.stop + start) for r in chunk_ranges(count, SAMPLE_CHUNK)]
    blocks = ordered_map(run, ranges, threads)
    if not blocks:
        return np.zeros((0, basis.size))
    return np.concatenate(blocks, axis=0)


@dataclass(frozen=True)
class FieldSample:
    """One draw of h_ℓ = Σ_{j≥1} ψ_j ξ_j/√(a_n ν_j) on a spectral basis."""

    basis: SpectralBasis
    xi: np.ndarray = field(repr=False)
    stream: Optional[RngStream] = None

    def __post_init__(self):
        if self.xi.shape != (self.basis.size,):
            raise InvalidParameterError(
                f"noise vector of shape {self.xi.shape}, expected ({self.basis.size},)"
            )

    @property
    def ell(self) -> int:
        return self.basis.ell

    @property
    def spectrum(self) -> GjmsSpectrum:
        return self.basis.spectrum

    @cached_property
    def coeffs(self) -> np.ndarray:
        return noise_to_field(self.basis, self.xi)

    @cached_property
    def values(self) -> np.ndarray:
        """h_ℓ on the basis grid."""
        return self.basis.synthesize(self.coeffs)

    def at(self, points: np.ndarray) -> np.ndarray:
        return self.basis.evaluate(self.coeffs, points)

    def pairing(self, u: np.ndarray) -> float:
        """⟨h_ℓ, u⟩ for coefficients u."""
        return float(self.coeffs @ np.asarray(u, dtype=float))

    def pairing_grid(self, values: np.ndarray) -> float:
        """⟨h_ℓ, u⟩ by quadrature of grid values."""
        return float(self.basis.grid.integrate(self.values * np.asarray(values, dtype=float)))

    def to_rows(self) -> List[list]:
        points = self.basis.grid.points
        return [[*map(float, p), float(v)] for p, v in zip(points, self.values)]

    def coefficient_rows(self) -> List[list]:
        return [[j, float(x)] for j, x in enumerate(self.xi)]

    @property
    def metadata(self) -> dict:
        meta = {"ell": self.ell, "manifold": self.basis.manifold.name}
        if self.stream is not None:
            meta.update(self.stream.metadata)
        return meta


def sample_field(
    spectrum: GjmsSpectrum,
    ell: int,
    rng: RngStream,
    basis: Optional[SpectralBasis] = None,
) -> FieldSample:
    spectrum.require_admissible()
    if basis is None:
        basis = default_basis(spectrum, ell)
    elif basis.ell != ell or basis.spectrum is not spectrum:
        raise InvalidParameterError("basis does not match the requested spectrum and ℓ")
    xi = np.zeros(basis.size)
    xi[1:] = rng.normals(0, ell)
    return FieldSample(basis=basis, xi=xi, stream=rng)


def covariance_kernel_ell(
    spectrum: GjmsSpectrum, ell: int, x: np.ndarray, y: np.ndarray
) -> np.ndarray:
    """k_ℓ(x, y) = E[h_ℓ(x) h_ℓ(y)]."""
    return green_kernel_eval(spectrum, x, y, ell, normalized=True)


def white_noise_extract(sample: FieldSample) -> np.ndarray:
    """Coefficients of √(a_n P_g) h_ℓ, which are the ξ_j of the sample."""
    out = np.sqrt(sample.basis.a_n * sample.basis.nu) * sample.coeffs
    out[0] = 0.0
    return out


def noise_to_field(basis: SpectralBasis, noise: np.ndarray) -> np.ndarray:
    """√k_g applied to white-noise coefficients."""
    return np.asarray(noise, dtype=float) * basis.field_scale


def field_covariance_check(
    basis: SpectralBasis,
    pairs: Sequence[Tuple[np.ndarray, np.ndarray]],
    count: int,
    rng: RngStream,
    sigmas: float = 3.0,
) -> CheckResult:
    """Empirical Cov[⟨h,u⟩, ⟨h,v⟩] against 𝔨(u, v) for coefficient pairs."""
    coeffs = sample_coefficients(basis, rng, count)
    rows, worst = [], 0.0
    for u, v in pairs:
        estimate = covariance_estimate(coeffs @ u, coeffs @ v)
        target = basis.form_k(u, v)
        distance = estimate.sigmas_from(target)
        worst = max(worst, distance)
        rows.append([estimate.value, estimate.stderr, target, distance])
    log_mc_diagnostic("field_covariance", pairs=len(rows), worst_sigmas=worst)
    return CheckResult(
        name="field_covariance",
        verdict=Verdict.PASS if worst <= sigmas else Verdict.FAIL,
        values={"rows": rows, "worst_sigmas": worst, "samples": count},
    )


def pointwise_variance_check(
    basis: SpectralBasis, point_index: int, count: int, rng: RngStream, sigmas: float = 3.0
) -> CheckResult:
    """Mean 0 and variance k_ℓ(x,x) of h_ℓ at one grid point."""
    coeffs = sample_coefficients(basis, rng, count)
    values = coeffs @ basis.psi[point_index]
    mean = mc_estimate(values)
    var = variance_estimate(values)
    target = float(basis.diag_k[point_index])
    ok = mean.sigmas_from(0.0) <= sigmas and var.sigmas_from(target) <= sigmas
    return CheckResult(
        name="pointwise_variance",
        verdict=Verdict.PASS if ok else Verdict.FAIL,
        values={"mean": mean.as_row(), "variance": var.as_row(), "k_diag": target},
    )


def martingale_increment_check(
    basis: SpectralBasis,
    u: np.ndarray,
    ell1: int,
    count: int,
    rng: RngStream,
    sigmas: float = 3.0,
) -> CheckResult:
    """Cov[⟨h_ℓ - h_{ℓ1}, u⟩, ⟨h_{ℓ1}, u⟩] ≈ 0 for the nested truncations."""
    if not 1 <= ell1 <= basis.ell:
        raise InvalidParameterError(f"ℓ1 = {ell1} outside 1..{basis.ell}")
    coeffs = sample_coefficients(basis, rng, count) * np.asarray(u, dtype=float)
    past = coeffs[:, : ell1 + 1].sum(axis=1)
    increment = coeffs[:, ell1 + 1 :].sum(axis=1)
    estimate = covariance_estimate(increment, past)
    return CheckResult(
        name="martingale_increment",
        verdict=Verdict.PASS if estimate.sigmas_from(0.0) <= sigmas else Verdict.FAIL,
        values={"covariance": estimate.as_row()},
    )
