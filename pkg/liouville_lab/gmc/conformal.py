# gmc/conformal.py
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import eigh

from liouville_lab.core.config import settings
from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.logging import log_mc_diagnostic
from liouville_lab.core.parallel import chunk_ranges, ordered_map
from liouville_lab.core.rng import RngStream
from liouville_lab.core.stats import McEstimate, mc_estimate, two_sample_sigmas
from liouville_lab.core.types import CheckResult, Flavor, Scheme, Verdict
from liouville_lab.cgf.field import SAMPLE_CHUNK, draw_noise, noise_to_field
from liouville_lab.gmc.measure import LqgBuilder
from liouville_lab.spectral.conformal import ConformalFactor


@dataclass(frozen=True)
class ConformalMeasure:
    """μ^{h'}_{g'} as e^F·μ^h_g for the eigenfunction scheme.

    F = −γξ + (γ²/2)φ̄ + nφ for the plain measure and −γξ + (n + γ²/2)φ for
    the adjusted one, with ξ = ⟨h⟩_{g'} drawn from the same coefficients.
    """

    builder: LqgBuilder
    factor: ConformalFactor

    def __post_init__(self):
        if self.builder.mollifier.scheme != Scheme.EIGENFUNCTION:
            raise InvalidParameterError("conformal transforms use the eigenfunction scheme")
        if self.builder.flavor == Flavor.REFINED:
            raise InvalidParameterError("conformal transforms cover the plain and adjusted flavors")
        if self.factor.basis is not self.builder.basis:
            raise InvalidParameterError("factor and measure must share one basis")

    @property
    def gamma(self) -> float:
        return self.builder.gamma

    @cached_property
    def static_exponent(self) -> np.ndarray:
        """The part of F that does not depend on the field."""
        g, n = self.gamma, self.factor.n
        if self.builder.flavor == Flavor.ADJUSTED:
            return (n + 0.5 * g * g) * self.factor.phi_grid
        return 0.5 * g * g * self.factor.phi_bar_grid + n * self.factor.phi_grid

    def log_factor(self, coeffs: np.ndarray) -> np.ndarray:
        """F on the grid for coefficient rows (N, ℓ+1)."""
        xi = self.factor.pairing_mean(np.atleast_2d(coeffs))
        return self.static_exponent - self.gamma * xi[:, None]

    def weights(self, coeffs: np.ndarray) -> np.ndarray:
        return self.builder.weights(coeffs) * np.exp(self.log_factor(coeffs))


def conformal_measure_transform(
    builder: LqgBuilder, factor: ConformalFactor, coeffs: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """(weights of the transformed measure, F) for one sample or coefficient rows."""
    transform = ConformalMeasure(builder, factor)
    return transform.weights(coeffs), transform.log_factor(coeffs)


def adjusted_factor_residual(factor: ConformalFactor, gamma: float, coeffs: np.ndarray) -> float:
    """max |F_plain + (γ²/2)(φ − φ̄) − F_adjusted| on the grid."""
    xi = factor.pairing_mean(np.atleast_2d(coeffs))[:, None]
    n, half = factor.n, 0.5 * gamma * gamma
    plain = -gamma * xi + half * factor.phi_bar_grid + n * factor.phi_grid
    adjusted = -gamma * xi + (n + half) * factor.phi_grid
    recombined = plain + half * (factor.phi_grid - factor.phi_bar_grid)
    return float(np.max(np.abs(recombined - adjusted)))


@dataclass(frozen=True)
class DirectConformalSampler:
    """The g' field sampled directly on the grid from k_{g'} = k − ½φ̄(x) − ½φ̄(y)."""

    factor: ConformalFactor
    gamma: float
    r_prime: Optional[np.ndarray] = None

    @cached_property
    def covariance(self) -> np.ndarray:
        basis = self.factor.basis
        base = (basis.psi * (basis.inverse_nu / basis.a_n)) @ basis.psi.T
        bar = self.factor.phi_bar_grid
        return base - 0.5 * bar[:, None] - 0.5 * bar[None, :]

    @cached_property
    def root(self) -> np.ndarray:
        values, vectors = eigh(self.covariance)
        keep = values > 1e-10 * max(values.max(), 1.0)
        return vectors[:, keep] * np.sqrt(values[keep])

    def weights(self, noise: np.ndarray) -> np.ndarray:
        g = self.gamma
        h = noise @ self.root.T
        exponent = g * h - 0.5 * g * g * np.diag(self.covariance)
        if self.r_prime is not None:
            exponent = exponent + 0.5 * g * g * self.r_prime
        return self.factor.weights_prime * np.exp(exponent)

    def masses(
        self,
        rng: RngStream,
        count: int,
        masks: Optional[np.ndarray] = None,
        threads: Optional[int] = None,
    ) -> np.ndarray:
        threads = settings.THREADS if threads is None else threads
        rank = self.root.shape[1]
        subsets = None if masks is None else np.atleast_2d(np.asarray(masks, dtype=float))

        def run(indices: range) -> np.ndarray:
            noise = draw_noise(rng, rank, indices)[:, 1:]
            weights = self.weights(noise)
            total = weights.sum(axis=1, keepdims=True)
            return total if subsets is None else np.concatenate([total, weights @ subsets.T], axis=1)

        return np.concatenate(ordered_map(run, chunk_ranges(count, SAMPLE_CHUNK), threads), axis=0)


def transformed_masses(
    transform: ConformalMeasure,
    rng: RngStream,
    count: int,
    masks: Optional[np.ndarray] = None,
    threads: Optional[int] = None,
) -> np.ndarray:
    """Masses of e^F·μ^h_g: (count, 1 + nmasks)."""
    threads = settings.THREADS if threads is None else threads
    basis = transform.builder.basis
    subsets = None if masks is None else np.atleast_2d(np.asarray(masks, dtype=float))

    def run(indices: range) -> np.ndarray:
        coeffs = noise_to_field(basis, draw_noise(rng, basis.ell, indices))
        weights = transform.weights(coeffs)
        total = weights.sum(axis=1, keepdims=True)
        return total if subsets is None else np.concatenate([total, weights @ subsets.T], axis=1)

    return np.concatenate(ordered_map(run, chunk_ranges(count, SAMPLE_CHUNK), threads), axis=0)


def conformal_measure_check(
    transform: ConformalMeasure,
    masks: np.ndarray,
    count: int,
    rng: RngStream,
    sigmas: float = 3.0,
    r_prime: Optional[np.ndarray] = None,
) -> CheckResult:
    """First and second moments of subset masses: transformed g-measure against a direct g'-measure."""
    if transform.builder.flavor == Flavor.ADJUSTED and r_prime is None:
        raise InvalidParameterError("the adjusted g' measure needs r_{g'} on the grid")
    direct = DirectConformalSampler(transform.factor, transform.gamma, r_prime)
    a = transformed_masses(transform, rng.child(0), count, masks)
    b = direct.masses(rng.child(1), count, masks)
    rows, worst = [], 0.0
    for col in range(a.shape[1]):
        for power in (1, 2):
            ea, eb = mc_estimate(a[:, col] ** power), mc_estimate(b[:, col] ** power)
            distance = two_sample_sigmas(ea, eb)
            worst = max(worst, distance)
            rows.append([col, power, ea.value, ea.stderr, eb.value, eb.stderr, distance])
    total = mc_estimate(a[:, 0])
    volume_prime = transform.factor.volume_prime
    log_mc_diagnostic("conformal_measure", worst_sigmas=worst, samples=count)
    return CheckResult(
        name="conformal_measure",
        verdict=Verdict.PASS if worst <= sigmas else Verdict.FAIL,
        values={
            "rows": rows,
            "worst_sigmas": worst,
            "mean_total": total.as_row(),
            "volume_prime": volume_prime,
            "volume_sigmas": total.sigmas_from(volume_prime),
        },
    )


def conformal_mean_mass(transform: ConformalMeasure, count: int, rng: RngStream) -> McEstimate:
    """E[transformed μ(M)], which equals vol_{g'}(M) for the plain flavor."""
    return mc_estimate(transformed_masses(transform, rng, count)[:, 0])
