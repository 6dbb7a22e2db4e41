# cgf/conformal.py
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from liouville_lab.core.logging import log_mc_diagnostic
from liouville_lab.core.parallel import exact_sum
from liouville_lab.core.rng import RngStream
from liouville_lab.core.stats import covariance_estimate
from liouville_lab.core.types import CheckResult, Verdict
from liouville_lab.cgf.field import FieldSample, sample_coefficients
from liouville_lab.spectral.conformal import ConformalFactor


@dataclass(frozen=True)
class ConformalField:
    """h' on (M, g' = e^{2φ}g): u ↦ ⟨h, e^{nφ}π_{g'}u⟩.

    ``coeffs`` may hold one sample (ℓ+1,) or rows (N, ℓ+1); pairings follow
    the same leading shape.
    """

    factor: ConformalFactor
    coeffs: np.ndarray = field(repr=False)

    def test_coefficients(self, values: np.ndarray) -> np.ndarray:
        """Coefficients of e^{nφ}π_{g'}u for grid values u."""
        return self.factor.basis.project(self.factor.density * self.factor.project_prime(values))

    def pairing(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(self.coeffs) @ self.test_coefficients(values)

    @property
    def xi(self) -> np.ndarray:
        """ξ = ⟨h⟩_{g'}."""
        return self.factor.pairing_mean(self.coeffs)

    def values(self) -> np.ndarray:
        """h' = h − ξ on the grid."""
        basis = self.factor.basis
        h = np.asarray(self.coeffs) @ basis.psi.T
        return h - np.asarray(self.xi)[..., None] if h.ndim > 1 else h - self.xi


def conformal_field_transform(sample: FieldSample, factor: ConformalFactor) -> ConformalField:
    return ConformalField(factor=factor, coeffs=sample.coeffs)


def conformal_covariance_target(factor: ConformalFactor, u: np.ndarray, v: np.ndarray) -> float:
    """𝔨_{g'}(u, v) = ∬ u(x) k_{g'}(x,y) v(y) dvol_{g'} dvol_{g'} on the grid."""
    kv = factor.apply_k(v, normalized=True)
    return exact_sum(factor.weights_prime * np.asarray(u, dtype=float) * kv)


def conformal_field_covariance_check(
    factor: ConformalFactor,
    pairs: Sequence[Tuple[np.ndarray, np.ndarray]],
    count: int,
    rng: RngStream,
    sigmas: float = 3.0,
) -> CheckResult:
    """Empirical covariance of ⟨h', u⟩ against the transformed kernel, for grid-valued pairs."""
    coeffs = sample_coefficients(factor.basis, rng, count)
    transformed = ConformalField(factor=factor, coeffs=coeffs)
    rows, worst = [], 0.0
    for u, v in pairs:
        estimate = covariance_estimate(transformed.pairing(u), transformed.pairing(v))
        target = conformal_covariance_target(factor, u, v)
        distance = estimate.sigmas_from(target)
        worst = max(worst, distance)
        rows.append([estimate.value, estimate.stderr, target, distance])
    log_mc_diagnostic("conformal_field_covariance", worst_sigmas=worst, samples=count)
    return CheckResult(
        name="conformal_field_covariance",
        verdict=Verdict.PASS if worst <= sigmas else Verdict.FAIL,
        values={"rows": rows, "worst_sigmas": worst},
    )
