# manifolds/admissibility.py
import math

from pydantic import BaseModel

from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.types import Admissibility


class CounterexampleReport(BaseModel):
    verdict: Admissibility
    threshold: float
    witness_upper_bound: float
    note: str


def admissibility_verdict(
    n: int, kappa: float, lambda_1: float, rel_tol: float = 1e-12
) -> Admissibility:
    """Admissibility of an Einstein manifold with Ric = -(n-1)κ·g.

    κ ≤ 0 is always admissible; for κ > 0 the operator is positive iff
    λ₁ > n(n-2)κ/4, with equality reported as the boundary case.
    """
    if n < 2 or n % 2:
        raise InvalidParameterError("even dimension required")
    if kappa <= 0:
        return Admissibility.ADMISSIBLE
    if lambda_1 <= 0:
        raise InvalidParameterError("λ₁ must be positive")
    threshold = n * (n - 2) * kappa / 4.0
    if math.isclose(lambda_1, threshold, rel_tol=rel_tol):
        return Admissibility.BOUNDARY
    return Admissibility.ADMISSIBLE if lambda_1 > threshold else Admissibility.NOT_ADMISSIBLE


def product_counterexample_spectrum(lambda1_m2: float, n: int) -> CounterexampleReport:
    """M = M₁ × M₂, M₁ of curvature -1/(n-3), M₂ a hyperbolic surface.

    M is Einstein with κ = 1/(n-1) and λ₁(M) ≤ λ₁(M₂); it fails admissibility
    as soon as λ₁(M₂) ≤ n(n-2)/(4(n-1)). Above that value the bound alone
    decides nothing.
    """
    if n < 4 or n % 2:
        raise InvalidParameterError("even dimension n ≥ 4 required")
    if lambda1_m2 <= 0:
        raise InvalidParameterError("λ₁(M₂) must be positive")
    threshold = n * (n - 2) / (4.0 * (n - 1))
    if lambda1_m2 <= threshold:
        return CounterexampleReport(
            verdict=Admissibility.NOT_ADMISSIBLE,
            threshold=threshold,
            witness_upper_bound=lambda1_m2,
            note="λ₁(M) ≤ λ₁(M₂) ≤ threshold",
        )
    return CounterexampleReport(
        verdict=Admissibility.BOUNDARY,
        threshold=threshold,
        witness_upper_bound=lambda1_m2,
        note="λ₁(M₂) above threshold; λ₁(M) unknown, bound inconclusive",
    )
