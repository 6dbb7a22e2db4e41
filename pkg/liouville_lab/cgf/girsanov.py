# cgf/girsanov.py
import math
from typing import Callable, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from liouville_lab.core.config import settings
from liouville_lab.core.logging import logger
from liouville_lab.core.rng import RngStream
from liouville_lab.core.stats import McEstimate, ci_overlap, effective_sample_size, mc_estimate
from liouville_lab.core.types import Verdict
from liouville_lab.cgf.field import sample_coefficients
from liouville_lab.spectral.basis import SpectralBasis

Functional = Callable[[np.ndarray], np.ndarray]


class GirsanovReport(BaseModel):
    shifted: McEstimate
    weighted: McEstimate
    overlap: bool
    ess_fraction: float
    verdict: Verdict


def girsanov_log_weight(basis: SpectralBasis, coeffs: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """a_n⟨h, P_gφ⟩ − (a_n/2)𝔭(φ, φ) for coefficient rows of h."""
    a = basis.a_n
    return a * (np.asarray(coeffs) @ basis.apply_p(phi)) - 0.5 * a * basis.form_p(phi)


def girsanov_shift_check(
    basis: SpectralBasis,
    phi: np.ndarray,
    functional: Functional,
    count: int,
    rng: RngStream,
    level: Optional[float] = None,
) -> GirsanovReport:
    """E[F(h + π_gφ)] against E[F(h)·exp(a_n⟨h,P_gφ⟩ − (a_n/2)𝔭(φ,φ))].

    Both sides read the same draws; ``functional`` maps coefficient rows
    (N, ℓ+1) to (N,).
    """
    coeffs = sample_coefficients(basis, rng, count)
    shift = basis.grounded(phi)
    weights = np.exp(girsanov_log_weight(basis, coeffs, phi))
    shifted = mc_estimate(functional(coeffs + shift), level)
    weighted = mc_estimate(functional(coeffs) * weights, level)
    ess_fraction = effective_sample_size(weights) / count
    if ess_fraction < settings.MIN_EFFECTIVE_SAMPLE_FRACTION:
        logger.warning("girsanov_low_ess", ess_fraction=ess_fraction, samples=count)
    overlap = ci_overlap(shifted, weighted)
    return GirsanovReport(
        shifted=shifted,
        weighted=weighted,
        overlap=overlap,
        ess_fraction=ess_fraction,
        verdict=Verdict.PASS if overlap else Verdict.FAIL,
    )


def girsanov_linear_closed_form(
    basis: SpectralBasis, phi: np.ndarray, u: np.ndarray
) -> Tuple[float, float]:
    """Both sides of the shift formula for F(h) = exp⟨h, u⟩, in closed form.

    The left side is the moment generating function of the shifted field;
    the right side completes the square in the tilted Gaussian integral.
    """
    a = basis.a_n
    u = np.asarray(u, dtype=float)
    lhs = 0.5 * basis.form_k(u) + float(np.dot(u[1:], np.asarray(phi)[1:]))
    tilt = u + a * basis.apply_p(phi)
    rhs = 0.5 * basis.form_k(tilt) - 0.5 * a * basis.form_p(phi)
    return math.exp(lhs), math.exp(rhs)


def linear_exponential(u: np.ndarray) -> Functional:
    u = np.asarray(u, dtype=float)
    return lambda coeffs: np.exp(coeffs @ u)


def capped_square(u: np.ndarray, cap: float) -> Functional:
    u = np.asarray(u, dtype=float)
    return lambda coeffs: np.minimum((coeffs @ u) ** 2, cap)
