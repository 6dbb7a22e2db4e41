# gmc/checks.py
import math
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel
from scipy.stats import linregress

from liouville_lab.core.config import settings
from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.logging import log_mc_diagnostic
from liouville_lab.core.rng import RngStream
from liouville_lab.core.stats import (
    McEstimate,
    ci_overlap,
    mc_estimate,
    two_sample_sigmas,
    variance_estimate,
    z_value,
)
from liouville_lab.core.types import CheckResult, Flavor, Scheme, Verdict
from liouville_lab.cgf.field import draw_noise, sample_coefficients
from liouville_lab.cgf.mollifiers import Mollifier
from liouville_lab.gmc.measure import LqgBuilder, check_gamma, ensemble_masses
from liouville_lab.spectral.basis import SpectralBasis

PointFunctional = Callable[[np.ndarray, int], np.ndarray]


def mean_mass_check(
    builder: LqgBuilder,
    count: int,
    rng: RngStream,
    sigmas: float = 3.0,
    masses: Optional[np.ndarray] = None,
) -> CheckResult:
    """E[μ(M)] = vol(M) for the plain measure; ``masses`` skips the ensemble draw."""
    if masses is None:
        masses = ensemble_masses(builder, rng, count)[:, 0]
    estimate = mc_estimate(masses)
    target = builder.basis.grid.total_weight
    distance = estimate.sigmas_from(target)
    exact = estimate.stderr <= 1e-12 * abs(target) and math.isclose(
        estimate.value, target, rel_tol=1e-12
    )
    log_mc_diagnostic("mean_mass", gamma=builder.gamma, value=estimate.value, target=target)
    return CheckResult(
        name="mean_mass",
        verdict=Verdict.PASS if distance <= sigmas or exact else Verdict.FAIL,
        values={"mass": estimate.as_row(), "volume": target, "sigmas": distance},
    )


def cameron_martin_shift_check(
    builder: LqgBuilder, coeffs: np.ndarray, phi: np.ndarray, tolerance: float = 1e-12
) -> CheckResult:
    """Weights of h + φ against e^{γφ}·weights of h, pointwise."""
    coeffs = np.atleast_2d(coeffs)
    phi = np.asarray(phi, dtype=float)
    gamma = builder.gamma
    shifted = builder.weights(coeffs + phi)
    factor = np.exp(gamma * builder.mollifier.field(phi))
    if builder.flavor == Flavor.REFINED:
        data = builder.flavor_data
        factor = factor * math.exp(-0.5 * gamma * builder.basis.a_n * float(phi @ data.pr_coeffs))
    expected = builder.weights(coeffs) * factor
    discrepancy = float(np.max(np.abs(shifted - expected) / np.abs(expected)))
    return CheckResult(
        name="cameron_martin_shift",
        verdict=Verdict.PASS if discrepancy < tolerance else Verdict.FAIL,
        values={"max_relative_discrepancy": discrepancy},
    )


class CampbellReport(BaseModel):
    measure_side: McEstimate
    shifted_side: McEstimate
    sigmas: float
    verdict: Verdict


def campbell_check(
    builder: LqgBuilder,
    functional: PointFunctional,
    count: int,
    rng: RngStream,
    sigmas: float = 4.0,
) -> CampbellReport:
    """E∫f(h, x)dμ^h(x) against E∫f(h + γk_ℓ(x,·), x)dvol(x).

    ``functional(coeffs, i)`` evaluates f at grid point i for coefficient rows.
    The two sides use independent draws.
    """
    basis = builder.basis
    gamma = builder.gamma
    covariances = builder.mollifier.grid_design * (basis.inverse_nu / basis.a_n)
    points = basis.grid.size

    lhs_coeffs = sample_coefficients(basis, rng.child(0), count)
    weights = builder.weights(lhs_coeffs)
    lhs = np.zeros(count)
    for i in range(points):
        lhs += weights[:, i] * functional(lhs_coeffs, i)

    rhs_coeffs = sample_coefficients(basis, rng.child(1), count)
    rhs = np.zeros(count)
    for i in range(points):
        rhs += basis.weights[i] * functional(rhs_coeffs + gamma * covariances[i], i)

    measure_side, shifted_side = mc_estimate(lhs), mc_estimate(rhs)
    distance = two_sample_sigmas(measure_side, shifted_side)
    return CampbellReport(
        measure_side=measure_side,
        shifted_side=shifted_side,
        sigmas=distance,
        verdict=Verdict.PASS if distance <= sigmas else Verdict.FAIL,
    )


class MartingaleReport(BaseModel):
    slope: float
    slope_stderr: float
    intercept: float
    intercept_stderr: float
    level: float
    outer_mean: McEstimate
    inner_mean: McEstimate
    volume: float
    verdict: Verdict

    @property
    def slope_contains_one(self) -> bool:
        return abs(self.slope - 1.0) <= z_value(self.level) * self.slope_stderr

    @property
    def intercept_contains_zero(self) -> bool:
        return abs(self.intercept) <= z_value(self.level) * self.intercept_stderr


def martingale_check(
    basis: SpectralBasis,
    gamma: float,
    mask: np.ndarray,
    ell1: int,
    outer: int,
    inner: int,
    rng: RngStream,
    level: Optional[float] = None,
) -> MartingaleReport:
    """Nested Monte Carlo test of E[μ_{ℓ2}(B) | ξ_1..ξ_{ℓ1}] = μ_{ℓ1}(B), ℓ2 = basis.ell.

    Regresses the inner average of μ_{ℓ2}(B) on μ_{ℓ1}(B) over the outer draws.
    """
    level = settings.CI_LEVEL if level is None else level
    basis.spectrum.require_admissible()
    check_gamma(gamma, basis.manifold.dimension)
    ell2 = basis.ell
    if not 1 <= ell1 <= ell2:
        raise InvalidParameterError(f"need 1 ≤ ℓ1 ≤ ℓ2, got ℓ1={ell1}, ℓ2={ell2}")
    mask = np.asarray(mask, dtype=bool)
    w = basis.weights[mask]
    psi = basis.psi[mask]
    scale = basis.field_scale
    kvar = (psi**2) * (basis.inverse_nu / basis.a_n)
    var1 = kvar[:, : ell1 + 1].sum(axis=1)
    var2 = kvar.sum(axis=1)

    xi1 = draw_noise(rng.child(0), ell1, range(outer))
    h1 = (xi1 * scale[: ell1 + 1]) @ psi[:, : ell1 + 1].T
    coarse = (np.exp(gamma * h1 - 0.5 * gamma * gamma * var1) * w).sum(axis=1)

    if ell1 == ell2:
        fine = coarse.copy()
    else:
        fine = np.empty(outer)
        inner_rng = rng.child(1)
        tail = psi[:, ell1 + 1 :]
        tail_scale = scale[ell1 + 1 :]
        for o in range(outer):
            draws = np.stack(
                [inner_rng.sample(o * inner + r).normals(0, ell2 - ell1) for r in range(inner)]
            )
            h2 = h1[o] + (draws * tail_scale) @ tail.T
            fine[o] = (np.exp(gamma * h2 - 0.5 * gamma * gamma * var2) * w).sum(axis=1).mean()

    if ell1 == ell2 or np.ptp(coarse) == 0.0:
        slope, intercept, slope_se, intercept_se = 1.0, 0.0, 0.0, 0.0
    else:
        fit = linregress(coarse, fine)
        slope, intercept = float(fit.slope), float(fit.intercept)
        slope_se, intercept_se = float(fit.stderr), float(fit.intercept_stderr)

    report = MartingaleReport(
        slope=slope,
        slope_stderr=slope_se,
        intercept=intercept,
        intercept_stderr=intercept_se,
        level=level,
        outer_mean=mc_estimate(coarse, level),
        inner_mean=mc_estimate(fine, level),
        volume=float(np.sum(w)),
        verdict=Verdict.PASS,
    )
    ok = report.slope_contains_one and report.intercept_contains_zero
    log_mc_diagnostic("martingale", slope=slope, intercept=intercept, ok=ok)
    return report.model_copy(update={"verdict": Verdict.PASS if ok else Verdict.FAIL})


def scheme_cross_validation(
    basis: SpectralBasis,
    gamma: float,
    count: int,
    rng: RngStream,
    sigmas: float = 4.0,
) -> CheckResult:
    """Eigenfunction scheme at ℓ against the heat scheme at t = 1/ℓ.

    Both means equal vol(M) and decide the verdict; the variance gap closes
    only as ℓ grows and is reported.
    """
    eigen = LqgBuilder(Mollifier(basis, Scheme.EIGENFUNCTION), gamma)
    heat = LqgBuilder(Mollifier(basis, Scheme.HEAT), gamma)
    a = ensemble_masses(eigen, rng.child(0), count)[:, 0]
    b = ensemble_masses(heat, rng.child(1), count)[:, 0]
    mean_a, mean_b = mc_estimate(a), mc_estimate(b)
    var_a, var_b = variance_estimate(a), variance_estimate(b)
    mean_sigmas = two_sample_sigmas(mean_a, mean_b)
    var_sigmas = two_sample_sigmas(var_a, var_b)
    ok = mean_sigmas <= sigmas
    return CheckResult(
        name="scheme_cross_validation",
        verdict=Verdict.PASS if ok else Verdict.FAIL,
        values={
            "eigenfunction": {"mean": mean_a.as_row(), "variance": var_a.as_row()},
            "heat": {"mean": mean_b.as_row(), "variance": var_b.as_row()},
            "mean_sigmas": mean_sigmas,
            "variance_sigmas": var_sigmas,
            "overlap": ci_overlap(mean_a, mean_b),
        },
    )
