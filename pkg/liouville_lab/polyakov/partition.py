# polyakov/partition.py
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, field_validator
from scipy.integrate import trapezoid
from scipy.special import gammaln
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from liouville_lab.core.config import settings
from liouville_lab.core.exceptions import (
    GateViolationError,
    GridTruncationError,
    InvalidParameterError,
)
from liouville_lab.core.logging import log_mc_diagnostic, logger
from liouville_lab.core.parallel import chunk_ranges, ordered_map
from liouville_lab.core.rng import RngStream
from liouville_lab.core.stats import McEstimate, ci_overlap, mc_estimate, two_sample_sigmas
from liouville_lab.core.types import CheckResult, Flavor, Verdict
from liouville_lab.cgf.field import SAMPLE_CHUNK, draw_noise, noise_to_field
from liouville_lab.gmc.measure import LqgBuilder
from liouville_lab.polyakov.qcurvature import QCurvature
from liouville_lab.spectral.gjms import a_n_constant

A_STEPS_PER_WIDTH = 8
A_ROW_CHUNK = 1024


class PolyakovParams(BaseModel):
    gamma: float
    theta: float
    theta_star: float = 0.0
    m: float = 1.0
    flavor: Flavor = Flavor.PLAIN

    @field_validator("gamma")
    @classmethod
    def _positive_gamma(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("γ must be positive")
        return v

    @field_validator("m")
    @classmethod
    def _positive_m(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("m must be positive")
        return v

    @field_validator("flavor")
    @classmethod
    def _supported_flavor(cls, v: Flavor) -> Flavor:
        if v == Flavor.REFINED:
            raise ValueError("Polyakov measures use the plain or adjusted flavor")
        return v

    @classmethod
    def special(cls, n: int, gamma: float, flavor: Flavor = Flavor.PLAIN, m: float = 1.0):
        """Θ = a_n·n/γ, Θ* = γ (plain) or Θ = a_n(n/γ + γ/2) (adjusted)."""
        a = a_n_constant(n)
        if Flavor(flavor) == Flavor.ADJUSTED:
            return cls(gamma=gamma, theta=a * (n / gamma + gamma / 2.0), m=m, flavor=flavor)
        return cls(gamma=gamma, theta=a * n / gamma, theta_star=gamma, m=m, flavor=flavor)

    @classmethod
    def naive(cls, n: int, gamma: float, m: float = 1.0):
        """Adjusted measure with the unrenormalized shift Θ = a_n·n/γ."""
        return cls(gamma=gamma, theta=a_n_constant(n) * n / gamma, m=m, flavor=Flavor.ADJUSTED)

    def beta(self, total_q: float) -> float:
        """ΘQ(M) + Θ* (plain) or ΘQ(M) (adjusted)."""
        return self.theta * total_q + (self.theta_star if self.flavor == Flavor.PLAIN else 0.0)


def check_gate(params: PolyakovParams, total_q: float) -> float:
    """β after the finiteness gate; the boundary β = 0 is rejected."""
    if params.flavor == Flavor.ADJUSTED and params.theta_star != 0.0:
        raise InvalidParameterError("the adjusted Polyakov measure has no Θ* term")
    beta = params.beta(total_q)
    if not beta < 0:
        inequality = "ΘQ(M) + Θ* < 0" if params.flavor == Flavor.PLAIN else "ΘQ(M) < 0"
        raise GateViolationError(
            f"finiteness gate {inequality} fails: Θ = {params.theta:g}, "
            f"Θ* = {params.theta_star:g}, Q(M) = {total_q:g} gives {beta:g}"
        )
    return beta


class PartitionReport(BaseModel):
    flavor: Flavor
    gamma: float
    theta: float
    theta_star: float
    m: float
    beta: float
    route_a: McEstimate
    route_b: McEstimate
    sigmas: float
    overlap: bool
    verdict: Verdict

    def summary(self) -> dict:
        return {
            "flavor": self.flavor.value,
            "gamma": self.gamma,
            "Theta": self.theta,
            "Theta_star": self.theta_star,
            "m": self.m,
            "Z_routeA": self.route_a.value,
            "Z_routeB": self.route_b.value,
            "CI_A": [self.route_a.ci_low, self.route_a.ci_high],
            "CI_B": [self.route_b.ci_low, self.route_b.ci_high],
        }


def polyakov_samples(
    builder: LqgBuilder,
    q_coeffs: np.ndarray,
    rng: RngStream,
    count: int,
    threads: Optional[int] = None,
) -> np.ndarray:
    """(μ(M), ⟨h, Q⟩) for ``count`` field samples: (count, 2)."""
    threads = settings.THREADS if threads is None else threads
    basis = builder.basis

    def run(indices: range) -> np.ndarray:
        coeffs = noise_to_field(basis, draw_noise(rng, basis.ell, indices))
        mass = builder.weights(coeffs).sum(axis=1)
        return np.stack([mass, coeffs @ q_coeffs], axis=1)

    return np.concatenate(ordered_map(run, chunk_ranges(count, SAMPLE_CHUNK), threads), axis=0)


def gamma_reduced_terms(
    params: PolyakovParams, beta: float, masses: np.ndarray, pairings: np.ndarray
) -> np.ndarray:
    """e^{−Θ⟨h,Q⟩}(mμ(M))^{β/γ} per sample."""
    return np.exp(-params.theta * pairings + (beta / params.gamma) * np.log(params.m * masses))


def _a_grid(gamma: float, s: float, log_mass: np.ndarray, widening: float) -> np.ndarray:
    # peaks sit where m e^{γa}μ(M) = s; the left tail decays like e^{γsa}
    peaks = (math.log(s) - log_mass) / gamma
    lo = float(peaks.min()) - 10.0 * widening / (gamma * s)
    hi = float(peaks.max()) + 4.0 * widening / gamma
    step = 1.0 / (A_STEPS_PER_WIDTH * gamma * max(1.0, math.sqrt(s)))
    return np.linspace(lo, hi, int(math.ceil((hi - lo) / step)) + 1)


def _a_integrals_on_grid(
    params: PolyakovParams,
    beta: float,
    masses: np.ndarray,
    pairings: np.ndarray,
    widening: float,
    tolerance: float,
) -> np.ndarray:
    log_mass = np.log(params.m * masses)
    a = _a_grid(params.gamma, -beta / params.gamma, log_mass, widening)
    out = np.empty(masses.size)
    for rows in chunk_ranges(masses.size, A_ROW_CHUNK):
        block = slice(rows.start, rows.stop)
        with np.errstate(over="ignore"):
            log_f = (
                -params.theta * pairings[block, None]
                - beta * a[None, :]
                - np.exp(params.gamma * a[None, :] + log_mass[block, None])
            )
        top = log_f.max(axis=1, keepdims=True)
        values = np.exp(log_f - top)
        tail = float(values[:, [0, -1]].max())
        if tail > tolerance:
            logger.warning("a_grid_widening", tail=tail, widening=widening, points=a.size)
            raise GridTruncationError(f"a-grid tail {tail:.3g} above {tolerance:g}", tail)
        out[block] = trapezoid(values, a, axis=1) * np.exp(top[:, 0])
    return out


def a_integrals(
    params: PolyakovParams,
    beta: float,
    masses: np.ndarray,
    pairings: np.ndarray,
    tolerance: Optional[float] = None,
) -> np.ndarray:
    """∫exp(−Θ⟨h,Q⟩ − aβ − m e^{γa}μ(M))da per sample.

    One uniform a-grid covers every sample's peak; it is widened until the
    integrand at both ends is below ``tolerance`` times each sample's maximum.
    """
    if not beta < 0:
        raise GateViolationError(f"the a-integral diverges for β = {beta:g}")
    tolerance = settings.A_GRID_TAIL_TOLERANCE if tolerance is None else tolerance
    masses = np.asarray(masses, dtype=float)
    pairings = np.asarray(pairings, dtype=float)
    retrying = Retrying(
        retry=retry_if_exception_type(GridTruncationError),
        stop=stop_after_attempt(settings.A_GRID_MAX_WIDENINGS),
        reraise=True,
    )
    for attempt in retrying:
        with attempt:
            widening = 2.0 ** (attempt.retry_state.attempt_number - 1)
            integrals = _a_integrals_on_grid(params, beta, masses, pairings, widening, tolerance)
    return integrals


def route_b_constant(s: float, gamma: float) -> float:
    """Γ(s)/γ."""
    return math.exp(gammaln(s)) / gamma


def partition_function(
    params: PolyakovParams,
    builder: LqgBuilder,
    q: QCurvature,
    count: int,
    rng: RngStream,
    level: Optional[float] = None,
    threads: Optional[int] = None,
    enforce_gate: bool = True,
) -> PartitionReport:
    """Z* by a-integration (route A) and by the Γ reduction (route B) on independent draws."""
    if builder.gamma != params.gamma or builder.flavor != params.flavor:
        raise InvalidParameterError("measure builder does not match γ and flavor of the parameters")
    beta = check_gate(params, q.total) if enforce_gate else params.beta(q.total)
    if not beta < 0:
        raise GateViolationError(f"Γ reduction needs β < 0, got {beta:g}")
    s = -beta / params.gamma
    q_coeffs = q.coefficients(builder.basis)

    draws = polyakov_samples(builder, q_coeffs, rng.child(0), count, threads)
    route_a = mc_estimate(a_integrals(params, beta, draws[:, 0], draws[:, 1]), level)
    draws = polyakov_samples(builder, q_coeffs, rng.child(1), count, threads)
    terms = gamma_reduced_terms(params, beta, draws[:, 0], draws[:, 1])
    route_b = mc_estimate(route_b_constant(s, params.gamma) * terms, level)
    overlap = ci_overlap(route_a, route_b)
    log_mc_diagnostic("partition_function", route_a=route_a.value, route_b=route_b.value)
    return PartitionReport(
        flavor=params.flavor,
        gamma=params.gamma,
        theta=params.theta,
        theta_star=params.theta_star,
        m=params.m,
        beta=beta,
        route_a=route_a,
        route_b=route_b,
        sigmas=two_sample_sigmas(route_a, route_b),
        overlap=overlap,
        verdict=Verdict.PASS if overlap else Verdict.FAIL,
    )


def gaussian_moment_check(
    theta: float, builder: LqgBuilder, q: QCurvature, count: int, rng: RngStream, sigmas: float = 4.0
) -> CheckResult:
    """E[e^{−Θ⟨h,Q⟩}] against e^{Θ²𝔨(Q,Q)/2}, the m = 0 surrogate."""
    basis = builder.basis
    q_coeffs = q.coefficients(basis)
    pairings = polyakov_samples(builder, q_coeffs, rng, count)[:, 1]
    estimate = mc_estimate(np.exp(-theta * pairings))
    target = math.exp(0.5 * theta * theta * basis.form_k(q_coeffs))
    distance = estimate.sigmas_from(target)
    return CheckResult(
        name="gaussian_moment",
        verdict=Verdict.PASS if distance <= sigmas else Verdict.FAIL,
        values={"estimate": estimate.as_row(), "target": target, "sigmas": distance},
    )
