# dynamics/operator.py
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, eigh

from liouville_lab.core.config import settings
from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.logging import log_mc_diagnostic, logger
from liouville_lab.core.parallel import chunk_ranges, ordered_map
from liouville_lab.core.rng import RngStream
from liouville_lab.core.types import CheckResult, Verdict
from liouville_lab.cgf.field import SAMPLE_CHUNK, draw_noise, noise_to_field
from liouville_lab.gmc.conformal import ConformalMeasure
from liouville_lab.gmc.measure import LqgBuilder, LqgMeasure
from liouville_lab.spectral.basis import SpectralBasis
from liouville_lab.spectral.conformal import ConformalFactor

REGULARIZATION = 1e-10


@dataclass(frozen=True)
class RandomGjmsOperator:
    """Galerkin P^h on span{ψ_0..ψ_ℓ}: ν·u = θ·G·u with G the μ^h Gram matrix.

    ``vectors`` are G-orthonormal. The constant carries θ = 0; the grounded
    spectrum is ``theta[1:]``.
    """

    stiffness: np.ndarray = field(repr=False)
    gram: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    volume: float
    regularization: float = 0.0

    @property
    def ell(self) -> int:
        return int(self.stiffness.size - 1)

    @property
    def grounded_spectrum(self) -> np.ndarray:
        return self.theta[1:]

    def energy(self, u: np.ndarray) -> float:
        """½𝔭(u, u)."""
        u = np.asarray(u, dtype=float)
        return 0.5 * float(np.sum(self.stiffness * u * u))

    def dissipation(self, u: np.ndarray) -> float:
        """‖P^h u‖²_{L²(μ)} = (νu)ᵀG⁻¹(νu)."""
        pu = self.vectors.T @ (self.stiffness * np.asarray(u, dtype=float))
        return float(pu @ pu)

    def mass(self, u: np.ndarray) -> float:
        """∫u dμ^h."""
        return math.sqrt(self.volume) * float((self.gram @ np.asarray(u, dtype=float))[0])

    def spectrum_rows(self) -> List[list]:
        return [[i, float(t)] for i, t in enumerate(self.grounded_spectrum)]


def generalized_eigh(stiffness: np.ndarray, gram: np.ndarray) -> tuple:
    """(θ, V, ε) for diag(ν)V = GVθ, regularizing G by ε·Id when it is singular."""
    s = np.diag(stiffness)
    try:
        theta, vectors = eigh(s, gram)
        return theta, vectors, 0.0
    except LinAlgError:
        eps = REGULARIZATION * max(float(np.max(np.diag(gram))), 1.0)
        logger.warning("gram_regularized", epsilon=eps)
        theta, vectors = eigh(s, gram + eps * np.eye(gram.shape[0]))
        return theta, vectors, eps


def random_gjms_assemble(
    basis: SpectralBasis, measure: LqgMeasure, ell: Optional[int] = None
) -> RandomGjmsOperator:
    """Stiffness diag(ν_j) and Gram ∫ψ_iψ_j dμ^h for the first ℓ grounded modes."""
    ell = basis.ell if ell is None else int(ell)
    if not 1 <= ell <= basis.ell:
        raise InvalidParameterError(f"ℓ = {ell} outside 1..{basis.ell}")
    basis.spectrum.require_admissible()
    psi = basis.psi[:, : ell + 1]
    gram = psi.T @ (psi * measure.weights[:, None])
    gram = 0.5 * (gram + gram.T)
    stiffness = basis.nu[: ell + 1].copy()
    theta, vectors, eps = generalized_eigh(stiffness, gram)
    return RandomGjmsOperator(
        stiffness=stiffness,
        gram=gram,
        theta=theta,
        vectors=vectors,
        volume=basis.volume,
        regularization=eps,
    )


def copoly_heat_flow(op: RandomGjmsOperator, u0: np.ndarray, t: float) -> np.ndarray:
    """e^{−tP^h}u₀ = V e^{−tθ} Vᵀ G u₀ in coefficients."""
    if t < 0:
        raise InvalidParameterError("heat flow needs t ≥ 0")
    u0 = np.asarray(u0, dtype=float)
    modal = op.vectors.T @ (op.gram @ u0)
    return op.vectors @ (np.exp(-t * np.maximum(op.theta, 0.0)) * modal)


def energy_dissipation_check(
    op: RandomGjmsOperator,
    u0: np.ndarray,
    times: Sequence[float],
    step: float = 1e-5,
    tolerance: float = 1e-4,
) -> CheckResult:
    """d/dt ½𝔭(u_t) = −‖P^h u_t‖² by central differences, and mass conservation."""
    times = sorted(float(t) for t in times)
    if not times or times[0] <= step:
        raise InvalidParameterError(f"dissipation times must exceed the step {step:g}")
    rows, worst = [], 0.0
    mass0 = op.mass(u0)
    mass_drift = 0.0
    for t in times:
        u = copoly_heat_flow(op, u0, t)
        plus = op.energy(copoly_heat_flow(op, u0, t + step))
        minus = op.energy(copoly_heat_flow(op, u0, t - step))
        slope = (plus - minus) / (2.0 * step)
        target = -op.dissipation(u)
        error = abs(slope - target) / max(abs(target), 1e-300)
        worst = max(worst, error)
        mass_drift = max(mass_drift, abs(op.mass(u) - mass0))
        rows.append([float(t), op.energy(u), slope, target, error])
    energies = [r[1] for r in rows]
    monotone = bool(np.all(np.diff(energies) <= 1e-14 * max(energies[0], 1.0)))
    ok = worst < tolerance and monotone
    return CheckResult(
        name="energy_dissipation",
        verdict=Verdict.PASS if ok else Verdict.FAIL,
        values={"rows": rows, "max_relative_error": worst, "monotone": monotone,
                "mass_drift": mass_drift},
    )


def nonnegativity_check(
    builder: LqgBuilder,
    count: int,
    rng: RngStream,
    threads: Optional[int] = None,
    tolerance: float = 1e-9,
) -> CheckResult:
    """Smallest grounded generalized eigenvalue over ``count`` field samples."""
    threads = settings.THREADS if threads is None else threads
    basis = builder.basis

    def run(indices: range) -> List[float]:
        coeffs = noise_to_field(basis, draw_noise(rng, basis.ell, indices))
        weights = builder.weights(coeffs)
        out = []
        for w in weights:
            gram = basis.psi.T @ (basis.psi * w[:, None])
            theta, _, _ = generalized_eigh(basis.nu, 0.5 * (gram + gram.T))
            out.append(float(theta[1:].min() / theta.max()))
        return out

    minima = [m for block in ordered_map(run, chunk_ranges(count, SAMPLE_CHUNK), threads)
              for m in block]
    worst = min(minima)
    log_mc_diagnostic("random_operator_nonnegative", samples=count, min_relative=worst)
    return CheckResult(
        name="random_operator_nonnegative",
        verdict=Verdict.PASS if worst > -tolerance else Verdict.FAIL,
        values={"min_relative_theta": worst, "samples": count},
    )


def conformal_form_check(factor: ConformalFactor, tolerance: float = 1e-10) -> CheckResult:
    """∫ψ_j P_{g'}ψ_k dvol_{g'} against ν_kδ_jk."""
    basis = factor.basis
    columns = np.stack([factor.apply_p(e) for e in np.eye(basis.size)], axis=1)
    form = basis.psi.T @ (columns * factor.weights_prime[:, None])
    return _form_result("conformal_form", form, basis.nu, tolerance)


def random_conformal_form_check(
    transform: ConformalMeasure, coeffs: np.ndarray, tolerance: float = 1e-10
) -> CheckResult:
    """𝔭 assembled with P^{h'}_{g'} = e^{−F}P^h_g against μ' = e^F μ matches 𝔭 under g.

    P^h_g ψ_k is ν_kψ_k·dvol/dμ^h pointwise on the grid.
    """
    basis = transform.builder.basis
    coeffs = np.atleast_2d(coeffs)
    weights = transform.builder.weights(coeffs)[0]
    prime_weights = transform.weights(coeffs)[0]
    log_factor = transform.log_factor(coeffs)[0]
    operator = basis.psi * basis.nu * (basis.weights / weights)[:, None]
    operator = operator * np.exp(-log_factor)[:, None]
    form = basis.psi.T @ (operator * prime_weights[:, None])
    return _form_result("random_conformal_form", form, basis.nu, tolerance)


def _form_result(name: str, form: np.ndarray, nu: np.ndarray, tolerance: float) -> CheckResult:
    target = np.diag(nu)
    scale = max(float(np.max(nu)), 1.0)
    discrepancy = float(np.max(np.abs(form - target))) / scale
    return CheckResult(
        name=name,
        verdict=Verdict.PASS if discrepancy < tolerance else Verdict.FAIL,
        values={"max_relative_discrepancy": discrepancy},
    )
