# spectral/renormalization.py
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.stats import linregress

from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.logging import logger
from liouville_lab.core.types import CheckResult, KernelKind, Verdict
from liouville_lab.manifolds.base import ManifoldModel
from liouville_lab.manifolds.product import ProductSurfaces
from liouville_lab.manifolds.sphere import Sphere
from liouville_lab.manifolds.torus import FlatTorus
from liouville_lab.spectral.basis import SpectralBasis
from liouville_lab.spectral.conformal import ConformalFactor, conformal_length
from liouville_lab.spectral.gjms import GjmsSpectrum, gjms_spectrum
from liouville_lab.spectral.kernels import KernelEvaluator, kernel_cutoff

LADDER_TOLERANCE = 1e-4


class REstimate(BaseModel):
    """Extrapolated finite part of k_g on the diagonal at one point"""

    value: float
    error: float
    converged: bool
    ladder: List[List[float]] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)


def _length_scale(manifold: ManifoldModel) -> float:
    if isinstance(manifold, Sphere):
        return manifold.radius
    if isinstance(manifold, FlatTorus):
        return float(np.max(manifold.sides)) / (2.0 * math.pi)
    if isinstance(manifold, ProductSurfaces):
        return max(f.radius for f in manifold.factors)
    return manifold.diameter / math.pi


def _cutoff_cap(manifold: ManifoldModel, max_cutoff: int) -> int:
    # keeps the block count of one spectrum in the low hundreds of thousands
    if isinstance(manifold, FlatTorus):
        return min(max_cutoff, 300 if manifold.dimension == 2 else 10)
    if isinstance(manifold, ProductSurfaces):
        return min(max_cutoff, 150)
    return max_cutoff


def distance_ladder(d0: float, steps: int) -> List[float]:
    return [d0 * 2.0**-m for m in range(steps)]


def aitken_limit(sequence: Sequence[float]) -> Tuple[float, float]:
    """Aitken Δ² limit of the last three terms with an error estimate.

    Falls back to the last term when the differences are not geometric.
    """
    s = np.asarray(sequence, dtype=float)
    if s.size == 1:
        return float(s[0]), math.inf
    last_step = s[-1] - s[-2]
    if s.size == 2:
        return float(s[-1]), abs(last_step)
    previous = s[-2] - s[-3]
    denominator = last_step - previous
    value = s[-1]
    if previous != 0.0 and 0.0 < last_step / previous < 0.9 and abs(denominator) > 1e-14:
        value = s[-1] - last_step * last_step / denominator
    return float(value), float(abs(value - s[-1]) + abs(last_step))


def r_g_estimate(
    manifold: ManifoldModel,
    x: np.ndarray,
    d0: Optional[float] = None,
    steps: int = 5,
    tolerance: float = LADDER_TOLERANCE,
    max_cutoff: int = 40000,
    convergence: float = 5e-3,
    factor: Optional[ConformalFactor] = None,
    spectrum: Optional[GjmsSpectrum] = None,
) -> REstimate:
    """Estimate r(x) = lim_{y→x} [k(x,y) − log(1/d(x,y))] on a shrinking ladder.

    The truncation grows as the distance shrinks so the spectral tail stays
    below ``tolerance``. With a ``factor`` the metric is g' = e^{2φ}g: the
    kernel is the transformed one and distances are g'-lengths.
    """
    if steps < 1:
        raise InvalidParameterError("ladder needs at least one step")
    scale = _length_scale(manifold)
    d0 = 0.2 * scale if d0 is None else d0
    distances = distance_ladder(d0, steps)
    cap = _cutoff_cap(manifold, max_cutoff)
    cutoffs = [min(kernel_cutoff(d, tolerance, scale), cap) for d in distances]
    notes = []
    if max(kernel_cutoff(d, tolerance, scale) for d in distances) > cap:
        notes.append(f"cutoff capped at {cap}; the smallest rungs carry extra truncation error")
    if spectrum is None:
        spectrum = gjms_spectrum(manifold, max(cutoffs))
    spectrum.require_admissible()
    x = np.asarray(x, dtype=float)
    residuals, ladder = [], []
    for d, cutoff in zip(distances, cutoffs):
        ell = spectrum.full_block_truncation(cutoff)
        y = manifold.point_near(x, d)
        evaluator = KernelEvaluator(spectrum, KernelKind.NORMALIZED, ell)
        if factor is None:
            value, dist = float(evaluator(x, y)[0]), d
        else:
            value = float(factor.kernel(evaluator, x, y)[0])
            dist = conformal_length(factor, x, y)
        residual = value - math.log(1.0 / dist)
        residuals.append(residual)
        ladder.append([dist, float(cutoff), residual])
    value, error = aitken_limit(residuals)
    converged = error < convergence
    if not converged:
        logger.warning("r_g_ladder_not_converged", manifold=manifold.name, error=error)
        notes.append("ladder did not converge")
    return REstimate(value=value, error=error, converged=converged, ladder=ladder, notes=notes)


def r_g_field(manifold: ManifoldModel, points: np.ndarray, **kwargs) -> np.ndarray:
    """r_g at every point; homogeneous models need a single estimate."""
    points = np.atleast_2d(points)
    if manifold.is_homogeneous:
        estimate = r_g_estimate(manifold, manifold.reference_point(), **kwargs)
        return np.full(points.shape[0], estimate.value)
    return np.array([r_g_estimate(manifold, p, **kwargs).value for p in points])


def refined_constant(basis: SpectralBasis, r_values: np.ndarray) -> float:
    """c_g = ⟨r⟩_g + (a_n/4)·𝔭(r, r), r given on the grid of ``basis``."""
    coeffs = basis.project(r_values)
    return basis.mean(coeffs) + 0.25 * basis.a_n * basis.form_p(coeffs)


def refined_kernel(
    evaluator: KernelEvaluator,
    x: np.ndarray,
    y: np.ndarray,
    r_x: np.ndarray,
    r_y: np.ndarray,
    c_g: float,
) -> np.ndarray:
    """k̃(x,y) = k(x,y) − ½r(x) − ½r(y) + c_g."""
    return evaluator(x, y) - 0.5 * np.asarray(r_x) - 0.5 * np.asarray(r_y) + c_g


def r_conformal_check(
    factor: ConformalFactor,
    points: np.ndarray,
    steps: int = 5,
    tolerance: float = 2e-2,
) -> CheckResult:
    """r_{g'} − r_g against φ − φ̄ at the given points, each side estimated separately."""
    manifold = factor.basis.manifold
    scale = _length_scale(manifold)
    top = min(
        kernel_cutoff(distance_ladder(0.2 * scale, steps)[-1], LADDER_TOLERANCE, scale),
        _cutoff_cap(manifold, 40000),
    )
    spectrum = gjms_spectrum(manifold, top)
    points = np.atleast_2d(points)
    phi = factor.phi_at(points)
    phi_bar = factor.phi_bar_at(points)
    rows, worst = [], 0.0
    for p, f, fb in zip(points, phi, phi_bar):
        base = r_g_estimate(manifold, p, steps=steps, spectrum=spectrum)
        shifted = r_g_estimate(manifold, p, steps=steps, spectrum=spectrum, factor=factor)
        diff = shifted.value - base.value
        predicted = float(f - fb)
        worst = max(worst, abs(diff - predicted))
        rows.append([*map(float, p), base.value, shifted.value, diff, predicted])
    return CheckResult(
        name="r_conformal_shift",
        verdict=Verdict.PASS if worst < tolerance else Verdict.FAIL,
        values={"rows": rows, "max_error": worst},
    )


class UniformIntegrabilityFit(BaseModel):
    theta: float
    constant: float
    scale: float
    pairs: int


def uniform_integrability_fit(
    evaluator: KernelEvaluator, xs: np.ndarray, ys: np.ndarray
) -> UniformIntegrabilityFit:
    """Fit k_ℓ(x,y) ≤ θ·log(1/(d ∨ 1/c_ℓ)) + C over sampled pairs.

    c_ℓ is the frequency √λ of the last retained mode; θ is the regression
    slope and C the smallest constant making the bound hold on the sample.
    """
    spectrum = evaluator.spectrum
    c_ell = math.sqrt(float(spectrum.block_lambda[spectrum.blocks_needed(evaluator.ell) - 1]))
    d = spectrum.manifold.distance(np.atleast_2d(xs), np.atleast_2d(ys))
    log_term = np.log(1.0 / np.maximum(d, 1.0 / c_ell))
    values = evaluator(xs, ys)
    theta = float(linregress(log_term, values).slope)
    constant = float(np.max(values - theta * log_term))
    return UniformIntegrabilityFit(theta=theta, constant=constant, scale=c_ell, pairs=int(d.size))
