# gmc/measure.py
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence

import numpy as np

from liouville_lab.core.config import settings
from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.logging import logger
from liouville_lab.core.parallel import chunk_ranges, exact_sum, ordered_map
from liouville_lab.core.rng import RngStream
from liouville_lab.core.stats import McEstimate, mc_estimate
from liouville_lab.core.types import Flavor, Scheme
from liouville_lab.cgf.field import SAMPLE_CHUNK, FieldSample, draw_noise, noise_to_field
from liouville_lab.cgf.mollifiers import Mollifier
from liouville_lab.spectral.basis import SpectralBasis
from liouville_lab.spectral.renormalization import r_g_field, refined_constant


def check_gamma(gamma: float, n: int) -> None:
    bound = math.sqrt(2.0 * n)
    if not abs(gamma) < bound:
        raise InvalidParameterError(
            f"γ = {gamma:g} outside (−√(2n), √(2n)) = (−{bound:.4g}, {bound:.4g}): "
            "subcritical range required"
        )


@dataclass(frozen=True)
class FlavorData:
    """r_g on the grid with the derived refined constant c_g and P_g r coefficients."""

    basis: SpectralBasis
    r_grid: np.ndarray = field(repr=False)

    @classmethod
    def constant(cls, basis: SpectralBasis, r: float) -> "FlavorData":
        return cls(basis=basis, r_grid=np.full(basis.grid.size, float(r)))

    @classmethod
    def estimate(cls, basis: SpectralBasis, **kwargs) -> "FlavorData":
        """r_g from the kernel ladder; a single ladder on homogeneous models."""
        return cls(basis=basis, r_grid=r_g_field(basis.manifold, basis.grid.points, **kwargs))

    @cached_property
    def r_coeffs(self) -> np.ndarray:
        return self.basis.project(self.r_grid)

    @cached_property
    def c_g(self) -> float:
        return refined_constant(self.basis, self.r_grid)

    @cached_property
    def pr_coeffs(self) -> np.ndarray:
        return self.basis.apply_p(self.r_coeffs)

    def log_factor(self, coeffs: np.ndarray, gamma: float, flavor: Flavor) -> np.ndarray:
        """Log of the flavor factor, broadcastable against (N, npts)."""
        half = 0.5 * gamma * gamma
        if flavor == Flavor.ADJUSTED:
            return half * self.r_grid
        shift = -0.5 * gamma * self.basis.a_n * (np.atleast_2d(coeffs) @ self.pr_coeffs)
        return half * (self.r_grid - self.c_g) + shift[:, None]


@dataclass(frozen=True)
class LqgMeasure:
    """Discrete LQG measure: one nonnegative weight per grid point."""

    flavor: Flavor
    gamma: float
    weights: np.ndarray = field(repr=False)
    ell: int
    scheme: Scheme
    provenance: Dict = field(default_factory=dict)

    @property
    def total_mass(self) -> float:
        return exact_sum(self.weights)

    def mass(self, mask: np.ndarray) -> float:
        return exact_sum(self.weights[np.asarray(mask, dtype=bool)])

    def to_rows(self, points: np.ndarray) -> List[list]:
        return [[*map(float, p), float(w)] for p, w in zip(points, self.weights)]


@dataclass(frozen=True)
class LqgBuilder:
    """Weights w_i·exp(γh_ℓ(x_i) − (γ²/2)E[h_ℓ(x_i)²])·(flavor factor) for coefficient rows."""

    mollifier: Mollifier
    gamma: float
    flavor: Flavor = Flavor.PLAIN
    flavor_data: Optional[FlavorData] = None

    def __post_init__(self):
        object.__setattr__(self, "flavor", Flavor(self.flavor))
        self.basis.spectrum.require_admissible()
        check_gamma(self.gamma, self.basis.manifold.dimension)
        if self.flavor != Flavor.PLAIN and self.flavor_data is None:
            raise InvalidParameterError(f"{self.flavor.value} flavor needs r_g data")

    @property
    def basis(self) -> SpectralBasis:
        return self.mollifier.basis

    @property
    def ell(self) -> int:
        return self.basis.ell

    def exponent(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.atleast_2d(coeffs)
        g = self.gamma
        out = g * self.mollifier.field(coeffs) - 0.5 * g * g * self.mollifier.grid_variance
        if self.flavor != Flavor.PLAIN:
            out = out + self.flavor_data.log_factor(coeffs, g, self.flavor)
        return out

    def weights(self, coeffs: np.ndarray) -> np.ndarray:
        """(N, npts) weights for coefficient rows (N, ℓ+1)."""
        return self.basis.weights * np.exp(self.exponent(coeffs))

    def build(self, sample: FieldSample) -> LqgMeasure:
        provenance = {**sample.metadata, **self.mollifier.metadata}
        return LqgMeasure(
            flavor=self.flavor,
            gamma=self.gamma,
            weights=self.weights(sample.coeffs)[0],
            ell=self.ell,
            scheme=self.mollifier.scheme,
            provenance=provenance,
        )


def build_lqg(
    sample: FieldSample,
    gamma: float,
    flavor: Flavor = Flavor.PLAIN,
    scheme: Scheme = Scheme.EIGENFUNCTION,
    flavor_data: Optional[FlavorData] = None,
    **scheme_args,
) -> LqgMeasure:
    mollifier = Mollifier(sample.basis, scheme, **scheme_args)
    return LqgBuilder(mollifier, gamma, flavor, flavor_data).build(sample)


def ensemble_masses(
    builder: LqgBuilder,
    rng: RngStream,
    count: int,
    masks: Optional[np.ndarray] = None,
    threads: Optional[int] = None,
) -> np.ndarray:
    """Total mass and subset masses of ``count`` samples: (count, 1 + nmasks).

    Samples are processed in fixed chunks, so results do not depend on the
    number of threads.
    """
    threads = settings.THREADS if threads is None else threads
    basis = builder.basis
    subsets = None if masks is None else np.atleast_2d(np.asarray(masks, dtype=float))

    def run(indices: range) -> np.ndarray:
        coeffs = noise_to_field(basis, draw_noise(rng, basis.ell, indices))
        weights = builder.weights(coeffs)
        total = weights.sum(axis=1, keepdims=True)
        if subsets is None:
            return total
        return np.concatenate([total, weights @ subsets.T], axis=1)

    blocks = ordered_map(run, chunk_ranges(count, SAMPLE_CHUNK), threads)
    width = 1 if subsets is None else 1 + subsets.shape[0]
    return np.concatenate(blocks, axis=0) if blocks else np.zeros((0, width))


def mass_moments(masses: np.ndarray, powers: Sequence[float]) -> Dict[float, McEstimate]:
    """E[μ(M)^p] for each p."""
    masses = np.asarray(masses, dtype=float).ravel()
    return {float(p): mc_estimate(masses**p) for p in powers}


def moment_ladder(masses: np.ndarray, powers: Sequence[float]) -> List[list]:
    """Rows (p, estimate, stderr, max_share); a large max_share marks a moment the sample cannot resolve."""
    masses = np.asarray(masses, dtype=float).ravel()
    rows = []
    for p, estimate in mass_moments(masses, powers).items():
        terms = masses**p
        share = float(np.max(terms) / exact_sum(terms))
        rows.append([p, estimate.value, estimate.stderr, share])
    return rows


def capped_negative_moment(masses: np.ndarray, p: float, cap: float) -> McEstimate:
    """E[min(μ(M)^p, cap)] for p < 0."""
    if p >= 0:
        raise InvalidParameterError("capped moments are for negative powers")
    if cap <= 0:
        raise InvalidParameterError("cap must be positive")
    terms = np.asarray(masses, dtype=float).ravel() ** p
    hits = int(np.sum(terms > cap))
    if hits:
        logger.info("negative_moment_capped", p=p, cap=cap, hits=hits)
    return mc_estimate(np.minimum(terms, cap))


def ensemble_summary(
    builder: LqgBuilder, masses: np.ndarray, powers: Sequence[float], cap: float = 1e6
) -> Dict:
    """Ensemble JSON record; negative powers go through ``capped_negative_moment``."""
    masses = np.asarray(masses, dtype=float).ravel()
    moments = {}
    for p, value, _, _ in moment_ladder(masses, [p for p in powers if p >= 0]):
        moments[f"{p:g}"] = value
    for p in (p for p in powers if p < 0):
        moments[f"{p:g}"] = capped_negative_moment(masses, p, cap).value
    return {
        "gamma": builder.gamma,
        "ell": builder.basis.ell,
        "scheme": builder.mollifier.scheme.value,
        "flavor": builder.flavor.value,
        "mass_mean": float(np.mean(masses)),
        "mass_var": float(np.var(masses, ddof=1)),
        "moments": moments,
    }
