# gmc/scaling.py
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel
from scipy.stats import linregress

from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.logging import log_mc_diagnostic
from liouville_lab.core.rng import RngStream
from liouville_lab.core.types import Verdict
from liouville_lab.gmc.measure import LqgBuilder, ensemble_masses

SLOPE_TOLERANCE = 0.05


class ScalingReport(BaseModel):
    radii: List[float]
    mean_mass: List[float]
    quantile_mass: List[List[float]]
    quantiles: List[float]
    mean_slope: float
    quantile_slopes: List[float]
    expected_slope: int
    monotone_fraction: float
    slope_tolerance: float
    verdict: Verdict


def ball_masks(builder: LqgBuilder, centers: np.ndarray, radii: Sequence[float]) -> np.ndarray:
    """Indicator rows ordered center-major: row c·len(radii) + k is B_{r_k}(x_c)."""
    grid = builder.basis.grid
    manifold = builder.basis.manifold
    if min(radii) < grid.spacing:
        raise InvalidParameterError(
            f"radius {min(radii):g} below the grid spacing {grid.spacing:.4g}"
        )
    return np.stack(
        [manifold.ball_mask(grid, c, r) for c in np.atleast_2d(centers) for r in radii]
    ).astype(float)


def ball_scaling_stats(
    builder: LqgBuilder,
    centers: np.ndarray,
    radii: Sequence[float],
    count: int,
    rng: RngStream,
    quantiles: Sequence[float] = (0.5, 0.9, 0.99),
    threads: Optional[int] = None,
    slope_tolerance: Optional[float] = None,
) -> ScalingReport:
    """Log–log slopes of μ(B_r(x)) over a radius ladder, pooled over centers and samples.

    The mean slope must be within ``slope_tolerance`` (default 5% of n) of n
    and every ball ladder nested; at γ = 0 each quantile slope must be too.
    """
    radii = sorted(float(r) for r in radii)
    centers = np.atleast_2d(centers)
    masks = ball_masks(builder, centers, radii)
    masses = ensemble_masses(builder, rng, count, masks, threads)[:, 1:]
    masses = masses.reshape(count, centers.shape[0], len(radii))
    pooled = masses.reshape(-1, len(radii))
    log_r = np.log(radii)
    mean_mass = pooled.mean(axis=0)
    table = np.quantile(pooled, quantiles, axis=0)
    quantile_slopes = [float(linregress(log_r, np.log(row)).slope) for row in table]
    monotone_fraction = float(np.mean(np.all(np.diff(pooled, axis=1) >= 0, axis=1)))
    mean_slope = float(linregress(log_r, np.log(mean_mass)).slope)

    n = builder.basis.manifold.dimension
    tolerance = SLOPE_TOLERANCE * n if slope_tolerance is None else slope_tolerance
    slopes = [mean_slope, *quantile_slopes] if builder.gamma == 0 else [mean_slope]
    passed = monotone_fraction == 1.0 and all(abs(s - n) <= tolerance for s in slopes)
    log_mc_diagnostic(
        "ball_scaling", gamma=builder.gamma, mean_slope=mean_slope, monotone=monotone_fraction
    )
    return ScalingReport(
        radii=radii,
        mean_mass=mean_mass.tolist(),
        quantile_mass=table.tolist(),
        quantiles=list(quantiles),
        mean_slope=mean_slope,
        quantile_slopes=quantile_slopes,
        expected_slope=n,
        monotone_fraction=monotone_fraction,
        slope_tolerance=tolerance,
        verdict=Verdict.PASS if passed else Verdict.FAIL,
    )
