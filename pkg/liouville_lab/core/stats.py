# core/stats.py
import math
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel
from scipy.stats import norm

from liouville_lab.core.config import settings
from liouville_lab.core.parallel import exact_mean, exact_sum


class McEstimate(BaseModel):
    """Monte Carlo estimate with a normal-approximation confidence interval"""

    value: float
    stderr: float
    n: int
    level: float = 0.95

    @property
    def half_width(self) -> float:
        return z_value(self.level) * self.stderr

    @property
    def ci_low(self) -> float:
        return self.value - self.half_width

    @property
    def ci_high(self) -> float:
        return self.value + self.half_width

    def contains(self, target: float) -> bool:
        return self.ci_low <= target <= self.ci_high

    def sigmas_from(self, target: float) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.value == target else math.inf
        return abs(self.value - target) / self.stderr

    def as_row(self) -> dict:
        return {
            "value": self.value,
            "stderr": self.stderr,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n": self.n,
        }


def z_value(level: float) -> float:
    return float(norm.ppf(0.5 + level / 2.0))


def mc_estimate(samples: Sequence[float], level: Optional[float] = None) -> McEstimate:
    arr = np.asarray(samples, dtype=float).ravel()
    level = settings.CI_LEVEL if level is None else level
    mean = exact_mean(arr)
    if arr.size < 2:
        return McEstimate(value=mean, stderr=math.inf, n=int(arr.size), level=level)
    var = exact_sum((arr - mean) ** 2) / (arr.size - 1)
    return McEstimate(
        value=mean, stderr=math.sqrt(var / arr.size), n=int(arr.size), level=level
    )


def variance_estimate(samples: Sequence[float], level: Optional[float] = None) -> McEstimate:
    """Unbiased sample variance with a fourth-moment standard error."""
    arr = np.asarray(samples, dtype=float).ravel()
    level = settings.CI_LEVEL if level is None else level
    n = arr.size
    mean = exact_mean(arr)
    centered = arr - mean
    var = exact_sum(centered**2) / (n - 1)
    m4 = exact_sum(centered**4) / n
    stderr = math.sqrt(max(m4 - var**2, 0.0) / n)
    return McEstimate(value=var, stderr=stderr, n=int(n), level=level)


def covariance_estimate(
    a: Sequence[float], b: Sequence[float], level: Optional[float] = None
) -> McEstimate:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    products = (a - exact_mean(a)) * (b - exact_mean(b))
    return mc_estimate(products * a.size / (a.size - 1), level)


def ratio_estimate(
    numerator: Sequence[float], denominator: Sequence[float], level: Optional[float] = None
) -> McEstimate:
    """Ratio of means with a delta-method standard error (paired samples)."""
    num = np.asarray(numerator, dtype=float).ravel()
    den = np.asarray(denominator, dtype=float).ravel()
    level = settings.CI_LEVEL if level is None else level
    n = num.size
    mean_num, mean_den = exact_mean(num), exact_mean(den)
    ratio = mean_num / mean_den
    residual = num - ratio * den
    var = exact_sum((residual - exact_mean(residual)) ** 2) / max(n - 1, 1)
    stderr = math.sqrt(var / n) / abs(mean_den)
    return McEstimate(value=ratio, stderr=stderr, n=int(n), level=level)


def ci_overlap(a: McEstimate, b: McEstimate) -> bool:
    return a.ci_low <= b.ci_high and b.ci_low <= a.ci_high


def two_sample_sigmas(a: McEstimate, b: McEstimate) -> float:
    scale = math.sqrt(a.stderr**2 + b.stderr**2)
    if scale == 0.0:
        return 0.0 if a.value == b.value else math.inf
    return abs(a.value - b.value) / scale


def effective_sample_size(weights: Sequence[float]) -> float:
    w = np.asarray(weights, dtype=float).ravel()
    total = exact_sum(w)
    squares = exact_sum(w**2)
    return total**2 / squares if squares > 0 else 0.0


def required_samples(estimate: McEstimate, target_half_width: float) -> int:
    """Sample count at which the CI half width would reach the target."""
    if estimate.stderr == 0.0 or not math.isfinite(estimate.stderr):
        return estimate.n
    sd = estimate.stderr * math.sqrt(estimate.n)
    return int(math.ceil((z_value(estimate.level) * sd / target_half_width) ** 2))
