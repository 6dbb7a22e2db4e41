# spectral/kernels.py
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from liouville_lab.core.config import settings
from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.logging import logger
from liouville_lab.core.types import CheckResult, KernelKind, Verdict
from liouville_lab.spectral.gjms import GjmsSpectrum, gjms_spectrum

_GROUNDED = {KernelKind.COPOLY_GREEN, KernelKind.NORMALIZED, KernelKind.GROUNDED_RESOLVENT,
             KernelKind.GROUNDED_HEAT}


def kernel_cutoff(distance: float, tolerance: Optional[float] = None, scale: float = 1.0) -> int:
    """Mode cutoff L with truncation error below ``tolerance`` at ``distance``.

    Spectral sums of the log kernel converge like (L·d)^{-3/2} at fixed d.
    """
    tolerance = settings.KERNEL_TAIL_TOLERANCE if tolerance is None else tolerance
    if distance <= 0:
        raise InvalidParameterError("kernel cutoff needs a positive distance")
    c = (0.3 / tolerance) ** (2.0 / 3.0)
    return max(int(math.ceil(c * scale / distance)), 1)


class KernelEvaluator:
    """Truncated spectral sum Σ_j w(ν_j or λ_j) ψ_j(x)ψ_j(y) for one kernel kind.

    ``ell`` counts grounded basis functions; kinds that keep the constant mode
    add it on top. Whole blocks are summed through the zonal functions of the
    model, a partially included block through its explicit members.
    """

    def __init__(
        self,
        spectrum: GjmsSpectrum,
        kind: KernelKind,
        ell: Optional[int] = None,
        s: float = 1.0,
        alpha: float = 0.0,
        t: Optional[float] = None,
    ):
        self.spectrum = spectrum
        self.kind = KernelKind(kind)
        self.ell = spectrum.total_modes if ell is None else int(ell)
        spectrum.check_truncation(self.ell)
        self.s, self.alpha, self.t = float(s), float(alpha), t
        self._validate()
        self.full_blocks, self.partial = spectrum.split_truncation(self.ell)

    def _validate(self) -> None:
        kind = self.kind
        if kind in (KernelKind.COPOLY_GREEN, KernelKind.NORMALIZED):
            self.spectrum.require_admissible()
        if kind in (KernelKind.RESOLVENT, KernelKind.GROUNDED_RESOLVENT):
            if self.s <= 0:
                raise InvalidParameterError("resolvent order s must be positive")
            if kind == KernelKind.RESOLVENT and self.alpha <= 0:
                raise InvalidParameterError("ungrounded resolvent needs α > 0")
            lambda_1 = self.spectrum.base.lambda_1
            if kind == KernelKind.GROUNDED_RESOLVENT and self.alpha <= -lambda_1:
                raise InvalidParameterError(f"grounded resolvent needs α > −λ₁ = {-lambda_1:g}")
        if kind in (KernelKind.HEAT, KernelKind.GROUNDED_HEAT):
            if self.t is None or self.t <= 0:
                raise InvalidParameterError("heat kernel needs t > 0")

    @property
    def grounded(self) -> bool:
        return self.kind in _GROUNDED

    @property
    def log_coefficient(self) -> float:
        """Coefficient of log(1/d) in the singularity of the kernel."""
        return 1.0 if self.kind == KernelKind.NORMALIZED else self.spectrum.a_n

    def rates(self, blocks: np.ndarray) -> np.ndarray:
        """α + λ for resolvents, λ for heat kernels, ν otherwise."""
        if self.kind in (KernelKind.RESOLVENT, KernelKind.GROUNDED_RESOLVENT):
            return self.alpha + self.spectrum.block_lambda[blocks]
        if self.kind in (KernelKind.HEAT, KernelKind.GROUNDED_HEAT):
            return self.spectrum.block_lambda[blocks]
        return self.spectrum.block_nu[blocks]

    def weight(self, rates: np.ndarray) -> np.ndarray:
        rates = np.asarray(rates, dtype=float)
        if self.kind in (KernelKind.RESOLVENT, KernelKind.GROUNDED_RESOLVENT):
            return rates ** (-self.s)
        if self.kind in (KernelKind.HEAT, KernelKind.GROUNDED_HEAT):
            return np.exp(-rates * self.t)
        out = 1.0 / rates
        return out / self.spectrum.a_n if self.kind == KernelKind.NORMALIZED else out

    def included_blocks(self) -> np.ndarray:
        start = 1 if self.grounded else 0
        return np.arange(start, self.full_blocks)

    def terms(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Per-term products (npairs, nterms) and the block index of each term."""
        x, y = np.atleast_2d(x), np.atleast_2d(y)
        npairs = max(x.shape[0], y.shape[0])
        blocks = self.included_blocks()
        parts, index = [], []
        if blocks.size:
            laplace = [self.spectrum.blocks[b].laplace for b in blocks]
            parts.append(np.broadcast_to(
                self.spectrum.manifold.zonal(laplace, x, y), (npairs, blocks.size)
            ))
            index.append(blocks)
        if self.partial:
            b = self.full_blocks
            block = [self.spectrum.blocks[b].laplace]
            fx = self.spectrum.manifold.eigenfunctions(block, x)[:, : self.partial]
            fy = self.spectrum.manifold.eigenfunctions(block, y)[:, : self.partial]
            parts.append(np.broadcast_to(fx * fy, (npairs, self.partial)))
            index.append(np.full(self.partial, b))
        if not parts:
            return np.zeros((npairs, 0)), np.zeros(0, dtype=int)
        return np.concatenate(parts, axis=1), np.concatenate(index)

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        values, blocks = self.terms(x, y)
        return values @ self.weight(self.rates(blocks))

    def diagonal(self, x: np.ndarray) -> np.ndarray:
        return self(x, x)

    def matrix(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Kernel matrix (nx, ny) through explicit eigenfunctions."""
        fx = self.spectrum.eigenfunctions(xs, self.ell)
        fy = self.spectrum.eigenfunctions(ys, self.ell)
        blocks = self.spectrum.block_index(self.ell)
        keep = blocks > 0 if self.grounded else np.ones(blocks.size, dtype=bool)
        w = np.zeros(blocks.size)
        w[keep] = self.weight(self.rates(blocks[keep]))
        return (fx * w) @ fy.T


def green_kernel_eval(
    spectrum: GjmsSpectrum,
    x: np.ndarray,
    y: np.ndarray,
    ell: Optional[int] = None,
    normalized: bool = False,
) -> np.ndarray:
    """K_{g,ℓ}(x, y) or k_{g,ℓ} = K_{g,ℓ}/a_n."""
    kind = KernelKind.NORMALIZED if normalized else KernelKind.COPOLY_GREEN
    return KernelEvaluator(spectrum, kind, ell)(x, y)


def resolvent_kernel_eval(
    spectrum: GjmsSpectrum,
    s: float,
    alpha: float,
    x: np.ndarray,
    y: np.ndarray,
    ell: Optional[int] = None,
    grounded: bool = True,
) -> np.ndarray:
    kind = KernelKind.GROUNDED_RESOLVENT if grounded else KernelKind.RESOLVENT
    return KernelEvaluator(spectrum, kind, ell, s=s, alpha=alpha)(x, y)


def heat_kernel_eval(
    spectrum: GjmsSpectrum,
    t: float,
    x: np.ndarray,
    y: np.ndarray,
    ell: Optional[int] = None,
    grounded: bool = False,
) -> np.ndarray:
    kind = KernelKind.GROUNDED_HEAT if grounded else KernelKind.HEAT
    return KernelEvaluator(spectrum, kind, ell, t=t)(x, y)


def resolvent_by_heat_integral(
    spectrum: GjmsSpectrum,
    s: float,
    alpha: float,
    x: np.ndarray,
    y: np.ndarray,
    ell: Optional[int] = None,
    grounded: bool = True,
) -> np.ndarray:
    """(1/Γ(s)) ∫_0^∞ e^{-αt} t^{s-1} p_t(x, y) dt by adaptive quadrature in log t."""
    kind = KernelKind.GROUNDED_RESOLVENT if grounded else KernelKind.RESOLVENT
    evaluator = KernelEvaluator(spectrum, kind, ell, s=s, alpha=alpha)
    values, blocks = evaluator.terms(x, y)
    rates = evaluator.rates(blocks)
    t_lo = 1e-12
    t_hi = 60.0 / float(np.min(rates))
    out = np.empty(values.shape[0])
    for i, row in enumerate(values):

        def integrand(u: float, row=row) -> float:
            t = math.exp(u)
            return t**s * float(np.dot(row, np.exp(-rates * t)))

        total, _ = quad(integrand, math.log(t_lo), math.log(t_hi),
                        limit=500, epsabs=1e-13, epsrel=1e-11)
        out[i] = total / gamma_fn(s)
    return out


def heat_lower_bound(n: int, t: float, d: float, a: float) -> float:
    """(4πt)^{-n/2} (ad/sinh ad)^{(n-1)/2} e^{-d²/4t} e^{-λ_* t} for Ric ≥ -(n-1)a²g."""
    ad = a * d
    shape = 1.0 if ad == 0 else (ad / math.sinh(ad)) ** ((n - 1) / 2.0)
    lam_star = a * a / 6.0 if n == 2 else (n - 1) ** 2 * a * a / 4.0
    return (4.0 * math.pi * t) ** (-n / 2.0) * shape * math.exp(-d * d / (4.0 * t) - lam_star * t)


def heat_lower_bound_check(
    spectrum: GjmsSpectrum,
    times: Sequence[float],
    distances: Sequence[float],
    a: float,
    ell: Optional[int] = None,
) -> CheckResult:
    """Compare the spectral heat kernel with the curvature lower bound on a (t, d) grid."""
    manifold = spectrum.manifold
    x = manifold.reference_point()
    rows: List[list] = []
    for t in times:
        evaluator = KernelEvaluator(spectrum, KernelKind.HEAT, ell, t=t)
        tail = _heat_tail(spectrum, evaluator, t)
        for d in distances:
            y = manifold.point_near(x, d)
            value = float(evaluator(x, y)[0])
            bound = heat_lower_bound(manifold.dimension, t, d, a)
            rows.append([t, d, value, bound, tail, value >= bound])
    ok = all(r[-1] for r in rows)
    return CheckResult(
        name="heat_lower_bound",
        verdict=Verdict.PASS if ok else Verdict.FAIL,
        values={"rows": rows, "a": a},
    )


def _heat_tail(spectrum: GjmsSpectrum, evaluator: KernelEvaluator, t: float) -> float:
    """Bound on the omitted diagonal mass Σ_{excluded} mult · e^{-λt} / vol at the next block."""
    nxt = evaluator.full_blocks
    if nxt >= len(spectrum.blocks):
        return 0.0
    lam = spectrum.block_lambda[nxt]
    return float(spectrum.block_multiplicity[nxt] * math.exp(-lam * t) / spectrum.manifold.volume)


def log_residual_profile(
    evaluator: KernelEvaluator, x: np.ndarray, distances: Sequence[float]
) -> List[list]:
    """Rows (d, kernel, kernel − c·log(1/d)) along a distance ladder from ``x``."""
    manifold = evaluator.spectrum.manifold
    ys = np.stack([manifold.point_near(x, d) for d in distances])
    values = evaluator(x, ys)
    c = evaluator.log_coefficient
    return [[float(d), float(v), float(v - c * math.log(1.0 / d))] for d, v in zip(distances, values)]


def log_divergence_check(
    manifold,
    cutoff: int,
    d_min: float = 0.05,
    points: int = 50,
    threshold: float = 0.05,
) -> CheckResult:
    """Sup of |k_g − log(1/d)| over [d_min, diam/2] at a cutoff and at twice that cutoff."""
    distances = np.geomspace(d_min, manifold.diameter / 2.0, points)
    x = manifold.reference_point()
    spectrum = gjms_spectrum(manifold, 2 * cutoff)
    sups, profiles = [], []
    for level in (cutoff, 2 * cutoff):
        ell = spectrum.full_block_truncation(level)
        evaluator = KernelEvaluator(spectrum, KernelKind.NORMALIZED, ell)
        rows = log_residual_profile(evaluator, x, distances)
        profiles.append(rows)
        sups.append(max(abs(r[2]) for r in rows))
    change = abs(sups[1] - sups[0]) / max(sups[1], 1e-300)
    logger.info("log_divergence_check", manifold=manifold.name, sups=sups, change=change)
    return CheckResult(
        name="log_divergence",
        verdict=Verdict.PASS if change < threshold else Verdict.FAIL,
        values={"sup": sups[0], "sup_doubled": sups[1], "relative_change": change,
                "rows": profiles[1]},
    )
