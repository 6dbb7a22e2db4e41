# dynamics/functional.py
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.logging import log_mc_diagnostic, logger
from liouville_lab.core.stats import mc_estimate
from liouville_lab.core.types import CheckResult, Verdict
from liouville_lab.cgf.field import FieldSample
from liouville_lab.dynamics.brownian import BrownianPath
from liouville_lab.gmc.measure import check_gamma

DIRICHLET_GAMMA_BOUND = 2.0


@dataclass(frozen=True)
class AdditiveFunctional:
    """A_t = ∫_0^t exp(γh_ℓ(B_s) − (γ²/2)k_ℓ(B_s,B_s)) ds along every path."""

    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    integrand: np.ndarray = field(repr=False)
    gamma: float
    ell: int

    @property
    def totals(self) -> np.ndarray:
        return self.values[:, -1]

    def to_rows(self, path: int = 0) -> list:
        return [[float(t), float(a)] for t, a in zip(self.times, self.values[path])]


def _field_on_path(path: BrownianPath, sample: FieldSample) -> tuple:
    spectrum = sample.spectrum
    flat = path.positions.reshape(-1, path.positions.shape[-1])
    psi = spectrum.eigenfunctions(flat, sample.ell)
    h = (psi @ sample.coeffs).reshape(path.positions.shape[:2])
    var = ((psi**2) @ (sample.basis.inverse_nu / sample.basis.a_n)).reshape(h.shape)
    return h, var


def additive_functional(path: BrownianPath, sample: FieldSample, gamma: float) -> AdditiveFunctional:
    """Trapezoidal time integral of the chaos density along the paths."""
    if sample.basis.manifold is not path.manifold:
        raise InvalidParameterError("field and paths live on different manifolds")
    check_gamma(gamma, path.manifold.dimension)
    if abs(gamma) >= DIRICHLET_GAMMA_BOUND:
        logger.warning("lbm_gamma_outside_dirichlet_regime", gamma=gamma)
    if gamma == 0.0:
        integrand = np.ones(path.positions.shape[:2])
    else:
        h, var = _field_on_path(path, sample)
        integrand = np.exp(gamma * h - 0.5 * gamma * gamma * var)
    values = cumulative_trapezoid(integrand, path.times, axis=1, initial=0.0)
    return AdditiveFunctional(
        times=path.times, values=values, integrand=integrand, gamma=gamma, ell=sample.ell
    )


@dataclass(frozen=True)
class LiouvillePath:
    """X_t = B_{τ_t} on a uniform clock grid shared by all paths."""

    times: np.ndarray = field(repr=False)
    tau: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)
    truncated: bool = False

    def to_rows(self, path: int = 0) -> list:
        return [[float(t), *map(float, x)] for t, x in zip(self.times, self.positions[path])]


def time_change(
    path: BrownianPath,
    functional: AdditiveFunctional,
    horizon: Optional[float] = None,
    steps: Optional[int] = None,
) -> LiouvillePath:
    """Piecewise-linear inverse τ of A and the time-changed positions.

    The clock grid is uniform on [0, horizon]; a horizon beyond the smallest
    A(T) is cut back to it and the result is flagged as truncated.
    """
    reach = float(np.min(functional.totals))
    horizon = reach if horizon is None else float(horizon)
    steps = path.times.size - 1 if steps is None else int(steps)
    if horizon <= 0 or steps < 1:
        raise InvalidParameterError("time change needs a positive horizon and at least one step")
    truncated = horizon > reach
    if truncated:
        logger.warning("time_change_truncated", requested=horizon, available=reach)
        horizon = reach
    clock = np.linspace(0.0, horizon, steps + 1)
    tau = np.stack([np.interp(clock, a, path.times) for a in functional.values])
    raw = np.empty((path.count, clock.size, path.raw.shape[-1]))
    for p in range(path.count):
        for d in range(raw.shape[-1]):
            raw[p, :, d] = np.interp(tau[p], path.times, path.raw[p, :, d])
    return LiouvillePath(
        times=clock, tau=tau, positions=path.manifold.project(raw), truncated=truncated
    )


def inverse_identity_residual(path: BrownianPath, functional: AdditiveFunctional) -> float:
    """max |τ(A(t_k)) − t_k| over the path nodes."""
    worst = 0.0
    for a in functional.values:
        worst = max(worst, float(np.max(np.abs(np.interp(a, a, path.times) - path.times))))
    return worst


def revuz_lhs(
    path: BrownianPath, functional: AdditiveFunctional, u_values: np.ndarray
) -> np.ndarray:
    """∫_0^T u(B_s) dA_s per path, for u given along the path positions."""
    return trapezoid(np.asarray(u_values) * functional.integrand, path.times, axis=1)


def revuz_rhs(
    manifold,
    x0: np.ndarray,
    horizon: float,
    grid_points: np.ndarray,
    measure_weights: np.ndarray,
    u_grid: np.ndarray,
    heat_cutoff: int,
) -> float:
    """∫_0^T ∫ u(y) p_s(x0, y) dμ(y) ds through the heat expansion in the Laplace basis."""
    blocks = manifold.laplace_spectrum(heat_cutoff).blocks
    lam = np.repeat([b.eigenvalue for b in blocks], [b.multiplicity for b in blocks])
    psi_grid = manifold.eigenfunctions(blocks, grid_points)
    psi_x0 = manifold.eigenfunctions(blocks, np.atleast_2d(x0))[0]
    projected = psi_grid.T @ (measure_weights * u_grid)
    time_weight = np.full(lam.size, float(horizon))
    positive = lam > 0
    time_weight[positive] = -np.expm1(-lam[positive] * horizon) / lam[positive]
    return float(np.sum(time_weight * psi_x0 * projected))


def revuz_check(
    path: BrownianPath,
    sample: FieldSample,
    gamma: float,
    u_coeffs: Optional[np.ndarray] = None,
    heat_cutoff: int = 12,
    sigmas: float = 4.0,
) -> CheckResult:
    """E_x∫_0^T u(B_s)dA_s against ∫_0^T∫u(y)p_s(x,y)dμ^h(y)ds for one field sample.

    ``u_coeffs`` are basis coefficients of a band-limited u; None means u = 1.
    """
    functional = additive_functional(path, sample, gamma)
    basis = sample.basis
    if u_coeffs is None:
        u_path = np.ones(path.positions.shape[:2])
        u_grid = np.ones(basis.grid.size)
    else:
        flat = path.positions.reshape(-1, path.positions.shape[-1])
        u_path = basis.evaluate(u_coeffs, flat).reshape(path.positions.shape[:2])
        u_grid = basis.synthesize(u_coeffs)
    weights = basis.weights * np.exp(gamma * sample.values - 0.5 * gamma * gamma * basis.diag_k)
    lhs = mc_estimate(revuz_lhs(path, functional, u_path))
    rhs = revuz_rhs(
        path.manifold, path.start, path.horizon, basis.grid.points, weights, u_grid, heat_cutoff
    )
    distance = lhs.sigmas_from(rhs)
    log_mc_diagnostic("revuz", lhs=lhs.value, rhs=rhs, sigmas=distance)
    return CheckResult(
        name="revuz",
        verdict=Verdict.PASS if distance <= sigmas else Verdict.FAIL,
        values={"path_side": lhs.as_row(), "heat_side": rhs, "sigmas": distance,
                "overlap": lhs.contains(rhs)},
    )
