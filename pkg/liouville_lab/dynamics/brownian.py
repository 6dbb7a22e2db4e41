# dynamics/brownian.py
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.stats import chisquare

from liouville_lab.core.config import settings
from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.logging import log_mc_diagnostic
from liouville_lab.core.parallel import chunk_ranges, ordered_map
from liouville_lab.core.rng import RngStream
from liouville_lab.core.stats import McEstimate, mc_estimate, two_sample_sigmas
from liouville_lab.core.types import CheckResult, Verdict
from liouville_lab.manifolds.base import ManifoldModel
from liouville_lab.manifolds.sphere import Sphere
from liouville_lab.manifolds.torus import FlatTorus

PATH_CHUNK = 64


@dataclass(frozen=True)
class BrownianPath:
    """Ensemble of Brownian paths with generator Δ on a common time grid.

    ``raw`` holds the ambient coordinates before projection (unwrapped on
    tori); ``positions`` are the projected points. Both have shape
    (paths, steps + 1, point_dim).
    """

    manifold: ManifoldModel
    times: np.ndarray = field(repr=False)
    raw: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return int(self.raw.shape[0])

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def start(self) -> np.ndarray:
        return self.positions[0, 0]

    def final_positions(self) -> np.ndarray:
        return self.positions[:, -1]

    def to_rows(self, path: int = 0) -> List[list]:
        return [[float(t), *map(float, x)] for t, x in zip(self.times, self.positions[path])]


def _time_grid(horizon: float, dt: float) -> np.ndarray:
    if horizon <= 0 or dt <= 0:
        raise InvalidParameterError("Brownian paths need T > 0 and δt > 0")
    steps = max(int(round(horizon / dt)), 1)
    return np.linspace(0.0, steps * dt, steps + 1)


def simulate_bm(
    manifold: ManifoldModel,
    x0: np.ndarray,
    horizon: float,
    dt: float,
    rng: RngStream,
    paths: int = 1,
    threads: Optional[int] = None,
) -> BrownianPath:
    """Brownian motion from ``x0`` by repeated ``manifold.brownian_step``.

    Flat tori get exact Gaussian increments of variance 2δt per axis; spheres
    take geodesic random-walk steps with O(δt) weak error. Path p reads its
    increments from ``rng.sample(p)``.
    """
    threads = settings.THREADS if threads is None else threads
    times = _time_grid(horizon, dt)
    steps = times.size - 1
    step_dt = float(times[1] - times[0])
    dim = manifold.ambient_noise_dim
    start = manifold.project(np.asarray(x0, dtype=float))

    def run(indices: range) -> np.ndarray:
        noise = np.stack([rng.sample(p).normals(0, steps * dim) for p in indices])
        noise = noise.reshape(len(indices), steps, dim)
        out = np.empty((len(indices), steps + 1, start.size))
        x = np.tile(start, (len(indices), 1))
        out[:, 0] = x
        for k in range(steps):
            x = manifold.brownian_step(x, step_dt, noise[:, k])
            out[:, k + 1] = x
        return out

    raw = np.concatenate(ordered_map(run, chunk_ranges(paths, PATH_CHUNK), threads), axis=0)
    return BrownianPath(manifold=manifold, times=times, raw=raw, positions=manifold.project(raw))


def mean_square_displacement(path: BrownianPath) -> McEstimate:
    """E|X_T − X_0|² in unwrapped coordinates."""
    delta = path.raw[:, -1] - path.raw[:, 0]
    return mc_estimate(np.sum(delta**2, axis=1))


def displacement_check(path: BrownianPath, sigmas: float = 4.0) -> CheckResult:
    """E|X_T − X_0|² = 2nT on a flat torus."""
    if not isinstance(path.manifold, FlatTorus):
        raise InvalidParameterError("the displacement law is checked on flat tori")
    estimate = mean_square_displacement(path)
    target = 2.0 * path.manifold.dimension * path.horizon
    distance = estimate.sigmas_from(target)
    return CheckResult(
        name="bm_displacement",
        verdict=Verdict.PASS if distance <= sigmas else Verdict.FAIL,
        values={"msd": estimate.as_row(), "target": target, "sigmas": distance},
    )


def polar_decay_check(path: BrownianPath, sigmas: float = 4.0) -> CheckResult:
    """E⟨X_T, x_0⟩/r = r·e^{−λ₁T} on a sphere, λ₁ = n/r²."""
    manifold = path.manifold
    if not isinstance(manifold, Sphere):
        raise InvalidParameterError("the polar decay law is checked on spheres")
    r = manifold.radius
    axis = path.start / r
    estimate = mc_estimate(path.final_positions() @ axis)
    target = r * math.exp(-manifold.dimension / r**2 * path.horizon)
    distance = estimate.sigmas_from(target)
    return CheckResult(
        name="bm_polar_decay",
        verdict=Verdict.PASS if distance <= sigmas else Verdict.FAIL,
        values={"mean": estimate.as_row(), "target": target, "sigmas": distance},
    )


def occupation_check(path: BrownianPath, bands: int = 10, p_min: float = 1e-3) -> CheckResult:
    """χ² test of final heights on S² against the uniform law (Archimedes)."""
    manifold = path.manifold
    if not isinstance(manifold, Sphere) or manifold.dimension != 2:
        raise InvalidParameterError("the occupation test runs on S²")
    z = path.final_positions()[:, -1] / manifold.radius
    counts, _ = np.histogram(z, bins=np.linspace(-1.0, 1.0, bands + 1))
    result = chisquare(counts)
    log_mc_diagnostic("bm_occupation", statistic=float(result.statistic), p=float(result.pvalue))
    return CheckResult(
        name="bm_occupation",
        verdict=Verdict.PASS if result.pvalue >= p_min else Verdict.FAIL,
        values={"counts": counts.tolist(), "statistic": float(result.statistic),
                "p_value": float(result.pvalue)},
    )


def step_halving_check(
    manifold: ManifoldModel,
    x0: np.ndarray,
    horizon: float,
    dt: float,
    rng: RngStream,
    paths: int,
    statistic: Callable[[BrownianPath], np.ndarray],
    sigmas: float = 4.0,
) -> CheckResult:
    """A path statistic at δt and δt/2 on independent ensembles."""
    coarse = simulate_bm(manifold, x0, horizon, dt, rng.child(0), paths)
    fine = simulate_bm(manifold, x0, horizon, dt / 2.0, rng.child(1), paths)
    a, b = mc_estimate(statistic(coarse)), mc_estimate(statistic(fine))
    distance = two_sample_sigmas(a, b)
    return CheckResult(
        name="bm_step_halving",
        verdict=Verdict.PASS if distance <= sigmas else Verdict.FAIL,
        values={"coarse": a.as_row(), "fine": b.as_row(), "sigmas": distance},
    )

