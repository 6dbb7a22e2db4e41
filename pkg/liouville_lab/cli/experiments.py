# cli/experiments.py
import math
from abc import ABC, abstractmethod
from enum import Enum
from functools import cached_property
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from liouville_lab.core.config import settings
from liouville_lab.core.exceptions import LiouvilleLabError
from liouville_lab.core.rng import RngStream
from liouville_lab.core.types import Flavor, ManifoldSpec, Scheme, Verdict
from liouville_lab.cgf.field import field_covariance_check, sample_field
from liouville_lab.cgf.mollifiers import Mollifier
from liouville_lab.dynamics.brownian import simulate_bm
from liouville_lab.dynamics.functional import revuz_check
from liouville_lab.dynamics.operator import (
    energy_dissipation_check,
    nonnegativity_check,
    random_gjms_assemble,
)
from liouville_lab.gmc.checks import martingale_check, mean_mass_check
from liouville_lab.gmc.conformal import ConformalMeasure, conformal_measure_check
from liouville_lab.gmc.measure import FlavorData, LqgBuilder, check_gamma, ensemble_masses
from liouville_lab.gmc.scaling import ball_masks, ball_scaling_stats
from liouville_lab.manifolds.base import ManifoldModel
from liouville_lab.manifolds.factory import ManifoldFactory, build_manifold, validate_spec
from liouville_lab.polyakov.anomaly import conformal_anomaly_check
from liouville_lab.polyakov.partition import PolyakovParams, partition_function
from liouville_lab.polyakov.qcurvature import q_curvature
from liouville_lab.spectral.basis import SpectralBasis, default_basis
from liouville_lab.spectral.conformal import ConformalFactor
from liouville_lab.spectral.gjms import GjmsSpectrum, gjms_spectrum
from liouville_lab.spectral.kernels import log_divergence_check


class ExperimentKind(str, Enum):
    KERNEL_RESIDUAL = "kernel-residual"
    FIELD_COVARIANCE = "field-covariance"
    GMC_MASS = "gmc-mass"
    MARTINGALE = "martingale"
    CONFORMAL_MEASURE = "conformal-measure"
    BALL_SCALING = "ball-scaling"
    LBM_REVUZ = "lbm-revuz"
    RANDOM_OPERATOR = "random-operator"
    POLYAKOV = "polyakov"
    ANOMALY = "anomaly"


DEFAULT_MANIFOLDS = {
    ExperimentKind.LBM_REVUZ.value: "t2",
    ExperimentKind.ANOMALY.value: "s2xs2",
}
DEFAULT_FLAVORS = {ExperimentKind.ANOMALY.value: Flavor.ADJUSTED}


class ExperimentConfig(BaseModel):
    """One experiment run; every range is checked before any compute."""

    model_config = ConfigDict(extra="forbid")

    kind: ExperimentKind
    manifold: ManifoldSpec
    cutoff: int = 8
    ell: Optional[int] = None
    gamma: float = 1.0
    scheme: Scheme = Scheme.EIGENFUNCTION
    flavor: Flavor
    n: int = 1000
    seed: int = Field(default_factory=lambda: settings.DEFAULT_SEED)
    threads: int = Field(default_factory=lambda: settings.THREADS)
    out: Optional[str] = None
    params: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def _kind_defaults(cls, data: Any) -> Any:
        if isinstance(data, dict):
            kind = str(getattr(data.get("kind"), "value", data.get("kind")))
            data = {k: v for k, v in data.items() if v is not None or k in ("ell", "out")}
            data.setdefault("manifold", DEFAULT_MANIFOLDS.get(kind, "s2"))
            data.setdefault("flavor", DEFAULT_FLAVORS.get(kind, Flavor.PLAIN))
        return data

    @field_validator("manifold", mode="before")
    @classmethod
    def _alias(cls, v: Any) -> Any:
        if isinstance(v, str):
            try:
                return ManifoldFactory.from_alias(v)
            except LiouvilleLabError as e:
                raise ValueError(str(e)) from e
        return v

    @model_validator(mode="after")
    def _ranges(self) -> "ExperimentConfig":
        try:
            validate_spec(self.manifold)
            check_gamma(self.gamma, self.manifold.dimension)
        except LiouvilleLabError as e:
            raise ValueError(str(e)) from e
        if self.cutoff < 1:
            raise ValueError("cutoff must be ≥ 1")
        if self.ell is not None and self.ell < 1:
            raise ValueError("ℓ must be ≥ 1")
        if self.n < 2:
            raise ValueError("sample count n must be ≥ 2")
        if self.threads < 1:
            raise ValueError("threads must be ≥ 1")
        return self

    def param(self, name: str, default: Any) -> Any:
        return self.params.get(name, default)


class ExperimentResult(BaseModel):
    header: List[str]
    rows: List[List[Any]]
    verdict: Verdict
    summary: Dict[str, Any] = Field(default_factory=dict)


def _combine(*verdicts: Verdict) -> Verdict:
    if any(v == Verdict.FAIL for v in verdicts):
        return Verdict.FAIL
    if any(v == Verdict.INCONCLUSIVE for v in verdicts):
        return Verdict.INCONCLUSIVE
    return Verdict.PASS


class BaseExperiment(ABC):
    kind: ExperimentKind
    identity: str
    reference: str

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.rng = RngStream(config.seed)

    @cached_property
    def manifold(self) -> ManifoldModel:
        return build_manifold(self.config.manifold)

    @cached_property
    def spectrum(self) -> GjmsSpectrum:
        return gjms_spectrum(self.manifold, self.config.cutoff)

    @cached_property
    def basis(self) -> SpectralBasis:
        return default_basis(self.spectrum, self.config.ell)

    @cached_property
    def flavor_data(self) -> FlavorData:
        """r_g from the kernel ladder unless the config pins ``params.r``."""
        r = self.config.param("r", None)
        if r is not None:
            return FlavorData.constant(self.basis, r)
        return FlavorData.estimate(self.basis, steps=int(self.config.param("r_steps", 5)))

    def builder(self, flavor: Optional[Flavor] = None) -> LqgBuilder:
        flavor = self.config.flavor if flavor is None else flavor
        data = None if flavor == Flavor.PLAIN else self.flavor_data
        mollifier = Mollifier(
            self.basis,
            self.config.scheme,
            t=self.config.param("t", None),
            radius=self.config.param("radius", None),
            cells=self.config.param("cells", None),
        )
        return LqgBuilder(mollifier, self.config.gamma, flavor, data)

    def factor(self, amplitude: float) -> ConformalFactor:
        phi = self.basis.random_band_limited(self.rng.child(99).sample(0), amplitude)
        return ConformalFactor(self.basis, phi)

    @abstractmethod
    def run(self) -> ExperimentResult: ...


class KernelResidualExperiment(BaseExperiment):
    kind = ExperimentKind.KERNEL_RESIDUAL
    identity = "k_g(x,y) − log(1/d) stays bounded as the truncation doubles"
    reference = "logarithmic divergence of the normalized kernel"

    def run(self) -> ExperimentResult:
        check = log_divergence_check(
            self.manifold, self.config.cutoff, d_min=self.config.param("d_min", 0.05)
        )
        return ExperimentResult(
            header=["d", "kernel", "residual"],
            rows=check.values["rows"],
            verdict=check.verdict,
            summary={k: v for k, v in check.values.items() if k != "rows"},
        )


class FieldCovarianceExperiment(BaseExperiment):
    kind = ExperimentKind.FIELD_COVARIANCE
    identity = "Cov[⟨h,u⟩, ⟨h,v⟩] = 𝔨(u, v)"
    reference = "covariance of the co-polyharmonic Gaussian field"

    def run(self) -> ExperimentResult:
        pairs = []
        for k in range(int(self.config.param("pairs", 5))):
            u = self.basis.random_band_limited(self.rng.child(10 + k).sample(0))
            v = self.basis.random_band_limited(self.rng.child(10 + k).sample(1))
            pairs.append((u, v))
        check = field_covariance_check(
            self.basis, pairs, self.config.n, self.rng.child(0), self.config.param("sigmas", 3.0)
        )
        rows = [[i, *row] for i, row in enumerate(check.values["rows"])]
        return ExperimentResult(
            header=["pair", "covariance", "stderr", "target", "sigmas"],
            rows=rows,
            verdict=check.verdict,
            summary={"worst_sigmas": check.values["worst_sigmas"]},
        )


class GmcMassExperiment(BaseExperiment):
    kind = ExperimentKind.GMC_MASS
    identity = "E[μ(M)] = vol(M)"
    reference = "unit mean of the chaos measure"

    def run(self) -> ExperimentResult:
        builder = self.builder(Flavor.PLAIN)
        masses = ensemble_masses(builder, self.rng.child(0), self.config.n)[:, 0]
        check = mean_mass_check(
            builder, self.config.n, self.rng.child(0), self.config.param("sigmas", 3.0), masses
        )
        return ExperimentResult(
            header=["sample", "mass"],
            rows=[[i, float(m)] for i, m in enumerate(masses)],
            verdict=check.verdict,
            summary=check.values,
        )


class MartingaleExperiment(BaseExperiment):
    kind = ExperimentKind.MARTINGALE
    identity = "E[μ_{ℓ2}(B) | ξ_1..ξ_{ℓ1}] = μ_{ℓ1}(B)"
    reference = "martingale property of the truncated measures"

    def run(self) -> ExperimentResult:
        basis = self.basis
        center = self.manifold.reference_point()
        mask = self.manifold.ball_mask(basis.grid, center, self.config.param("radius", 1.0))
        report = martingale_check(
            basis,
            self.config.gamma,
            mask,
            int(self.config.param("ell1", max(basis.ell // 4, 1))),
            int(self.config.param("outer", self.config.n)),
            int(self.config.param("inner", 200)),
            self.rng.child(0),
        )
        return ExperimentResult(
            header=["slope", "slope_stderr", "intercept", "intercept_stderr"],
            rows=[[report.slope, report.slope_stderr, report.intercept, report.intercept_stderr]],
            verdict=report.verdict,
            summary=report.model_dump(mode="json"),
        )


class ConformalMeasureExperiment(BaseExperiment):
    kind = ExperimentKind.CONFORMAL_MEASURE
    identity = "μ^{h'}_{g'} = e^F·μ^h_g in law"
    reference = "conformal covariance of the LQG measure"

    def run(self) -> ExperimentResult:
        factor = self.factor(self.config.param("amplitude", 0.2))
        transform = ConformalMeasure(self.builder(Flavor.PLAIN), factor)
        centers = self.manifold.random_points(self.rng.child(98), 3)
        masks = ball_masks(transform.builder, centers, [self.config.param("radius", 1.0)])
        check = conformal_measure_check(
            transform, masks, self.config.n, self.rng.child(0), self.config.param("sigmas", 3.0)
        )
        return ExperimentResult(
            header=["subset", "power", "transformed", "transformed_stderr", "direct",
                    "direct_stderr", "sigmas"],
            rows=check.values["rows"],
            verdict=check.verdict,
            summary={k: v for k, v in check.values.items() if k != "rows"},
        )


class BallScalingExperiment(BaseExperiment):
    kind = ExperimentKind.BALL_SCALING
    identity = "log μ(B_r(x)) against log r"
    reference = "volume scaling of small balls"

    def run(self) -> ExperimentResult:
        radii = np.geomspace(
            self.config.param("r_min", 0.1), self.config.param("r_max", 0.5),
            int(self.config.param("radii", 5)),
        )
        centers = self.manifold.random_points(self.rng.child(98), int(self.config.param("centers", 40)))
        report = ball_scaling_stats(
            self.builder(Flavor.PLAIN), centers, radii, self.config.n, self.rng.child(0)
        )
        rows = [[r, m, *q] for r, m, q in
                zip(report.radii, report.mean_mass, np.asarray(report.quantile_mass).T.tolist())]
        return ExperimentResult(
            header=["radius", "mean_mass", *[f"q{q:g}" for q in report.quantiles]],
            rows=rows,
            verdict=report.verdict,
            summary=report.model_dump(mode="json", exclude={"quantile_mass"}),
        )


class LbmRevuzExperiment(BaseExperiment):
    kind = ExperimentKind.LBM_REVUZ
    identity = "E_x∫u(B)dA = ∫∫u(y)p_s(x,y)dμ^h(y)ds"
    reference = "Revuz measure of Liouville Brownian motion"

    @cached_property
    def basis(self) -> SpectralBasis:
        ell = self.spectrum.total_modes if self.config.ell is None else self.config.ell
        resolution = max(self.spectrum.max_mode_index(ell), int(self.config.param("grid", 24)))
        grid = self.manifold.quadrature(resolution)
        return SpectralBasis(self.spectrum, ell, grid)

    def run(self) -> ExperimentResult:
        sample = sample_field(self.spectrum, self.basis.ell, self.rng.child(1), self.basis)
        path = simulate_bm(
            self.manifold,
            self.manifold.reference_point(),
            self.config.param("horizon", 1.0),
            self.config.param("dt", 0.01),
            self.rng.child(0),
            self.config.n,
        )
        u = self.basis.random_band_limited(self.rng.child(2).sample(0))
        u[0] = self.basis.constant(1.0)[0]
        heat_cutoff = int(self.config.param("heat_cutoff", 12))
        checks = [
            revuz_check(path, sample, self.config.gamma, None, heat_cutoff),
            revuz_check(path, sample, self.config.gamma, u, heat_cutoff),
        ]
        rows = [[name, c.values["path_side"]["value"], c.values["path_side"]["stderr"],
                 c.values["heat_side"], c.values["sigmas"]]
                for name, c in zip(["one", "band_limited"], checks)]
        return ExperimentResult(
            header=["u", "path_side", "stderr", "heat_side", "sigmas"],
            rows=rows,
            verdict=_combine(*(c.verdict for c in checks)),
        )


class RandomOperatorExperiment(BaseExperiment):
    kind = ExperimentKind.RANDOM_OPERATOR
    identity = "Galerkin P^h: nonnegative spectrum and energy dissipation"
    reference = "random GJMS operator and its Dirichlet form"

    def run(self) -> ExperimentResult:
        builder = self.builder(Flavor.PLAIN)
        sample = sample_field(self.spectrum, self.basis.ell, self.rng.child(1), self.basis)
        op = random_gjms_assemble(self.basis, builder.build(sample))
        u0 = self.basis.random_band_limited(self.rng.child(2).sample(0))
        u0[0] = 1.0
        dissipation = energy_dissipation_check(op, u0, self.config.param("times", [0.01, 0.05, 0.1, 0.5]))
        nonnegative = nonnegativity_check(
            builder, int(self.config.param("samples", 100)), self.rng.child(0)
        )
        return ExperimentResult(
            header=["index", "theta"],
            rows=op.spectrum_rows(),
            verdict=_combine(dissipation.verdict, nonnegative.verdict),
            summary={
                "regularization": op.regularization,
                "max_relative_error": dissipation.values["max_relative_error"],
                "mass_drift": dissipation.values["mass_drift"],
                "min_relative_theta": nonnegative.values["min_relative_theta"],
            },
        )


class PolyakovExperiment(BaseExperiment):
    kind = ExperimentKind.POLYAKOV
    identity = "a-integration against the Γ reduction of Z*"
    reference = "Γ reduction of the Polyakov partition function"

    def run(self) -> ExperimentResult:
        q = q_curvature(self.manifold)
        params = PolyakovParams(
            gamma=self.config.gamma,
            theta=self.config.param("theta", -1.0 / (4.0 * math.pi)),
            theta_star=self.config.param("theta_star", 0.0),
            m=self.config.param("m", 1.0),
            flavor=self.config.flavor,
        )
        report = partition_function(params, self.builder(), q, self.config.n, self.rng)
        rows = [["A", report.route_a.value, report.route_a.stderr, report.route_a.ci_low,
                 report.route_a.ci_high],
                ["B", report.route_b.value, report.route_b.stderr, report.route_b.ci_low,
                 report.route_b.ci_high]]
        return ExperimentResult(
            header=["route", "value", "stderr", "ci_low", "ci_high"],
            rows=rows,
            verdict=report.verdict,
            summary={**report.summary(), "beta": report.beta, "sigmas": report.sigmas},
        )


class AnomalyExperiment(BaseExperiment):
    kind = ExperimentKind.ANOMALY
    identity = "Z*_{g'}/Z*_g against the closed-form anomaly"
    reference = "conformal anomaly of the Polyakov partition function"

    def run(self) -> ExperimentResult:
        q = q_curvature(self.manifold)
        factor = self.factor(self.config.param("amplitude", 0.1))
        params = PolyakovParams.special(
            self.manifold.dimension, self.config.gamma, self.config.flavor,
            self.config.param("m", 1.0),
        )
        report = conformal_anomaly_check(
            params, self.builder(), factor, q, self.config.n, self.rng,
            enforce_gate=bool(self.config.param("enforce_gate", True)),
        )
        est = report.estimate
        return ExperimentResult(
            header=["predicted", "estimate", "stderr", "ci_low", "ci_high", "sigmas"],
            rows=[[report.predicted, est.value, est.stderr, est.ci_low, est.ci_high, report.sigmas]],
            verdict=report.verdict,
            summary={**report.summary(), "required_samples": report.required_samples},
        )
