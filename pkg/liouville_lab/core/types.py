# core/types.py

from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ManifoldKind(str, Enum):
    SPHERE = "sphere"
    FLAT_TORUS = "flat_torus"
    PRODUCT_SURFACES = "product_surfaces"


class KernelKind(str, Enum):
    COPOLY_GREEN = "copoly_green"
    NORMALIZED = "normalized"
    RESOLVENT = "resolvent"
    GROUNDED_RESOLVENT = "grounded_resolvent"
    HEAT = "heat"
    GROUNDED_HEAT = "grounded_heat"


class Flavor(str, Enum):
    PLAIN = "plain"
    REFINED = "refined"
    ADJUSTED = "adjusted"


class Scheme(str, Enum):
    EIGENFUNCTION = "eigenfunction"
    HEAT = "heat"
    PARTITION = "partition"
    BALL_AVERAGE = "ball_average"


class Admissibility(str, Enum):
    ADMISSIBLE = "admissible"
    NOT_ADMISSIBLE = "not_admissible"
    BOUNDARY = "boundary"


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


class ManifoldSpec(BaseModel):
    """Descriptor of a model manifold; geometry is attached by the factory."""

    model_config = ConfigDict(frozen=True)

    kind: ManifoldKind
    dimension: int = 2
    radius: float = 1.0
    side_lengths: Optional[Tuple[float, ...]] = None
    curvatures: Optional[Tuple[float, float]] = None

    @model_validator(mode="before")
    @classmethod
    def _fill_dimension(cls, data: Any) -> Any:
        if isinstance(data, dict):
            kind = str(getattr(data.get("kind"), "value", data.get("kind")))
            if kind == ManifoldKind.PRODUCT_SURFACES.value:
                data = {**data, "dimension": 4}
            elif kind == ManifoldKind.FLAT_TORUS.value and data.get("side_lengths"):
                data = {**data, "dimension": len(data["side_lengths"])}
        return data

    @classmethod
    def sphere(cls, n: int = 2, radius: float = 1.0) -> "ManifoldSpec":
        return cls(kind=ManifoldKind.SPHERE, dimension=n, radius=radius)

    @classmethod
    def torus(cls, sides: Tuple[float, ...]) -> "ManifoldSpec":
        return cls(
            kind=ManifoldKind.FLAT_TORUS,
            dimension=len(sides),
            side_lengths=tuple(float(s) for s in sides),
        )

    @classmethod
    def product(cls, k1: float, k2: float) -> "ManifoldSpec":
        return cls(
            kind=ManifoldKind.PRODUCT_SURFACES,
            dimension=4,
            curvatures=(float(k1), float(k2)),
        )


class CheckResult(BaseModel):
    """Outcome of a numerical identity check"""

    name: str
    verdict: Verdict
    values: Dict[str, Any] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == Verdict.PASS
