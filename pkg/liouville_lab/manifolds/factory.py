# manifolds/factory.py
from typing import Dict, Type

from liouville_lab.core.exceptions import InvalidParameterError
from liouville_lab.core.types import ManifoldKind, ManifoldSpec
from liouville_lab.manifolds.base import ManifoldModel
from liouville_lab.manifolds.product import ProductSurfaces
from liouville_lab.manifolds.sphere import Sphere
from liouville_lab.manifolds.torus import FlatTorus


class ManifoldFactory:
    _models: Dict[ManifoldKind, Type[ManifoldModel]] = {
        ManifoldKind.SPHERE: Sphere,
        ManifoldKind.FLAT_TORUS: FlatTorus,
        ManifoldKind.PRODUCT_SURFACES: ProductSurfaces,
    }

    # CLI shorthands
    _aliases: Dict[str, ManifoldSpec] = {
        "s2": ManifoldSpec.sphere(2),
        "s4": ManifoldSpec.sphere(4),
        "s6": ManifoldSpec.sphere(6),
        "t2": ManifoldSpec.torus((1.0, 1.0)),
        "t4": ManifoldSpec.torus((1.0, 1.0, 1.0, 1.0)),
        "s2xs2": ManifoldSpec.product(1.0, 0.2),
    }

    @classmethod
    def create(cls, spec: ManifoldSpec) -> ManifoldModel:
        validate_spec(spec)
        return cls._models[spec.kind](spec)

    @classmethod
    def from_alias(cls, alias: str) -> ManifoldSpec:
        spec = cls._aliases.get(alias.lower())
        if spec is None:
            raise InvalidParameterError(
                f"unknown manifold '{alias}', expected one of {sorted(cls._aliases)}"
            )
        return spec


def validate_spec(spec: ManifoldSpec) -> None:
    n = spec.dimension
    if n < 2 or n % 2:
        raise InvalidParameterError("even dimension required")
    if spec.kind == ManifoldKind.SPHERE and spec.radius <= 0:
        raise InvalidParameterError("sphere radius must be positive")
    if spec.kind == ManifoldKind.FLAT_TORUS:
        sides = spec.side_lengths or ()
        if len(sides) != n:
            raise InvalidParameterError("torus needs one side length per dimension")
        if any(s <= 0 for s in sides):
            raise InvalidParameterError("torus side lengths must be positive")
    if spec.kind == ManifoldKind.PRODUCT_SURFACES and spec.curvatures is None:
        raise InvalidParameterError("product of surfaces needs two curvatures")


def build_manifold(spec: ManifoldSpec) -> ManifoldModel:
    return ManifoldFactory.create(spec)
