from liouville_lab.manifolds.admissibility import (
    admissibility_verdict,
    product_counterexample_spectrum,
)
from liouville_lab.manifolds.base import (
    LaplaceSpectrum,
    ManifoldModel,
    Partition,
    QuadratureGrid,
    SpectrumBlock,
)
from liouville_lab.manifolds.factory import ManifoldFactory, build_manifold
from liouville_lab.manifolds.product import ProductSurfaces
from liouville_lab.manifolds.sphere import Sphere
from liouville_lab.manifolds.torus import FlatTorus

__all__ = [
    "FlatTorus",
    "LaplaceSpectrum",
    "ManifoldFactory",
    "ManifoldModel",
    "Partition",
    "ProductSurfaces",
    "QuadratureGrid",
    "Sphere",
    "SpectrumBlock",
    "admissibility_verdict",
    "build_manifold",
    "product_counterexample_spectrum",
]
