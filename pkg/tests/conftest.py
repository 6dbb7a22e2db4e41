import pytest

from liouville_lab.core.logging import setup_logging
from liouville_lab.core.rng import RngStream
from liouville_lab.core.types import ManifoldSpec
from liouville_lab.manifolds.factory import build_manifold
from liouville_lab.spectral.basis import SpectralBasis, default_basis
from liouville_lab.spectral.gjms import gjms_spectrum


@pytest.fixture(scope="session", autouse=True)
def quiet_logging():
    setup_logging("WARNING", console=False)


@pytest.fixture
def rng():
    return RngStream(20241127)


@pytest.fixture(scope="session")
def s2():
    return build_manifold(ManifoldSpec.sphere(2))


@pytest.fixture(scope="session")
def s4():
    return build_manifold(ManifoldSpec.sphere(4))


@pytest.fixture(scope="session")
def t2():
    return build_manifold(ManifoldSpec.torus((1.0, 1.0)))


@pytest.fixture(scope="session")
def s2xs2():
    return build_manifold(ManifoldSpec.product(1.0, 0.2))


@pytest.fixture(scope="session")
def s2_spectrum(s2):
    return gjms_spectrum(s2, 6)


@pytest.fixture(scope="session")
def s2_basis(s2_spectrum):
    return default_basis(s2_spectrum)


@pytest.fixture(scope="session")
def t2_spectrum(t2):
    return gjms_spectrum(t2, 3)


@pytest.fixture(scope="session")
def t2_basis(t2, t2_spectrum):
    # finer grid than the band limit so quadrature of e^{γh} stays accurate
    return SpectralBasis(t2_spectrum, t2_spectrum.total_modes, t2.quadrature(24))


@pytest.fixture(scope="session")
def product_basis(s2xs2):
    return default_basis(gjms_spectrum(s2xs2, 2))
