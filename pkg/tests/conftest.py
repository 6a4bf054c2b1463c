import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from zerocurrents.bundle import connection_laplacian, flat_torus_bundle, trivial_bundle
from zerocurrents.mesh import laplacian_weights, make_flat_torus, make_sphere
from zerocurrents.spectral import eigensolve

settings.register_profile(
    "default",
    max_examples=100,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


def solve(bundle, k=None):
    weights = laplacian_weights(bundle.mesh)
    pair = connection_laplacian(bundle, weights)
    return pair, eigensolve(pair, bundle.mesh.n_vertices if k is None else k)


@pytest.fixture(scope="session")
def torus16():
    return make_flat_torus(16)


@pytest.fixture(scope="session")
def torus16_d1(torus16):
    bundle = flat_torus_bundle(torus16, 1)
    pair, spec = solve(bundle)
    return bundle, pair, spec


@pytest.fixture(scope="session")
def torus16_d3(torus16):
    bundle = flat_torus_bundle(torus16, 3)
    pair, spec = solve(bundle)
    return bundle, pair, spec


@pytest.fixture(scope="session")
def sphere3():
    return make_sphere(3)


@pytest.fixture(scope="session")
def sphere2_trivial():
    m = make_sphere(2)
    b = trivial_bundle(m)
    pair, spec = solve(b)
    return b, pair, spec


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance summary: one line per criterion at the end of the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
