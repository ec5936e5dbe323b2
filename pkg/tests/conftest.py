import numpy as np
import pytest

import otstorage as ot

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
TWO_TRIS = np.array([[0, 1, 2], [0, 2, 3]])


@pytest.fixture
def unit_square():
    return ot.ConvexPolygon(UNIT_SQUARE)


@pytest.fixture
def uniform_mesh():
    return ot.DensityMesh(UNIT_SQUARE, TWO_TRIS, np.ones(4))


@pytest.fixture
def two_point_sites():
    return np.array([[0.25, 0.5], [0.75, 0.5]])


@pytest.fixture
def two_point_instance(unit_square, uniform_mesh, two_point_sites):
    return ot.Instance(unit_square, two_point_sites, uniform_mesh,
                       np.array([0.98, 0.98]))


def random_instance(seed, n=None):
    """Seeded instance on the unit square with a random PWL density.

    Sites are drawn until every zero-dual cell carries mass well above the
    floor, so Jacobian finite-difference probes stay away from kinks.
    """
    rng = np.random.default_rng(seed)
    if n is None:
        n = int(rng.integers(2, 11))
    vals = rng.uniform(0.5, 2.0, 4)
    mesh = ot.DensityMesh(UNIT_SQUARE, TWO_TRIS, vals)
    total = mesh.total_mass()
    mesh = ot.DensityMesh(UNIT_SQUARE, TWO_TRIS, vals / total)
    dom = ot.ConvexPolygon(UNIT_SQUARE)
    for _ in range(50):
        sites = rng.uniform(0.1, 0.9, (n, 2))
        diag = ot.laguerre_cells(dom, sites, np.zeros(n))
        masses = ot.mass_vector(mesh, diag)
        if masses.min() > 0.5 / n:
            break
    u = rng.uniform(0.5, 1.5, n)
    caps = u / u.sum()
    return ot.Instance(dom, sites, mesh, caps)


@pytest.fixture
def instance_factory():
    return random_instance
