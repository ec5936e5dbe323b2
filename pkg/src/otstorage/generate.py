"""Seeded benchmark-instance generation.

All templates share the square domain [0, 3]^2, a fixed 18-triangle mesh on
the unit lattice of that square, and a jittered grid of sites inside
[0, 1]^2.  They differ in the vertex densities and the capacity vector:
"kmt-density" is classical (capacities sum to 1) with a density vanishing on
the center square; "disconnected" is classical with the density vanishing on
a full vertical strip, splitting its support in two; "storage-random" keeps
the center-vanishing density but draws capacities with total above 1.
"""

from __future__ import annotations

import numpy as np

from .geometry import ConvexPolygon
from .measure import DensityMesh
from .solver import Instance

TEMPLATES = ("kmt-density", "storage-random", "disconnected")

DOMAIN = ConvexPolygon([[0.0, 0.0], [3.0, 0.0], [3.0, 3.0], [0.0, 3.0]])


def lattice_mesh(values_at) -> DensityMesh:
    """18-triangle mesh on the 4x4 lattice {0,1,2,3}^2 over [0,3]^2.

    Each unit square splits along the diagonal pointing away from the
    domain center, keeping the layout symmetric under the square's
    symmetries.  values_at maps a lattice point (x, y) to a density value.
    """
    pts = np.array([[x, y] for y in range(4) for x in range(4)], float)

    def idx(x, y):
        return 4 * y + x

    tris = []
    for y in range(3):
        for x in range(3):
            a, b = idx(x, y), idx(x + 1, y)
            c, d = idx(x + 1, y + 1), idx(x, y + 1)
            if (x < 1.5) == (y < 1.5):
                tris.append([a, b, c])
                tris.append([a, c, d])
            else:
                tris.append([a, b, d])
                tris.append([b, c, d])
    vals = np.array([values_at(p[0], p[1]) for p in pts], float)
    mesh = DensityMesh(pts, np.array(tris), vals)
    total = mesh.total_mass()
    return DensityMesh(pts, mesh.triangles, vals / total)


def center_vanishing_mesh() -> DensityMesh:
    """Unit-mass density equal on the lattice boundary, zero on [1,2]^2."""
    return lattice_mesh(lambda x, y: 0.0 if 1 <= x <= 2 and 1 <= y <= 2 else 1.0)


def strip_vanishing_mesh() -> DensityMesh:
    """Unit-mass density zero on the strip [1,2]x[0,3]: disconnected support."""
    return lattice_mesh(lambda x, y: 0.0 if 1 <= x <= 2 else 1.0)


def jittered_sites(grid: int, rng: np.random.Generator) -> np.ndarray:
    """grid x grid points in [0,1]^2 with uniform jitter of +-0.2/grid."""
    ticks = (np.arange(grid) + 0.5) / grid
    xx, yy = np.meshgrid(ticks, ticks)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    return pts + rng.uniform(-0.2 / grid, 0.2 / grid, size=pts.shape)


def generate_instance(template: str, grid: int, seed: int) -> Instance:
    if template not in TEMPLATES:
        raise ValueError(f"unknown template {template!r}; choose from {TEMPLATES}")
    if grid < 2:
        raise ValueError("grid must be at least 2")
    rng = np.random.default_rng(seed)
    sites = jittered_sites(grid, rng)
    n = len(sites)
    if template == "disconnected":
        mesh = strip_vanishing_mesh()
    else:
        mesh = center_vanishing_mesh()
    if template == "storage-random":
        u = rng.uniform(0.5, 1.5, size=n)
        total = rng.uniform(1.2, 2.0)
        caps = u / u.sum() * total
    else:
        u = rng.uniform(0.5, 1.5, size=n)
        caps = u / u.sum()
    return Instance(DOMAIN, sites, mesh, caps)
